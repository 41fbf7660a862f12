"""Plain-text ``key = value`` configuration with typed defaults."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import DomainError
from .ifs import MAX_SAMPLE_DEPTH


@dataclass(frozen=True)
class Config:
    render_depth: int = 25
    membership_depth: int = 30
    sample_depth: int = 16
    hull_k_max: int = 12
    max_branches: int = 1024
    order_tol: float = 1e-5
    solve_tol: float = 1e-10
    margin_tol: float = 1e-9
    search_radius: float = 0.05
    threads: int = 0  # 0: LOCUSLAB_THREADS or the CPU count
    output_dir: str = "."

    def __post_init__(self):
        for name in ("order_tol", "solve_tol", "margin_tol", "search_radius"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not 1 <= self.sample_depth <= MAX_SAMPLE_DEPTH:
            raise DomainError(f"sample_depth must lie in [1, {MAX_SAMPLE_DEPTH}]")
        for name in ("render_depth", "membership_depth", "hull_k_max"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if self.threads < 0 or self.max_branches < 0:
            raise DomainError("threads and max_branches must be non-negative")

    def with_overrides(self, **kw) -> "Config":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def thread_count(self) -> int:
        if self.threads:
            return self.threads
        env = os.environ.get("LOCUSLAB_THREADS")
        return int(env) if env else (os.cpu_count() or 1)

    def as_dict(self) -> dict:
        return asdict(self)


def parse_config(text: str) -> Config:
    types = {f.name: f.type for f in fields(Config)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        cast = {"int": int, "float": float, "str": str}[types[key]]
        values[key] = cast(val)
    return Config(**values)


def load_config(path: str | os.PathLike | None) -> Config:
    if path is None:
        return Config()
    return parse_config(Path(path).read_text())

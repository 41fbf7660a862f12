"""Escape-time membership for the locus and a tiled renderer.

A parameter pair belongs to the locus iff some series ``f`` with
coefficients in ``{-1, 0, 1}`` and constant term 1 vanishes at both
coordinates.  Writing ``r_n = f_n(x) / x^n`` for the scaled truncation, the
recurrence ``r_{n+1} = r_n / x + b`` walks down the coefficient tree and the
tail bound ``|f - f_n| <= |x|^(n+1) / (1 - |x|)`` shows that no extension can
vanish once ``|r_n| > |x| / (1 - |x|)``.  A breadth-first search over residue
pairs therefore either runs out of branches (escape, which is sound) or keeps
at least one branch to ``max_depth`` (survival, which is evidence only).
"""
from __future__ import annotations

import os
import re
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import DomainError
from .ifs import Params

SURVIVED, ESCAPED = "survived", "escaped"
DEFAULT_CAP = 1024
_CLIP = 1 - 1e-9


class EscapeResult(NamedTuple):
    status: str
    depth: int
    branch_count_peak: int

    @property
    def survived(self) -> bool:
        return self.status == SURVIVED


@njit(cache=True, nogil=True)
def _dedup(cg, cl, q):
    k = cg.shape[0]
    kx = np.floor(cg / q).astype(np.int64)
    ky = np.floor(cl / q).astype(np.int64)
    key = kx * 4294967296 + ky
    order = np.argsort(key)
    keep = np.empty(k, np.int64)
    m = 0
    for j in range(k):
        idx = order[j]
        if j == 0 or key[idx] != key[order[j - 1]]:
            keep[m] = idx
            m += 1
    keep = np.sort(keep[:m])
    return cg[keep], cl[keep]


@njit(cache=True, nogil=True)
def _escape_real(g, l, max_depth, q, cap):
    bg = abs(g) / (1 - abs(g))
    bl = abs(l) / (1 - abs(l))
    if 1.0 > bg or 1.0 > bl:
        return 0, 0, 1
    rg = np.ones(1)
    rl = np.ones(1)
    peak = 1
    for n in range(1, max_depth + 1):
        F = rg.shape[0]
        cg = np.empty(3 * F)
        cl = np.empty(3 * F)
        k = 0
        for i in range(F):
            a = rg[i] / g
            b = rl[i] / l
            for d in (-1.0, 0.0, 1.0):
                x = a + d
                y = b + d
                if abs(x) <= bg and abs(y) <= bl:
                    cg[k] = x
                    cl[k] = y
                    k += 1
        if k == 0:
            return 0, n, peak
        cg = cg[:k]
        cl = cl[:k]
        if q > 0:
            cg, cl = _dedup(cg, cl, q)
        if cap > 0 and cg.shape[0] > cap:
            # keep the branches deepest inside the box
            score = np.maximum(np.abs(cg) / bg, np.abs(cl) / bl)
            o = np.sort(np.argsort(score, kind="mergesort")[:cap])
            cg = cg[o]
            cl = cl[o]
        rg = cg
        rl = cl
        if rg.shape[0] > peak:
            peak = rg.shape[0]
    return 1, max_depth, peak


@njit(cache=True, nogil=True)
def _escape_complex(z, max_depth, q, cap):
    bound = abs(z) / (1 - abs(z))
    if 1.0 > bound:
        return 0, 0, 1
    r = np.ones(1, dtype=np.complex128)
    peak = 1
    for n in range(1, max_depth + 1):
        F = r.shape[0]
        c = np.empty(3 * F, dtype=np.complex128)
        k = 0
        for i in range(F):
            a = r[i] / z
            for d in (-1.0, 0.0, 1.0):
                x = a + d
                if abs(x) <= bound:
                    c[k] = x
                    k += 1
        if k == 0:
            return 0, n, peak
        c = c[:k]
        if q > 0:
            re, im = _dedup(c.real.copy(), c.imag.copy(), q)
            c = re + 1j * im
        if cap > 0 and c.shape[0] > cap:
            o = np.sort(np.argsort(np.abs(c), kind="mergesort")[:cap])
            c = c[o]
        r = c
        if r.shape[0] > peak:
            peak = r.shape[0]
    return 1, max_depth, peak


def default_dedup(contraction: float) -> float:
    return (1 - contraction) * 1e-4


def membership(
    params: Params,
    max_depth: int,
    dedup_q: float | None = None,
    max_branches: int = DEFAULT_CAP,
) -> EscapeResult:
    """Escape-time test at ``params``.

    ``dedup_q=None`` picks ``(1 - L) * 1e-4``; ``0`` disables merging.
    ``max_branches=0`` removes the frontier cap.  Neither option can turn a
    true escape into survival: merging and capping only drop branches.
    """
    params.require_invertible()
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    q = default_dedup(params.contraction) if dedup_q is None else float(dedup_q)
    s, d, peak = _escape_real(params.gamma, params.lam, int(max_depth), q, int(max_branches))
    return EscapeResult(SURVIVED if s else ESCAPED, int(d), int(peak))


def membership_M(z: complex, max_depth: int, dedup_q: float | None = None, max_branches: int = DEFAULT_CAP) -> EscapeResult:
    """Cross-check variant for a single complex root ``z``."""
    z = complex(z)
    if z == 0:
        raise DomainError("z = 0 is a singular parameter")
    if abs(z) >= 1:
        raise DomainError(f"|z| = {abs(z)} must be below 1")
    q = default_dedup(abs(z)) if dedup_q is None else float(dedup_q)
    s, d, peak = _escape_complex(z, int(max_depth), q, int(max_branches))
    return EscapeResult(SURVIVED if s else ESCAPED, int(d), int(peak))


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

BLACK, GRAY, WHITE = 0, 128, 255


@dataclass(frozen=True)
class RenderJob:
    """``window = (x0, x1, y0, y1)`` in (gamma, lam); rows run top (y1) to bottom."""

    window: tuple[float, float, float, float]
    resolution: int
    max_depth: int
    tile: int = 64

    def __post_init__(self):
        x0, x1, y0, y1 = (float(v) for v in self.window)
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"empty window {self.window}")
        if self.resolution < 1 or self.tile < 1:
            raise ValueError("resolution and tile must be positive")
        if self.resolution % self.tile:
            raise ValueError(f"tile {self.tile} does not divide resolution {self.resolution}")
        object.__setattr__(self, "window", (x0, x1, y0, y1))

    def pixel_centres(self) -> tuple[np.ndarray, np.ndarray]:
        x0, x1, y0, y1 = self.window
        n = self.resolution
        xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
        ys = y1 - (np.arange(n) + 0.5) * (y1 - y0) / n
        return xs, ys


def _clip_window(job: RenderJob) -> RenderJob:
    x0, x1, y0, y1 = job.window
    clipped = tuple(min(max(v, -_CLIP), _CLIP) for v in (x0, x1, y0, y1))
    if clipped != job.window:
        warnings.warn(f"render window {job.window} clipped to the open square", stacklevel=3)
        return RenderJob(clipped, job.resolution, job.max_depth, job.tile)
    return job


def thread_count() -> int:
    env = os.environ.get("LOCUSLAB_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("LOCUSLAB_THREADS must be positive")
        return n
    return os.cpu_count() or 1


def _render_tile(job: RenderJob, xs, ys, r0, c0, palette, q_scale, cap):
    t = job.tile
    out = np.empty((t, t), dtype=np.uint8)
    for i in range(t):
        l = ys[r0 + i]
        for j in range(t):
            g = xs[c0 + j]
            if abs(g * l) >= 0.5:
                # connected by the volume argument; skip the search
                out[i, j] = GRAY
                continue
            if g == 0 or l == 0:
                out[i, j] = WHITE
                continue
            L = max(abs(g), abs(l))
            s, d, _ = _escape_real(g, l, job.max_depth, (1 - L) * q_scale, cap)
            if palette == "binary":
                out[i, j] = BLACK if s else WHITE
            else:
                v = WHITE - int(round((WHITE - 1) * d / max(job.max_depth, 1)))
                out[i, j] = BLACK if s else (v + 1 if v == GRAY else v)  # gray is reserved
    return r0, c0, out


def render(job: RenderJob, palette: str = "binary", threads: int | None = None, max_branches: int = DEFAULT_CAP) -> np.ndarray:
    """Render ``job`` into a ``resolution x resolution`` uint8 image.

    ``binary``: survived black, trivial region gray, escaped white.
    ``escape_depth``: survived black, escaped pixels get lighter the earlier
    they escape, trivial region gray.
    """
    if palette in ("depth",):
        palette = "escape_depth"
    if palette not in ("binary", "escape_depth"):
        raise ValueError(f"unknown palette {palette!r}")
    job = _clip_window(job)
    xs, ys = job.pixel_centres()
    n, t = job.resolution, job.tile
    tiles = [(r, c) for r in range(0, n, t) for c in range(0, n, t)]
    img = np.empty((n, n), dtype=np.uint8)
    workers = threads or thread_count()
    cap = int(max_branches)
    # compile once before fanning out
    _escape_real(0.6, 0.6, 1, 1e-5, cap)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(_render_tile, job, xs, ys, r, c, palette, 1e-4, cap) for r, c in tiles]
        for fut in futs:
            r0, c0, block = fut.result()
            img[r0:r0 + t, c0:c0 + t] = block
    return img


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError("not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError("only 8-bit PGM is supported")
    return np.frombuffer(data[m.end(): m.end() + w * h], dtype=np.uint8).reshape(h, w)


def write_png(path, img: np.ndarray) -> None:
    from PIL import Image

    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path)


def trivial_mask(job: RenderJob) -> np.ndarray:
    xs, ys = job.pixel_centres()
    return np.abs(ys[:, None] * xs[None, :]) >= 0.5


__all__ = [
    "EscapeResult",
    "RenderJob",
    "membership",
    "membership_M",
    "render",
    "write_pgm",
    "read_pgm",
    "write_png",
    "trivial_mask",
    "thread_count",
    "SURVIVED",
    "ESCAPED",
]

"""``locus-lab`` command line.

Exit codes: 0 on success, 1 on domain or pipeline errors, 2 on usage errors.
Every command writes its result to a file and prints one summary line.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .bseries import TAILS, BSeries
from .config import load_config
from .errors import LocusError

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


def _floats(text: str, n: int) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _out_path(cfg, out: str) -> Path:
    p = Path(out)
    if not p.is_absolute():
        p = Path(cfg.output_dir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_render(args, cfg) -> int:
    from .escape import RenderJob, render, write_pgm, write_png

    job = RenderJob(args.window, args.res, args.depth if args.depth is not None else cfg.render_depth, args.tile or _tile_for(args.res))
    img = render(job, palette=args.palette, threads=args.threads or cfg.thread_count(), max_branches=cfg.max_branches)
    out = _out_path(cfg, args.out)
    write_pgm(out, img)
    extra = ""
    if args.png:
        png = out.with_suffix(".png")
        write_png(png, img)
        extra = f" and {png}"
    black = float((img == 0).mean())
    gray = float((img == 128).mean())
    print(f"render: {args.res}x{args.res} depth {job.max_depth} -> {out}{extra} (black {black:.3f}, gray {gray:.3f})")
    return EXIT_OK


def _tile_for(res: int) -> int:
    for t in (64, 32, 16, 8, 4, 2, 1):
        if res % t == 0:
            return t
    return 1


def cmd_attractor(args, cfg) -> int:
    from .ifs import Params, attractor_sample

    params = Params.parse(args.params)
    depth = args.depth or cfg.sample_depth
    s = attractor_sample(params, depth)
    pts = s.anchored() if args.anchored else s.points
    payload = {
        "params": [params.gamma, params.lam],
        "depth": depth,
        "anchored": bool(args.anchored),
        "truncation_radius": s.radius,
        "points": pts.tolist(),
    }
    out = _out_path(cfg, args.out)
    _write_json(out, payload)
    print(f"attractor: {len(pts)} points at depth {depth} -> {out}")
    return EXIT_OK


def cmd_hull(args, cfg) -> int:
    from .hull import analytic_vertices, numeric_hull
    from .ifs import Params, attractor_sample

    params = Params.parse(args.params)
    k = args.k_max if args.k_max is not None else cfg.hull_k_max
    if args.numeric or params.gamma * params.lam >= 0:
        poly = numeric_hull(attractor_sample(params, args.depth or cfg.sample_depth).points)
        records = [{"address": None, "x": float(x), "y": float(y)} for x, y in poly]
        kind = "numeric"
    else:
        records = analytic_vertices(params, k).to_records()
        kind = "analytic"
    out = _out_path(cfg, args.out)
    _write_json(out, records)
    print(f"hull: {len(records)} {kind} vertices -> {out}")
    return EXIT_OK


def cmd_certify(args, cfg) -> int:
    from .ifs import Params
    from .traps import certify_interior

    params = Params.parse(args.params)
    f = BSeries.parse(args.series)
    radius = args.radius or cfg.search_radius
    certs, trace = certify_interior(params, f, radius, max_certificates=args.count)
    out = _out_path(cfg, args.out)
    _write_json(out, {"certificates": [c.to_dict() for c in certs], "trace": trace})
    if not certs:
        print(f"certify: no certificate near ({params}) after {len(trace)} attempts -> {out}")
        return EXIT_DOMAIN
    c = certs[0]
    print(
        f"certify: {len(certs)} certificate(s); M={c.order_m} at ({c.params_solved}) "
        f"min margin {c.min_margin:.3g} (non-rigorous) -> {out}"
    )
    return EXIT_OK


def cmd_screen(args, cfg) -> int:
    from .screen import apply_constraints, enumerate_candidates

    cands = enumerate_candidates(args.mmax, args.tail)
    rows = []
    for c in cands:
        status, reason = apply_constraints(c)
        d = c.to_dict()
        d["status"] = status
        d["reason"] = reason
        rows.append(d)
    out = _out_path(cfg, args.out)
    _write_json(out, rows)
    kept = sum(r["status"] == "kept" for r in rows)
    print(f"screen: {len(rows)} candidate(s), {kept} kept, tail {args.tail}, m_max {args.mmax} -> {out}")
    return EXIT_OK


def cmd_selftest(args, cfg) -> int:
    from .selftest import run_checks

    results = run_checks(quick=not args.full)
    failed = [name for name, ok, _ in results if not ok]
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"selftest: {len(results) - len(failed)}/{len(results)} passed")
    return EXIT_OK if not failed else EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="locus-lab", description="Connectedness locus toolkit for diagonal plane IFS pairs.")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--output-dir", help="directory for relative output paths")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="escape-time image of a parameter window")
    r.add_argument("--window", type=lambda s: _floats(s, 4), required=True, help="x0,x1,y0,y1")
    r.add_argument("--res", type=int, required=True)
    r.add_argument("--depth", type=int)
    r.add_argument("--palette", choices=["binary", "depth"], default="binary")
    r.add_argument("--tile", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--png", action="store_true", help="also write a PNG next to the PGM")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)

    a = sub.add_parser("attractor", help="export an attractor sample as JSON")
    a.add_argument("--params", required=True, help="gamma,lambda")
    a.add_argument("--depth", type=int)
    a.add_argument("--anchored", action="store_true", help="genuine points pi(u p^inf) instead of cylinder centres")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_attractor)

    h = sub.add_parser("hull", help="export hull vertices as JSON")
    h.add_argument("--params", required=True)
    h.add_argument("--k-max", type=int)
    h.add_argument("--depth", type=int)
    h.add_argument("--numeric", action="store_true")
    h.add_argument("--out", required=True)
    h.set_defaults(func=cmd_hull)

    c = sub.add_parser("certify", help="search for trap certificates near a parameter")
    c.add_argument("--params", required=True)
    c.add_argument("--series", required=True, help='e.g. "++---0--"')
    c.add_argument("--radius", type=float)
    c.add_argument("--count", type=int, default=1)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("screen", help="enumerate and filter outlier candidates")
    s.add_argument("--mmax", type=int, required=True)
    s.add_argument("--tail", choices=TAILS, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_screen)

    t = sub.add_parser("selftest", help="run the built-in property checks")
    t.add_argument("--full", action="store_true", help="larger sample sizes")
    t.set_defaults(func=cmd_selftest)
    return p


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--params -0.7,0.6`` into ``--params=-0.7,0.6``; argparse reads the bare form as a flag."""
    out: list[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and re.fullmatch(r"-[\d.][\d.,eE+-]*", tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        if args.output_dir:
            cfg = cfg.with_overrides(output_dir=args.output_dir)
        return args.func(args, cfg)
    except (LocusError, ValueError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

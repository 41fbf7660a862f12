"""Fast property checks bundled with the package (``locus-lab selftest``)."""
from __future__ import annotations

import numpy as np

from .bseries import TAILS, BSeries, companion_roots, find_real_zeros, root_product_bound, tail_polynomial
from .escape import membership
from .hull import analytic_vertices, hausdorff_one_sided, numeric_hull
from .ifs import Params, SignedWord, attractor_sample, eval_address


def _sample_params(rng, n, accept):
    out = []
    while len(out) < n:
        g, l = rng.uniform(-1, 1, 2)
        if accept(g, l):
            out.append(Params(g, l))
    return out


def check_trivial(rng, n):
    ps = _sample_params(rng, n, lambda g, l: 0.5 <= abs(g * l) < 0.98)
    bad = sum(not membership(p, 30).survived for p in ps)
    return bad == 0, f"{bad}/{n} trivial parameters escaped"


def check_zero_bound(rng, n):
    ps = _sample_params(rng, n, lambda g, l: max(abs(g), abs(l)) < 0.499 and g * l != 0)
    bad = sum(membership(p, 10).depth != 0 for p in ps)
    return bad == 0, f"{bad}/{n} small parameters survived past depth 0"


def check_hull(depth):
    p = Params(-10 / 17, 10 / 13)
    s = attractor_sample(p, depth)
    d = hausdorff_one_sided(analytic_vertices(p, 8).points, numeric_hull(s.points))
    return d <= 1e-6 + s.radius, f"hull distance {d:.3g} vs radius {s.radius:.3g}"


def check_root_product(rng, n):
    bad = 0
    for _ in range(n):
        c = np.concatenate([[1], rng.integers(-1, 2, 20)])
        roots = companion_roots(c)
        for r in (0.8, 0.9, 0.95):
            inside = roots[np.abs(roots) <= r]
            if len(inside) and np.prod(np.abs(inside)) < root_product_bound(len(inside)) * (1 - 1e-9):
                bad += 1
    return bad == 0, f"{bad} violations over {n} polynomials"


def check_symmetry(rng, n):
    worst = 0.0
    for _ in range(n):
        g, l = rng.uniform(-0.95, 0.95, 2)
        p = Params(g, l)
        w = SignedWord("".join(rng.choice(["p", "m"], 5)), "".join(rng.choice(["p", "m"], 3)))
        a = np.array(eval_address(w, p))
        worst = max(worst, float(np.abs(a + np.array(eval_address(w.negate(), p))).max()))
        q = Params(-g, -l)
        worst = max(worst, float(np.abs(a - np.array(eval_address(w.flip_odd(), q))).max()))
    return worst < 1e-12, f"max symmetry defect {worst:.2g}"


def check_tails(rng, n):
    worst = 0.0
    for _ in range(n):
        case = TAILS[rng.integers(1, len(TAILS))]
        p = [1] + list(rng.integers(-1, 2, rng.integers(1, 8)))
        q = tail_polynomial(case, p)
        f = BSeries(tuple(int(v) for v in p), case)
        for z in find_real_zeros(f):
            if z.is_sign_change:
                worst = max(worst, abs(np.polynomial.polynomial.polyval(z.location, q)))
    return worst < 1e-9, f"max tail-polynomial residual {worst:.2g}"


def run_checks(quick: bool = True, seed: int = 0):
    rng = np.random.default_rng(seed)
    k = 1 if quick else 10
    checks = [
        ("trivial_region_survives", lambda: check_trivial(rng, 100 * k)),
        ("small_parameters_escape", lambda: check_zero_bound(rng, 100 * k)),
        ("hull_matches_sample", lambda: check_hull(14 if quick else 16)),
        ("root_product_bound", lambda: check_root_product(rng, 50 * k)),
        ("address_symmetries", lambda: check_symmetry(rng, 50 * k)),
        ("tail_polynomials", lambda: check_tails(rng, 30 * k)),
    ]
    out = []
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed command
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out

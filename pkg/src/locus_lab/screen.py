"""Screening for parameter pairs where one zero is simple and the other has even order.

Each finite part ``p`` combined with a tail template gives an integer
polynomial (``tail_polynomial``) with the same zeros in (-1, 1) as the full
series.  A double zero ``c`` forces ``q'(c) = 0``, so candidates come from
sign changes of ``q'`` on a grid where ``|q|`` is small enough to allow a
zero nearby; survivors are confirmed with exact integer arithmetic.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import sympy

from .bseries import (
    TAILS,
    ZERO,
    BSeries,
    ZeroReport,
    companion_roots,
    find_real_zeros,
    root_product_bound,
    root_product_rate,
    tail_polynomial,
)
from .errors import ResourceLimitError
from .ifs import Params

M_LIMIT = 18
DEFAULT_BUDGET = 12_000_000
_X = sympy.Symbol("x")


@dataclass(frozen=True)
class ScreenConstants:
    alpha2_lower: float = 0.668  # smallest possible |x| of a double zero
    alpha3_approx: float = 0.7278  # smallest possible |x| of a triple zero
    inv_two_c5: float = 1 / (2 * root_product_rate(5))
    c4: float = root_product_bound(4)
    # (cap on the simple zero, resulting floor on the multiple zero)
    psi_table_points: tuple = ((0.7485, 0.67), (0.7463, 0.69))


CONSTANTS = ScreenConstants()


@dataclass
class OutlierCandidate:
    params: Params  # (simple zero, even-order zero)
    series: BSeries
    simple_zero: ZeroReport
    even_zero: ZeroReport
    tail_case: str
    defining_polynomial: tuple[int, ...]
    residuals: tuple[float, float] = (0.0, 0.0)
    order_uncertain: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def zr(z: ZeroReport):
            return {
                "location": z.location,
                "order_estimate": z.order_estimate,
                "is_sign_change": z.is_sign_change,
                "bracket": list(z.bracket),
                "residual": z.residual,
            }

        return {
            "params": [self.params.gamma, self.params.lam],
            "series": str(self.series),
            "simple_zero": zr(self.simple_zero),
            "even_zero": zr(self.even_zero),
            "tail_case": self.tail_case,
            "defining_polynomial": list(self.defining_polynomial),
            "residuals": list(self.residuals),
            "order_uncertain": self.order_uncertain,
        }


def finite_parts(m: int, tail_case: str) -> np.ndarray:
    """All canonical finite parts of degree exactly ``m`` as rows (ascending coefficients).

    The last coefficient differs from what the tail would put there, so each
    series is produced once.
    """
    if m == 0:
        return np.ones((1, 1), dtype=np.int64)
    last_tail = BSeries((1,), tail_case).coefficient(m) if tail_case != ZERO else 0
    lasts = [c for c in (-1, 0, 1) if c != last_tail]
    mids = np.array(list(itertools.product((-1, 0, 1), repeat=m - 1)), dtype=np.int64).reshape(3 ** (m - 1), m - 1)
    rows = []
    for c in lasts:
        block = np.empty((len(mids), m + 1), dtype=np.int64)
        block[:, 0] = 1
        block[:, 1:m] = mids
        block[:, m] = c
        rows.append(block)
    return np.concatenate(rows)


def _tail_matrix_fast(parts: np.ndarray, tail_case: str) -> np.ndarray:
    if tail_case == ZERO:
        return parts.copy()
    n, m1 = parts.shape
    sign, ratio = {"all_plus": (1, 1), "all_minus": (-1, 1), "alt_plus_even": (1, -1), "alt_minus_even": (-1, -1)}[tail_case]
    out = np.zeros((n, m1 + 1), dtype=np.int64)
    out[:, :m1] += parts
    out[:, 1:] -= ratio * parts
    out[:, m1] += sign * ratio**m1
    return out


def _grid(step: float):
    right = np.arange(0.5, 0.999 + 1e-12, step)
    return np.concatenate([-right[::-1], right])


def _second_derivative_bound(deg: int, r: np.ndarray, cmax: int = 2) -> np.ndarray:
    n = np.arange(2, deg + 1)
    return (cmax * n * (n - 1) * r[:, None] ** (n - 2)).sum(axis=1) if deg >= 2 else np.zeros_like(r)


def _double_root_flags(Q: np.ndarray, xs: np.ndarray, step: float):
    """``(row, interval)`` pairs where ``q'`` changes sign and ``|q|`` allows a zero."""
    deg = Q.shape[1] - 1
    powers = xs[None, :] ** np.arange(deg + 1)[:, None]
    dQ = Q[:, 1:] * np.arange(1, deg + 1)
    dpowers = powers[:deg]
    V = Q @ powers
    dV = dQ @ dpowers
    same_half = np.sign(xs[:-1]) == np.sign(xs[1:])
    flip = (dV[:, :-1] * dV[:, 1:] <= 0) & same_half[None, :]
    r = np.maximum(np.abs(xs[:-1]), np.abs(xs[1:]))
    reach = 0.5 * _second_derivative_bound(deg, r) * step**2
    small = np.minimum(np.abs(V[:, :-1]), np.abs(V[:, 1:])) <= reach[None, :]
    return np.nonzero(flip & small)


def _bisect_critical(q: np.ndarray, a: float, b: float, iters: int = 80) -> float:
    dq = np.polynomial.polynomial.polyder(q.astype(float))
    fa = np.polynomial.polynomial.polyval(a, dq)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = np.polynomial.polynomial.polyval(mid, dq)
        if fm == 0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def _exact_order(q: np.ndarray, c: float, tol: float = 1e-6) -> int:
    """Multiplicity of the real zero of ``q`` nearest ``c`` (0 if none within ``tol``)."""
    poly = sympy.Poly(list(reversed([int(v) for v in q])), _X)
    best, order = None, 0
    for fac, mult in poly.factor_list()[1]:
        for root in sympy.Poly(fac, _X).real_roots():
            val = float(root.evalf(30))
            if abs(val - c) < tol and (best is None or abs(val - c) < abs(best - c)):
                best, order = val, mult
    return order


def enumerate_candidates(
    m_max: int,
    tail_case: str,
    step: float = 4e-3,
    budget: int = DEFAULT_BUDGET,
    limit: int = M_LIMIT,
    chunk: int = 20_000,
    tol: float = 1e-10,
) -> list[OutlierCandidate]:
    """Candidates with one simple and one even-order zero, nontrivial and off the diagonal.

    Output is ordered by (degree, coefficients).
    """
    if tail_case not in TAILS:
        raise ValueError(f"unknown tail template {tail_case!r}")
    if m_max > limit:
        raise ResourceLimitError(f"m_max={m_max} exceeds the configured limit {limit}")
    total = sum(len_parts(m, tail_case) for m in range(m_max + 1))
    if total > budget:
        raise ResourceLimitError(f"{total} finite parts exceed the enumeration budget {budget}")
    xs = _grid(step)
    out: list[OutlierCandidate] = []
    for m in range(m_max + 1):
        parts = finite_parts(m, tail_case)
        found = []
        for s in range(0, len(parts), chunk):
            P = parts[s: s + chunk]
            Q = _tail_matrix_fast(P, tail_case)
            rows, cols = _double_root_flags(Q.astype(float), xs, step)
            for r_, k in zip(rows, cols):
                q = Q[r_]
                c = _bisect_critical(q, float(xs[k]), float(xs[k + 1]))
                if abs(np.polynomial.polynomial.polyval(c, q.astype(float))) > 1e-8:
                    continue
                found.append((s + r_, c))
        for idx, c in sorted(set(found)):
            cand = _build_candidate(parts[idx], tail_case, c, tol)
            if cand is not None:
                out.append(cand)
    out.sort(key=lambda cd: (len(cd.series.coeffs), cd.series.coeffs))
    return out


def len_parts(m: int, tail_case: str) -> int:
    return 1 if m == 0 else 2 * 3 ** (m - 1)


def _build_candidate(p: np.ndarray, tail_case: str, c: float, tol: float) -> OutlierCandidate | None:
    q = tail_polynomial(tail_case, p)
    order = _exact_order(q, c)
    if order < 2:
        return None
    f = BSeries(tuple(int(v) for v in p), tail_case)
    zeros = find_real_zeros(f)
    even = min(zeros, key=lambda z: abs(z.location - c), default=None)
    order_uncertain = False
    if even is None or abs(even.location - c) > 1e-6:
        even = ZeroReport(c, order, False, (c - 1e-3, c + 1e-3), (0, 0), abs(float(f.eval(c))))
    if even.order_estimate != order:
        order_uncertain = True
        even = even._replace(order_estimate=order, is_sign_change=order % 2 == 1)
    if order % 2:
        return None
    res_even = abs(float(f.eval(c)))
    simple = [z for z in zeros if z.order_estimate == 1 and abs(z.location - c) > 1e-6]
    for s in simple:
        g, l = s.location, c
        if abs(g * l) >= 0.5 or g == l:
            continue
        res_s = abs(float(f.eval(g)))
        if max(res_s, res_even) > tol:
            continue
        return OutlierCandidate(
            Params(g, l), f, s, even, tail_case, tuple(int(v) for v in q), (res_s, res_even), order_uncertain
        )
    return None


# ---------------------------------------------------------------------------
# constraints
# ---------------------------------------------------------------------------


KEPT = "kept"


def psi_chain(constants: ScreenConstants = CONSTANTS) -> list[float]:
    """Successive caps on the simple zero when the smaller positive zero is multiple.

    Start from ``0.5 / alpha2``; each table point ``(cap, floor)`` lifts the
    multiple zero to ``floor`` once the simple zero is below ``cap``.  A last
    cap under ``alpha3`` rules the configuration out.
    """
    caps = [0.5 / constants.alpha2_lower]
    for cap, floor in constants.psi_table_points:
        if caps[-1] <= cap + 5e-5:
            caps.append(0.5 / floor)
    return caps


def apply_constraints(c: OutlierCandidate, constants: ScreenConstants = CONSTANTS) -> tuple[str, str | None]:
    """``("kept", None)`` or ``("rejected", reason)``."""
    s, e = c.simple_zero, c.even_zero
    zs, ze = s.location, e.location
    if abs(zs * ze) >= 0.5:
        return "rejected", "trivial"
    # two multiple zeros off the trivial region
    if s.order_estimate >= 2 and e.order_estimate >= 2:
        return "rejected", "part1"
    multiple, single = (zs, ze) if s.order_estimate >= 2 else (ze, zs)
    if abs(multiple) < constants.alpha2_lower:
        return "rejected", "alpha2"
    if 0 < multiple < single and psi_chain(constants)[-1] < constants.alpha3_approx:
        return "rejected", "part2"
    roots = companion_roots(c.defining_polynomial)
    radius = max(abs(zs), abs(ze))
    inside = roots[np.abs(roots) <= radius * (1 + 1e-9)]
    n = len(inside)
    if n >= 1:
        prod = float(np.prod(np.abs(inside)))
        if prod < root_product_bound(n) * (1 - 1e-9):
            return "rejected", "product_bound"
        if radius < root_product_rate(n) * (1 - 1e-9):
            return "rejected", "product_bound"
    return KEPT, None


def screen(m_max: int, tail_case: str, **kw) -> tuple[list[OutlierCandidate], list[tuple[OutlierCandidate, str]]]:
    """Enumerate and filter; returns ``(kept, rejected_with_reason)``."""
    kept, rejected = [], []
    for cand in enumerate_candidates(m_max, tail_case, **kw):
        status, reason = apply_constraints(cand)
        (kept.append(cand) if status == KEPT else rejected.append((cand, reason)))
    return kept, rejected


def candidates_json(cands) -> str:
    return json.dumps([c.to_dict() for c in cands], indent=2)

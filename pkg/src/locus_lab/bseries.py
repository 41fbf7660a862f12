"""Power series ``1 + sum a_n x^n`` with ``a_n`` in ``{-1, 0, 1}``.

A series is a finite coefficient list followed by one of five tail templates
that continues it from index ``len(coeffs)`` onward.  Every template is a
geometric series, so full evaluation and derivatives are closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, NormalizationError, PreconditionError

ZERO, ALL_PLUS, ALL_MINUS, ALT_PLUS_EVEN, ALT_MINUS_EVEN = (
    "zero",
    "all_plus",
    "all_minus",
    "alt_plus_even",
    "alt_minus_even",
)
TAILS = (ZERO, ALL_PLUS, ALL_MINUS, ALT_PLUS_EVEN, ALT_MINUS_EVEN)

# tail coefficient at index i is sign * ratio**i
_TAIL_FORM = {
    ALL_PLUS: (1, 1),
    ALL_MINUS: (-1, 1),
    ALT_PLUS_EVEN: (1, -1),
    ALT_MINUS_EVEN: (-1, -1),
}
_TAIL_TOKEN = {ZERO: "", ALL_PLUS: "(+)", ALL_MINUS: "(-)", ALT_PLUS_EVEN: "(+-)", ALT_MINUS_EVEN: "(-+)"}
_TOKEN_TAIL = {v: k for k, v in _TAIL_TOKEN.items()}
_SYMBOL = {"+": 1, "0": 0, "-": -1}
_CHAR = {1: "+", 0: "0", -1: "-"}


@dataclass(frozen=True)
class BSeries:
    coeffs: tuple[int, ...]
    tail: str = ZERO

    def __post_init__(self):
        c = tuple(int(a) for a in self.coeffs)
        if not c or c[0] != 1:
            raise NormalizationError(f"constant coefficient must be 1, got {c[:1]}")
        if any(a not in (-1, 0, 1) for a in c):
            raise ValueError(f"coefficients must lie in {{-1, 0, 1}}: {c}")
        if self.tail not in TAILS:
            raise ValueError(f"unknown tail template {self.tail!r}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def parse(cls, text: str) -> "BSeries":
        """Parse e.g. ``"+-0-(+)"`` = 1 - x - x^3 + x^4 + x^5 + ..."""
        text = text.strip()
        body, tail = text, ZERO
        if "(" in text:
            i = text.index("(")
            body, token = text[:i], text[i:]
            if token not in _TOKEN_TAIL:
                raise ValueError(f"unknown tail token {token!r}")
            tail = _TOKEN_TAIL[token]
        try:
            coeffs = [_SYMBOL[ch] for ch in body]
        except KeyError as exc:
            raise ValueError(f"bad coefficient symbol {exc.args[0]!r} in {text!r}") from None
        return cls(tuple(coeffs), tail)

    def __str__(self):
        return "".join(_CHAR[a] for a in self.coeffs) + _TAIL_TOKEN[self.tail]

    @property
    def is_finite(self) -> bool:
        return self.tail == ZERO

    @property
    def degree(self) -> int:
        if not self.is_finite:
            raise ValueError("infinite series has no degree")
        return max(i for i, a in enumerate(self.coeffs) if a)

    def coefficient(self, i: int) -> int:
        if i < len(self.coeffs):
            return self.coeffs[i]
        if self.tail == ZERO:
            return 0
        sign, ratio = _TAIL_FORM[self.tail]
        return sign * ratio**i

    def coefficients(self, n: int) -> np.ndarray:
        """Coefficients of indices ``0..n`` inclusive."""
        out = np.zeros(n + 1)
        k = min(n + 1, len(self.coeffs))
        out[:k] = self.coeffs[:k]
        if self.tail != ZERO and n >= len(self.coeffs):
            sign, ratio = _TAIL_FORM[self.tail]
            idx = np.arange(len(self.coeffs), n + 1)
            out[len(self.coeffs):] = sign * float(ratio) ** idx
        return out

    def truncate(self, n: int) -> "BSeries":
        return BSeries(tuple(int(a) for a in self.coefficients(n)), ZERO)

    def eval(self, x, n: int | None = None):
        return evaluate(self, x, n)

    def derivative(self, x, order: int = 1, n: int | None = None):
        return derivative(self, x, order, n)

    def __call__(self, x, n: int | None = None):
        return evaluate(self, x, n)


def _check_domain(f: BSeries, x):
    if f.tail != ZERO and np.any(np.abs(x) >= 1):
        raise DomainError("infinite series needs |x| < 1")


def evaluate(f: BSeries, x, n: int | None = None):
    """Value of ``f`` (``n=None``) or of its degree-``n`` truncation at ``x``."""
    x = np.asarray(x, dtype=complex if np.iscomplexobj(x) else float)
    if n is not None:
        val = P.polyval(x, f.coefficients(n))
    else:
        _check_domain(f, x)
        val = P.polyval(x, np.asarray(f.coeffs, dtype=float))
        if f.tail != ZERO:
            sign, ratio = _TAIL_FORM[f.tail]
            k = len(f.coeffs)
            val = val + sign * (ratio * x) ** k / (1 - ratio * x)
    return val if val.ndim else val[()]


def derivative(f: BSeries, x, order: int = 1, n: int | None = None):
    """``order``-th derivative of ``f`` or of its truncation at ``x``."""
    x = np.asarray(x, dtype=float)
    if order == 0:
        return evaluate(f, x, n)
    if n is not None:
        c = f.coefficients(n)
        d = P.polyder(c, order) if len(c) > order else np.zeros(1)
        val = P.polyval(x, d)
        return val if val.ndim else val[()]
    _check_domain(f, x)
    c = np.asarray(f.coeffs, dtype=float)
    d = P.polyder(c, order) if len(c) > order else np.zeros(1)
    val = P.polyval(x, d)
    if f.tail != ZERO:
        sign, ratio = _TAIL_FORM[f.tail]
        k = len(f.coeffs)
        # Leibniz rule on ratio^k x^k * (1 - ratio x)^-1
        acc = np.zeros_like(x)
        for i in range(order + 1):
            if i > k:
                break
            j = order - i
            falling = math.perm(k, i)
            acc = acc + (
                math.comb(order, i)
                * falling
                * x ** (k - i)
                * math.factorial(j)
                * float(ratio) ** j
                / (1 - ratio * x) ** (j + 1)
            )
        val = val + sign * float(ratio) ** k * acc
    return val if val.ndim else val[()]


def derivative_scale(x: float, order: int) -> float:
    """Upper bound of ``|f^(order)(x)|`` over all of the class."""
    return math.factorial(order) / (1 - abs(x)) ** (order + 1)


def zero_order(f: BSeries, x0: float, n: int | None = None, order_tol: float = 1e-5, max_order: int = 12) -> int:
    """Smallest ``j >= 1`` whose derivative at ``x0`` is distinguishable from 0."""
    for j in range(1, max_order + 1):
        if abs(derivative(f, x0, j, n)) > order_tol * max(1.0, derivative_scale(x0, j)):
            return j
    return max_order


class ZeroReport(NamedTuple):
    location: float
    order_estimate: int
    is_sign_change: bool
    bracket: tuple[float, float]
    signs: tuple[int, int]
    residual: float


def _bisect(fn, a: float, b: float, fa: float, tol: float, max_iter: int = 200) -> tuple[float, float]:
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if b - a <= tol or mid in (a, b):
            break
        fm = fn(mid)
        if fm == 0:
            return mid, mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return a, b


def find_real_zeros(
    f: BSeries,
    n: int | None = None,
    interval: tuple[float, float] = (-0.999, 0.999),
    grid: float = 1e-3,
    tol: float = 1e-15,
    order_tol: float = 1e-5,
    residual_tol: float = 1e-10,
) -> list[ZeroReport]:
    """Real zeros of ``f`` (or of its truncation ``f_n``) inside ``interval``.

    Sign changes on a uniform grid are bisected to ``tol``.  A second pass
    bisects sign changes of ``f'`` and keeps critical points where ``|f|`` is
    below ``residual_tol``; these are the even-order zeros a sign scan misses.
    Two zeros closer than one grid step are reported once.
    """
    a, b = interval
    if not a < b:
        raise ValueError("empty interval")
    if grid > (b - a) / 8:
        raise ValueError("grid too coarse for the interval")
    xs = np.linspace(a, b, int(math.ceil((b - a) / grid)) + 1)
    h = xs[1] - xs[0]

    def fn(x):
        return float(evaluate(f, x, n))

    def dfn(x):
        return float(derivative(f, x, 1, n))

    vals = np.asarray(evaluate(f, xs, n))
    reports: list[ZeroReport] = []

    def report(loc, bracket, sign_change):
        # 1 <= |x| / (1 - |x|) at any zero, so rounding below 1/2 is pulled back
        loc = math.copysign(max(abs(loc), 0.5), loc)
        order = zero_order(f, loc, n, order_tol)
        if sign_change != (order % 2 == 1):
            order += 1
        left, right = bracket
        sl = int(np.sign(fn(left))) if left != loc else 0
        sr = int(np.sign(fn(right))) if right != loc else 0
        reports.append(ZeroReport(loc, order, sign_change, (left, right), (sl, sr), abs(fn(loc))))

    i = 0
    while i < len(xs) - 1:
        v0, v1 = vals[i], vals[i + 1]
        if v0 == 0:
            left = xs[i - 1] if i > 0 else xs[i]
            sign_change = i > 0 and vals[i - 1] * v1 < 0
            if i > 0:
                report(float(xs[i]), (float(left), float(xs[i + 1])), bool(sign_change))
        elif v0 * v1 < 0:
            lo, hi = _bisect(fn, float(xs[i]), float(xs[i + 1]), float(v0), tol)
            loc = 0.5 * (lo + hi)
            report(loc, (float(xs[i]), float(xs[i + 1])), True)
        i += 1

    dvals = np.asarray(derivative(f, xs, 1, n))
    for i in range(len(xs) - 1):
        d0, d1 = dvals[i], dvals[i + 1]
        if d0 * d1 >= 0:
            continue
        lo, hi = _bisect(dfn, float(xs[i]), float(xs[i + 1]), float(d0), tol)
        c = 0.5 * (lo + hi)
        scale = max(1.0, 1.0 / (1 - min(abs(c), 0.999999)))
        if abs(fn(c)) > residual_tol * scale:
            continue
        if any(abs(r.location - c) <= 2 * h for r in reports):
            continue
        lft, rgt = max(a, c - h), min(b, c + h)
        if fn(lft) * fn(rgt) < 0:
            continue
        report(c, (float(lft), float(rgt)), False)

    reports.sort(key=lambda r: r.location)
    return reports


# ---------------------------------------------------------------------------
# property U: near a zero, long truncations have exactly one zero and no critical point
# ---------------------------------------------------------------------------

HOLDS, FAILS, INCONCLUSIVE = "holds_up_to_n_max", "fails_with_witness", "inconclusive"


@dataclass
class ProbeResult:
    verdict: str
    thresholds: dict  # eps -> first n from which the property held through n_max (None if never)
    witness: dict | None = None


def _unique_zero_no_critical(f: BSeries, n: int, lo: float, hi: float, samples: int) -> tuple[bool, dict]:
    xs = np.linspace(lo, hi, samples)
    vals = np.asarray(evaluate(f, xs, n))
    dvals = np.asarray(derivative(f, xs, 1, n))
    sign_changes = int(np.count_nonzero(vals[:-1] * vals[1:] < 0))
    crit = int(np.count_nonzero(dvals[:-1] * dvals[1:] < 0))
    info = {"n": n, "sign_changes": sign_changes, "critical_points": crit}
    if sign_changes == 1 and crit == 0:
        return True, info
    if sign_changes == 0 and crit == 1:
        # zero pair too close to sample: the sign of f_n at its critical point decides
        k = int(np.nonzero(dvals[:-1] * dvals[1:] < 0)[0][0])
        s = _critical_value_sign(f.coefficients(n), xs[k], xs[k + 1])
        info["critical_value_sign"] = s
        return s == 0, info
    return False, info


def _critical_value_sign(coeffs: np.ndarray, a: float, b: float) -> int:
    """Sign of the integer polynomial at the root of its derivative in ``[a, b]``, relative to ``p(a)``.

    Returns ``0`` for a double zero, ``-1`` when the value has the opposite
    sign to ``p(a)`` (two zeros) and ``+1`` otherwise (none).  Precision grows
    with the degree so that values of size ``|x|^n`` are resolved.
    """
    c = [int(v) for v in coeffs]
    r = max(abs(a), abs(b))
    digits = 30 + int(len(c) * max(-math.log10(r), 0.0) * 1.5)
    with mpmath.workdps(digits):
        rev = c[::-1]
        drev = [k * v for k, v in zip(range(len(c) - 1, 0, -1), rev[:-1])]
        d2rev = [k * v for k, v in zip(range(len(drev) - 1, 0, -1), drev[:-1])]
        lo, hi = mpmath.mpf(a), mpmath.mpf(b)
        x = (lo + hi) / 2
        tol = mpmath.mpf(10) ** (-(digits - 5))
        for _ in range(200):
            # Newton on p', kept inside the bracket
            step = mpmath.polyval(drev, x) / mpmath.polyval(d2rev, x)
            x_new = x - step
            if not lo <= x_new <= hi:
                x_new = (lo + hi) / 2
            if (mpmath.polyval(drev, x_new) > 0) == (mpmath.polyval(drev, lo) > 0):
                lo = x_new
            else:
                hi = x_new
            if abs(x_new - x) < tol:
                x = x_new
                break
            x = x_new
        val = mpmath.polyval(rev, x)
        ref = mpmath.polyval(rev, mpmath.mpf(a))
        if abs(val) <= mpmath.mpf(10) ** (-(digits - 10)):
            return 0
        return 1 if (val > 0) == (ref > 0) else -1


def property_u_probe(
    f: BSeries,
    zero: float,
    eps_schedule: Sequence[float] = (1e-2, 1e-3, 1e-4),
    n_max: int = 400,
    samples: int = 65,
    zero_tol: float = 1e-9,
) -> ProbeResult:
    """Finite check of property U at ``zero``.

    For every ``eps`` the probe finds the smallest ``N`` such that each
    truncation ``f_n``, ``N <= n <= n_max``, has exactly one zero in
    ``(zero - eps, zero + eps)`` and no other critical point there.  The verdict
    is read off the smallest ``eps``: stable over the last quarter of the range
    means ``holds``, failing at ``n_max`` means ``fails`` (with the failing
    truncations listed), anything else is ``inconclusive``.
    """
    if abs(float(evaluate(f, zero))) > zero_tol:
        raise PreconditionError(f"{zero!r} is not a zero of {f} (residual above {zero_tol})")
    if n_max < 1:
        return ProbeResult(INCONCLUSIVE, {})
    thresholds = {}
    failures = {}
    for eps in eps_schedule:
        lo, hi = zero - eps, zero + eps
        start = None
        bad = []
        for n in range(1, n_max + 1):
            ok, info = _unique_zero_no_critical(f, n, lo, hi, samples)
            if ok:
                if start is None:
                    start = n
            else:
                start = None
                bad.append(info)
        thresholds[eps] = start
        failures[eps] = bad
    eps0 = min(eps_schedule)
    start = thresholds[eps0]
    if start is None:
        lower = _lower_odd_zeros(f, zero, eps0, [b["n"] for b in failures[eps0][-8:]])
        return ProbeResult(FAILS, thresholds, {"eps": eps0, "failures": failures[eps0][-8:], "lower_order_zeros": lower})
    if start > n_max - max(1, n_max // 4):
        return ProbeResult(INCONCLUSIVE, thresholds)
    return ProbeResult(HOLDS, thresholds)


def _lower_odd_zeros(f: BSeries, zero: float, eps: float, ns: list[int]) -> list[tuple[int, float, int]]:
    """Sign-change zeros of failing truncations near ``zero``: ``(n, location, order)``."""
    out = []
    for n in ns:
        for z in find_real_zeros(f, n, (zero - eps, zero + eps), grid=eps / 32):
            if z.is_sign_change:
                out.append((n, z.location, z.order_estimate))
    return out


# ---------------------------------------------------------------------------
# bounds and regions
# ---------------------------------------------------------------------------


def root_product_bound(n: int) -> float:
    """Lower bound on the product of the moduli of any ``n`` zeros in the unit disk."""
    if n < 1:
        raise DomainError("root_product_bound needs n >= 1")
    return (1 + 1 / n) ** (-n / 2) * (1 + n) ** -0.5


def root_product_rate(n: float) -> float:
    """``C(n)^(1/n)``; increasing in ``n``."""
    if n <= 0:
        raise DomainError("root_product_rate needs n > 0")
    return ((1 + 1 / n) * (1 + n) ** (1 / n)) ** -0.5


TRIVIAL, NONTRIVIAL, OUT_OF_DOMAIN = "trivial_N", "nontrivial", "out_of_domain"


def trivial_region_test(gamma: float, lam: float | None = None) -> str:
    """Classify against the volume criterion ``1/2 <= |gamma lam| < 1``.

    Accepts either two floats or a single ``Params``.
    """
    if lam is None:
        gamma, lam = gamma.gamma, gamma.lam
    if not (abs(gamma) < 1 and abs(lam) < 1):
        return OUT_OF_DOMAIN
    return TRIVIAL if abs(gamma * lam) >= 0.5 else NONTRIVIAL


def antidiagonal_reduce(f: BSeries) -> BSeries:
    """Even part ``g(y) = 1 + sum a_2n y^n``; ``f(x) = f(-x) = 0`` forces ``g(x^2) = 0``."""
    k = len(f.coeffs)
    head = tuple(f.coeffs[2 * i] for i in range((k + 1) // 2))
    if f.tail == ZERO:
        tail = ZERO
    else:
        even = f.coefficient(2 * len(head))
        tail = ALL_PLUS if even > 0 else ALL_MINUS
    return BSeries(head, tail)


def tail_polynomial(case: str, p: Sequence[int]) -> np.ndarray:
    """Integer polynomial (ascending coefficients) sharing the zeros in (-1, 1) of ``p + tail``.

    With ``m = deg p`` and the tail starting at ``m + 1``::

        all_plus        (1 - x) p + x^(m+1)
        all_minus       (1 - x) p - x^(m+1)
        alt_plus_even   (1 + x) p + (-1)^(m+1) x^(m+1)
        alt_minus_even  (1 + x) p - (-1)^(m+1) x^(m+1)

    The factor ``1 -+ x`` never vanishes inside (-1, 1).
    """
    p = np.asarray([int(a) for a in p], dtype=np.int64)
    if len(p) == 0 or p[0] != 1 or np.any(np.abs(p) > 1):
        raise ValueError("p needs coefficients in {-1, 0, 1} and constant term 1")
    if case == ZERO:
        return p.copy()
    if case not in _TAIL_FORM:
        raise ValueError(f"unknown tail template {case!r}")
    sign, ratio = _TAIL_FORM[case]
    m1 = len(p)
    out = np.zeros(m1 + 1, dtype=np.int64)
    out[:m1] += p
    out[1:] -= ratio * p
    out[m1] += sign * ratio**m1
    return out


def companion_roots(coeffs: Sequence[float]) -> np.ndarray:
    """Complex roots of ``sum c_i x^i`` as eigenvalues of the companion matrix."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    n = len(c) - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    M = np.zeros((n, n))
    M[1:, :-1] = np.eye(n - 1)
    M[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(M)

"""Parameters, signed words and the address map for the plane family

    p(x) = T x + (1, 1),    m(x) = T x - (1, 1),    T = diag(gamma, lambda).

A point of the attractor with address ``w`` is ``sum_i w_i T^i (1, 1)`` where
``w_i`` is +1 for ``p`` and -1 for ``m``; the first letter has index 0, so
``p^inf`` is the fixed point of ``p``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DomainError,
    InvalidWordError,
    NormalizationError,
    ResourceLimitError,
    SharedPrefixError,
)

MAX_SAMPLE_DEPTH = 20

_LETTER_VALUE = {"p": 1, "m": -1}
_WORD_RE = re.compile(r"^([pm]*)(?:\(([pm]+)\))?$")


class PlanePoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Params:
    """A parameter pair ``(gamma, lam)`` with ``T = diag(gamma, lam)``."""

    gamma: float
    lam: float

    def __post_init__(self):
        g, l = float(self.gamma), float(self.lam)
        if not (math.isfinite(g) and math.isfinite(l)):
            raise DomainError(f"non-finite parameters ({g}, {l})")
        if abs(g) >= 1 or abs(l) >= 1:
            raise DomainError(f"parameters ({g}, {l}) outside the open square (-1, 1)^2")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "lam", l)

    @classmethod
    def parse(cls, text: str) -> "Params":
        try:
            g, l = (float(t) for t in text.split(","))
        except ValueError:
            raise DomainError(f"cannot parse parameters {text!r}; expected 'gamma,lambda'") from None
        return cls(g, l)

    def __str__(self):
        return f"{self.gamma!r},{self.lam!r}"

    @property
    def on_diagonal(self) -> bool:
        return self.gamma == self.lam

    @property
    def contraction(self) -> float:
        """Operator norm of T, which is also the norm of the IFS."""
        return max(abs(self.gamma), abs(self.lam))

    @property
    def diag(self) -> np.ndarray:
        return np.array([self.gamma, self.lam])

    @property
    def T(self) -> np.ndarray:
        return np.diag(self.diag)

    @property
    def product(self) -> float:
        return self.gamma * self.lam

    def require_invertible(self):
        if self.gamma == 0 or self.lam == 0:
            raise DomainError(f"T is singular at ({self.gamma}, {self.lam})")

    def tail_box(self, depth: int) -> np.ndarray:
        """Per-coordinate half-widths of ``T^depth A``."""
        a = np.abs(self.diag)
        return a**depth / (1 - a)

    def truncation_radius(self, depth: int) -> float:
        """Euclidean bound on the distance between a point and its depth-``depth`` cylinder centre."""
        return float(np.hypot(*self.tail_box(depth)))


def _primitive_root(s: str) -> str:
    n = len(s)
    for k in range(1, n + 1):
        if n % k == 0 and s[:k] * (n // k) == s:
            return s[:k]
    return s


@dataclass(frozen=True)
class SignedWord:
    """A finite or eventually periodic word over ``{p, m}``.

    ``SignedWord("mp", "m")`` is ``mp m m m ...``.  The stored form is
    canonical (primitive period, shortest preperiod) so that ``==`` is equality
    of the infinite words.
    """

    preperiod: str = ""
    period: str = ""

    def __post_init__(self):
        pre, per = self.preperiod, self.period
        if set(pre + per) - {"p", "m"}:
            raise InvalidWordError(f"letters must be 'p' or 'm', got {pre!r}/{per!r}")
        if per:
            per = _primitive_root(per)
            while pre and pre[-1] == per[-1]:
                pre = pre[:-1]
                per = per[-1] + per[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    @classmethod
    def parse(cls, text: str) -> "SignedWord":
        """Parse ``"mp(m)"`` (eventually periodic) or ``"pm"`` (finite)."""
        m = _WORD_RE.match(text.strip())
        if m is None:
            raise InvalidWordError(f"cannot parse word {text!r}")
        return cls(m.group(1), m.group(2) or "")

    @classmethod
    def from_coeffs(cls, coeffs, period=()) -> "SignedWord":
        to = {1: "p", -1: "m"}
        return cls("".join(to[int(c)] for c in coeffs), "".join(to[int(c)] for c in period))

    def __str__(self):
        return self.preperiod + (f"({self.period})" if self.period else "")

    @property
    def is_finite(self) -> bool:
        return not self.period

    def __len__(self):
        if self.period:
            raise InvalidWordError("infinite word has no length")
        return len(self.preperiod)

    def letter(self, i: int) -> str:
        if i < len(self.preperiod):
            return self.preperiod[i]
        if not self.period:
            raise IndexError(i)
        return self.period[(i - len(self.preperiod)) % len(self.period)]

    def prefix(self, n: int) -> "SignedWord":
        return SignedWord("".join(self.letter(i) for i in range(n)))

    def coeffs(self, n: int) -> np.ndarray:
        return np.array([_LETTER_VALUE[self.letter(i)] for i in range(n)], dtype=float)

    def negate(self) -> "SignedWord":
        sw = str.maketrans("pm", "mp")
        return SignedWord(self.preperiod.translate(sw), self.period.translate(sw))

    def prepend(self, letters: str) -> "SignedWord":
        return SignedWord(letters + self.preperiod, self.period)

    def __add__(self, other: "SignedWord") -> "SignedWord":
        if self.period:
            raise InvalidWordError("cannot append to an infinite word")
        return other.prepend(self.preperiod)

    def flip_odd(self) -> "SignedWord":
        """Negate the letters at odd indices.

        ``pi(w, (gamma, lam)) == pi(w.flip_odd(), (-gamma, -lam))``.
        """
        pre, per = self.preperiod, self.period
        if per and len(per) % 2:
            per = per * 2
        sw = {"p": "m", "m": "p"}
        pre2 = "".join(sw[c] if i % 2 else c for i, c in enumerate(pre))
        start = len(pre)
        per2 = "".join(sw[c] if (start + i) % 2 else c for i, c in enumerate(per))
        return SignedWord(pre2, per2)


def _word_value(w: SignedWord, x):
    """Scalar address coordinate ``sum_i w_i x^i`` (closed form for periodic tails)."""
    total = 0.0
    xp = 1.0
    for c in w.preperiod:
        total += _LETTER_VALUE[c] * xp
        xp *= x
    if w.period:
        block = 0.0
        xb = 1.0
        for c in w.period:
            block += _LETTER_VALUE[c] * xb
            xb *= x
        total += xp * block / (1 - xb)
    return total


def eval_address(w: SignedWord, params: Params, depth: int | None = None) -> PlanePoint:
    """Evaluate the address map at ``w``.

    Eventually periodic words are summed in closed form.  A finite word is
    summed as written (zero continuation); ``depth``, if given, must cover it.
    """
    if w.is_finite:
        if len(w.preperiod) < 1:
            raise InvalidWordError("empty word")
        if depth is not None and depth < len(w.preperiod):
            raise InvalidWordError(f"depth {depth} shorter than finite word of length {len(w)}")
    return PlanePoint(float(_word_value(w, params.gamma)), float(_word_value(w, params.lam)))


def cylinder_offset(u: SignedWord, params: Params) -> PlanePoint:
    """Translation ``s_u`` with ``u A = T^|u| A + s_u``."""
    if not u.is_finite:
        raise InvalidWordError("cylinder offsets need a finite word")
    if not u.preperiod:
        raise InvalidWordError("empty word")
    return eval_address(u, params)


def normalized_translation(u: SignedWord, v: SignedWord, params: Params) -> PlanePoint:
    """``w = T^-m (s_u - s_v)`` so that ``u A = v A + T^m w``."""
    if not (u.is_finite and v.is_finite):
        raise InvalidWordError("normalized translations need finite words")
    m = len(u)
    if m < 1 or len(v) != m:
        raise InvalidWordError(f"words must have equal positive length, got {len(u)} and {len(v)}")
    if u.letter(0) == v.letter(0):
        raise SharedPrefixError(f"{u} and {v} share a common prefix")
    params.require_invertible()
    su = np.array(cylinder_offset(u, params))
    sv = np.array(cylinder_offset(v, params))
    w = (su - sv) / params.diag**m
    return PlanePoint(float(w[0]), float(w[1]))


@dataclass(frozen=True)
class AttractorSample:
    """Depth-``depth`` cylinder centres.

    Row ``k`` is ``s_u`` for the word whose letter ``i`` is ``m`` when bit ``i``
    of ``k`` is set.  Every attractor point lies in ``centre + [-box, box]`` for
    some row, hence within ``radius`` of the sample.
    """

    params: Params
    depth: int
    points: np.ndarray = field(repr=False)
    box: np.ndarray
    radius: float

    def word(self, k: int) -> SignedWord:
        return SignedWord("".join("m" if (k >> i) & 1 else "p" for i in range(self.depth)))

    def anchored(self, tail: SignedWord = SignedWord("", "p")) -> np.ndarray:
        """Genuine attractor points ``pi(u tail)`` for every sampled prefix ``u``."""
        t = np.array(eval_address(tail, self.params))
        return self.points + self.params.diag**self.depth * t


def _centres(diag: np.ndarray, depth: int) -> np.ndarray:
    pts = np.zeros((1, 2))
    powers = np.ones(2)
    for _ in range(depth):
        pts = np.concatenate([pts + powers, pts - powers])
        powers = powers * diag
    return pts


def attractor_sample(params: Params, depth: int, max_depth: int = MAX_SAMPLE_DEPTH) -> AttractorSample:
    if depth < 1:
        raise ValueError("depth must be positive")
    if depth > max_depth:
        raise ResourceLimitError(f"depth {depth} exceeds the sample limit {max_depth} (2^depth points)")
    box = params.tail_box(depth)
    return AttractorSample(params, depth, _centres(params.diag, depth), box, float(np.hypot(*box)))


class GapBounds(NamedTuple):
    lower: float
    upper: float


def cylinder_gap(params: Params, depth: int) -> GapBounds:
    """Bounds on ``d(pA, mA)`` from a depth-``depth`` sample.

    ``lower`` subtracts twice the truncation radius from the centre distance
    (clamped at 0); ``upper`` is the distance between genuine attractor points
    ``pi(u p^inf)``, which nest as ``depth`` grows.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    sample = attractor_sample(params, depth)
    centres = sample.points
    anchors = sample.anchored()
    # bit 0 clear: first letter p
    dc, _ = cKDTree(centres[1::2]).query(centres[0::2])
    da, _ = cKDTree(anchors[1::2]).query(anchors[0::2])
    lower = max(0.0, float(dc.min()) - 2 * sample.radius)
    return GapBounds(lower, float(da.min()))


def words_from_series(f) -> tuple[SignedWord, SignedWord]:
    """Words ``u, v`` with ``u_i - v_i = 2 f_i``; ``u`` starts with ``p``.

    Zero coefficients become ``p`` in both words, so ``pi(u) - pi(v) = 2 f(T)(1, 1)``.
    """
    if not f.coeffs or f.coeffs[0] != 1:
        raise NormalizationError("series must have constant coefficient 1")
    umap = {1: "p", -1: "m", 0: "p"}
    vmap = {1: "m", -1: "p", 0: "p"}
    k = len(f.coeffs)
    # every tail template has period dividing 2
    tail = [f.coefficient(k + i) for i in range(2)]
    u = SignedWord("".join(umap[c] for c in f.coeffs), "".join(umap[c] for c in tail))
    v = SignedWord("".join(vmap[c] for c in f.coeffs), "".join(vmap[c] for c in tail))
    return u, v

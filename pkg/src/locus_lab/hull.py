"""Convex hull of the attractor and the attractor-free gap segment on it.

For ``gamma < 0 < lam`` with ``|gamma| < |lam|`` the hull vertices are the
points with addresses ``(mp)^k m^inf``, ``(pm)^k m^inf``, ``(pm)^k p^inf`` and
``(mp)^k p^inf`` together with their limits ``(mp)^inf`` and ``(pm)^inf``.
Other opposite-sign parameters reduce to that case by swapping coordinates
and by ``(gamma, lam) -> (-gamma, -lam)``, which maps addresses through
``flip_odd``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .cover import attractor_distance
from .errors import (
    DegenerateHullError,
    InconclusiveGapError,
    PreconditionError,
    UnsupportedCaseError,
)
from .ifs import Params, PlanePoint, SignedWord, eval_address

DEFAULT_K_MAX = 12


class HullVertex(NamedTuple):
    label: str
    address: SignedWord
    point: PlanePoint


@dataclass(frozen=True)
class HullVertexList:
    params: Params
    k_max: int
    vertices: tuple[HullVertex, ...] = field(repr=False)

    @property
    def points(self) -> np.ndarray:
        return np.array([v.point for v in self.vertices])

    def extreme(self, side: str) -> HullVertex:
        """Vertex with the largest (``right``/``top``) or smallest (``left``/``bottom``) coordinate."""
        pts = self.points
        pick = {
            "right": lambda: np.argmax(pts[:, 0]),
            "left": lambda: np.argmin(pts[:, 0]),
            "top": lambda: np.argmax(pts[:, 1]),
            "bottom": lambda: np.argmin(pts[:, 1]),
        }[side]
        return self.vertices[int(pick())]

    def to_records(self) -> list[dict]:
        return [{"address": str(v.address), "x": v.point.x, "y": v.point.y, "label": v.label} for v in self.vertices]

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=2)


def _canonical_frame(params: Params) -> bool:
    """Whether addresses must pass through ``flip_odd`` to reach the theorem's frame.

    Swapping coordinates leaves addresses unchanged, so only the sign flip matters.
    """
    g, l = params.gamma, params.lam
    if g * l >= 0:
        raise UnsupportedCaseError(
            f"closed-form hull needs opposite signs, got ({g}, {l}); use numeric_hull"
        )
    if g == -l:
        raise UnsupportedCaseError("|gamma| == |lam|: the vertex families degenerate; use numeric_hull")
    neg, pos = (g, l) if g < 0 else (l, g)
    return abs(neg) > abs(pos)


def _ccw_order(points: np.ndarray) -> np.ndarray:
    c = points.mean(axis=0)
    ang = np.arctan2(points[:, 1] - c[1], points[:, 0] - c[0])
    return np.argsort(ang, kind="stable")


def analytic_vertices(params: Params, k_max: int = DEFAULT_K_MAX) -> HullVertexList:
    """Closed-form hull vertices, counterclockwise."""
    if params.on_diagonal:
        raise PreconditionError("diagonal parameters are excluded")
    flip = _canonical_frame(params)
    fam = {"A": ("mp", "m"), "B": ("pm", "m"), "C": ("pm", "p"), "D": ("mp", "p")}
    entries = [(f"{name}_{k}", SignedWord(pre * k, tail)) for name, (pre, tail) in fam.items() for k in range(k_max + 1)]
    entries += [("(mp)", SignedWord("", "mp")), ("(pm)", SignedWord("", "pm"))]
    out = []
    seen = set()
    for label, w in entries:
        addr = w.flip_odd() if flip else w
        pt = eval_address(addr, params)
        key = (round(pt.x, 14), round(pt.y, 14))
        if key in seen:
            continue
        seen.add(key)
        out.append(HullVertex(label, addr, pt))
    order = _ccw_order(np.array([v.point for v in out]))
    return HullVertexList(params, k_max, tuple(out[i] for i in order))


def numeric_hull(points, collinear_tol: float = 1e-12) -> np.ndarray:
    """Andrew's monotone chain; counterclockwise, collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        raise DegenerateHullError("need at least three distinct points")
    scale = max(1.0, float(np.abs(pts).max()))
    tol = collinear_tol * scale * scale

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                (ax, ay), (bx, by) = out[-2], out[-1]
                if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) <= tol:
                    out.pop()
                else:
                    break
            out.append((p[0], p[1]))
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateHullError("all points are collinear")
    return hull


def convex_position(points: np.ndarray, tol: float = 1e-10) -> bool:
    """Whether a closed polygon (ccw) turns left at every vertex, up to ``tol``."""
    p = np.asarray(points)
    a, b, c = p, np.roll(p, -1, axis=0), np.roll(p, -2, axis=0)
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    return bool(np.all(cross >= -tol))


def point_in_convex(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Signed slack of ``pts`` inside a ccw convex polygon (negative means outside)."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    edge = b - a
    length = np.hypot(edge[:, 0], edge[:, 1])
    rel = pts[:, None, :] - a[None, :, :]
    cross = (edge[None, :, 0] * rel[..., 1] - edge[None, :, 1] * rel[..., 0]) / length[None, :]
    return cross.min(axis=1)


def hausdorff_one_sided(src: np.ndarray, dst_polygon: np.ndarray) -> float:
    """``max_{s in src} d(s, boundary of dst)`` for a closed polygon."""
    a = dst_polygon
    b = np.roll(dst_polygon, -1, axis=0)
    ab = b - a
    t = np.clip(np.einsum("kj,ikj->ik", ab, src[:, None, :] - a[None]) / np.einsum("kj,kj->k", ab, ab), 0, 1)
    proj = a[None] + t[..., None] * ab[None]
    d = np.hypot(*(src[:, None, :] - proj).transpose(2, 0, 1))
    return float(d.min(axis=1).max())


# ---------------------------------------------------------------------------
# gap segment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapSegment:
    start: PlanePoint
    end: PlanePoint
    start_address: SignedWord
    end_address: SignedWord
    clearance: float
    depth: int

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (np.array(self.start) + np.array(self.end))

    @property
    def direction(self) -> np.ndarray:
        d = np.array(self.end) - np.array(self.start)
        return d / np.hypot(*d)

    @property
    def normal(self) -> np.ndarray:
        d = self.direction
        return np.array([-d[1], d[0]])

    def mirrored(self) -> "GapSegment":
        return GapSegment(
            PlanePoint(-self.start.x, -self.start.y),
            PlanePoint(-self.end.x, -self.end.y),
            self.start_address.negate(),
            self.end_address.negate(),
            self.clearance,
            self.depth,
        )


def _segment_words(params: Params) -> tuple[SignedWord, SignedWord]:
    g, l = params.gamma, params.lam
    if g * l < 0:
        flip = _canonical_frame(params)
        a0, a1 = SignedWord("", "m"), SignedWord("mp", "m")
        return (a0.flip_odd(), a1.flip_odd()) if flip else (a0, a1)
    a0, a1 = SignedWord("", "m"), SignedWord("p", "m")
    if g < 0:
        # both negative: the positive-quadrant segment seen through the sign flip
        return a0.flip_odd(), a1.flip_odd()
    return a0, a1


def gap_segment(params: Params, depths=(24, 32, 44), cap: int = 200_000) -> GapSegment:
    """Hull edge whose interior misses the attractor, with a clearance lower bound.

    ``clearance`` bounds the distance from the midpoint to the attractor from
    below; the cylinder search is deepened through ``depths`` until it is
    positive.
    """
    if params.on_diagonal:
        raise PreconditionError("diagonal parameters are excluded")
    params.require_invertible()
    w0, w1 = _segment_words(params)
    p0, p1 = eval_address(w0, params), eval_address(w1, params)
    mid = 0.5 * (np.array(p0) + np.array(p1))
    last = 0.0
    for d in depths:
        db = attractor_distance(params, mid, depth=d, cap=cap)
        last = db.lower
        if db.lower > 0:
            return GapSegment(p0, p1, w0, w1, float(db.lower), d)
    raise InconclusiveGapError(f"no positive clearance at the midpoint up to depth {depths[-1]} (last bound {last:.3g})")


def attractor_side(seg: GapSegment, sample: np.ndarray) -> float:
    """``+1`` when most sample points lie on the side of ``seg.normal``, else ``-1``."""
    rel = np.asarray(sample) - np.array(seg.start)
    s = np.sign(rel @ seg.normal)
    return 1.0 if np.count_nonzero(s > 0) >= np.count_nonzero(s < 0) else -1.0


def trap_like_vector(params: Params, seg: GapSegment, sample, shrink: float = 1.0) -> PlanePoint:
    """Translation sending the segment start into the gap, just inside the hull.

    ``v`` sits ``shrink * clearance / 4`` from the midpoint toward the
    attractor, inside the attractor-free disk of radius ``clearance / 2``.
    """
    if not seg.clearance > 0:
        raise PreconditionError("gap segment has no clearance")
    if not 0 < shrink <= 1:
        raise ValueError("shrink must lie in (0, 1]")
    side = attractor_side(seg, sample)
    v = seg.midpoint + side * shrink * (seg.clearance / 4) * seg.normal
    w = v - np.array(seg.start)
    return PlanePoint(float(w[0]), float(w[1]))


def hull_records(params: Params, k_max: int = DEFAULT_K_MAX) -> list[dict]:
    return analytic_vertices(params, k_max).to_records()

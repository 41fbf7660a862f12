"""Distances to the attractor and rasterized versions of it.

Distances use a level-by-level branch and bound over cylinders: the cylinder
with prefix ``u`` of length ``k`` lies in the box ``s_u +- |diag|^k/(1-|diag|)``
so the box distance is a lower bound, and ``pi(u p^inf)`` gives an upper bound
with an explicit address.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .ifs import Params, SignedWord, cylinder_offset, eval_address

MAX_BITS = 62


class DistanceBound(NamedTuple):
    lower: float
    upper: float
    nearest: np.ndarray  # genuine attractor point realising ``upper``
    address: SignedWord


def _box_distance(z, centres, half):
    gap = np.maximum(np.abs(centres - z) - half, 0.0)
    return np.hypot(gap[:, 0], gap[:, 1])


def attractor_distance(
    params: Params,
    z,
    depth: int = 40,
    prefix: str = "",
    cap: int = 100_000,
    tol: float = 0.0,
) -> DistanceBound:
    """Bounds on the distance from ``z`` to ``prefix(A)`` (whole attractor when empty).

    Frontier nodes whose box lies farther than the best genuine point are
    pruned.  When the frontier exceeds ``cap`` the far end is dropped and its
    smallest box distance is folded into ``lower``, so ``lower`` stays valid.
    """
    z = np.asarray(z, dtype=float)
    k0 = len(prefix)
    if depth <= k0:
        raise ValueError("depth must exceed the prefix length")
    if depth - k0 > MAX_BITS:
        raise ValueError(f"at most {MAX_BITS} refinement levels")
    diag = params.diag
    a = np.abs(diag)
    fix_p = np.array(eval_address(SignedWord("", "p"), params))
    start = np.array(cylinder_offset(SignedWord(prefix), params)) if prefix else np.zeros(2)
    centres = start[None, :]
    bits = np.zeros(1, dtype=np.int64)
    anchor = start + diag**k0 * fix_p
    best = float(np.hypot(*(anchor - z)))
    best_pt, best_bits, best_len = anchor, 0, k0
    dropped = np.inf
    lower_now = 0.0
    for k in range(k0, depth):
        step = diag**k
        centres = np.concatenate([centres + step, centres - step])
        bits = np.concatenate([bits, bits | (1 << (k - k0))])
        half = a ** (k + 1) / (1 - a)
        lb = _box_distance(z, centres, half)
        anchors = centres + diag ** (k + 1) * fix_p
        ub = np.hypot(*(anchors - z).T)
        j = int(np.argmin(ub))
        if ub[j] < best:
            best, best_pt, best_bits, best_len = float(ub[j]), anchors[j], int(bits[j]), k + 1
        keep = lb <= best
        centres, bits, lb = centres[keep], bits[keep], lb[keep]
        if len(lb) > cap:
            order = np.argsort(lb, kind="stable")
            dropped = min(dropped, float(lb[order[cap]]))
            order = order[:cap]
            centres, bits, lb = centres[order], bits[order], lb[order]
        lower_now = min(dropped, float(lb.min()))
        if best - lower_now <= tol:
            break
    word = prefix + "".join("m" if (best_bits >> i) & 1 else "p" for i in range(best_len - k0))
    return DistanceBound(lower_now, best, np.asarray(best_pt), SignedWord(word, "p"))


def gap_upper_bound(params: Params, depth: int = 16, rounds: int = 4, refine_depth: int = 48) -> tuple[float, SignedWord, SignedWord]:
    """Upper bound on ``d(pA, mA)`` with the addresses of the two points realising it.

    Starts from the closest anchored pair of a depth-``depth`` sample and
    alternately projects onto the other first-level cylinder.
    """
    from scipy.spatial import cKDTree

    from .ifs import attractor_sample

    sample = attractor_sample(params, depth)
    pts = sample.anchored()
    tree = cKDTree(pts[1::2])
    d, j = tree.query(pts[0::2])
    i = int(np.argmin(d))
    a_word = sample.word(2 * i)
    b_word = sample.word(2 * int(j[i]) + 1)
    a = pts[2 * i]
    b = pts[2 * int(j[i]) + 1]
    best = float(d[i])
    a_addr = SignedWord(str(a_word), "p")
    b_addr = SignedWord(str(b_word), "p")
    for _ in range(rounds):
        rb = attractor_distance(params, a, refine_depth, prefix="m")
        if rb.upper < best:
            best, b, b_addr = rb.upper, rb.nearest, rb.address
        ra = attractor_distance(params, b, refine_depth, prefix="p")
        if ra.upper < best:
            best, a, a_addr = ra.upper, ra.nearest, ra.address
    return best, a_addr, b_addr


# ---------------------------------------------------------------------------
# rasters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Raster:
    """Boolean image over a uniform grid; pixel ``(i, j)`` has centre ``(x0 + j h, y0 + i h)``."""

    mask: np.ndarray
    x0: float
    y0: float
    h: float

    def to_pixel(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        j = np.rint((pts[:, 0] - self.x0) / self.h).astype(np.int64)
        i = np.rint((pts[:, 1] - self.y0) / self.h).astype(np.int64)
        return np.stack([i, j], axis=1)

    def to_plane(self, ij) -> np.ndarray:
        ij = np.atleast_2d(np.asarray(ij, dtype=float))
        return np.stack([self.x0 + ij[:, 1] * self.h, self.y0 + ij[:, 0] * self.h], axis=1)

    def lookup(self, image: np.ndarray, pts, outside=0):
        """Values of ``image`` (same grid) at the pixels nearest ``pts``."""
        ij = self.to_pixel(pts)
        ok = (ij[:, 0] >= 0) & (ij[:, 0] < image.shape[0]) & (ij[:, 1] >= 0) & (ij[:, 1] < image.shape[1])
        out = np.full(len(ij), outside, dtype=image.dtype)
        out[ok] = image[ij[ok, 0], ij[ok, 1]]
        return out

    def with_mask(self, mask: np.ndarray) -> "Raster":
        return Raster(mask, self.x0, self.y0, self.h)


def grid_for(params: Params, h: float, margin: float) -> Raster:
    half = 1.0 / (1.0 - np.abs(params.diag)) + margin
    nx = int(np.ceil(2 * half[0] / h)) + 1
    ny = int(np.ceil(2 * half[1] / h)) + 1
    return Raster(np.zeros((ny, nx), dtype=bool), -half[0], -half[1], h)


def raster_attractor(params: Params, h: float, margin: float = 0.0, max_iter: int = 400) -> Raster:
    """Attractor on a pixel grid by iterating ``K <- round(p K) u round(m K)``.

    Rounding perturbs each step by at most ``h/2`` per coordinate, so the
    limit lies within ``h / (2 (1 - |x|))`` of the attractor coordinatewise.
    """
    grid = grid_for(params, h, margin)
    ny, nx = grid.mask.shape
    full = grid_for(params, h, 0.0)
    # start from the bounding box of the attractor
    ii, jj = np.nonzero(np.ones(full.mask.shape, dtype=bool))
    pts = full.to_plane(np.stack([ii, jj], axis=1))
    diag = params.diag
    seen = []
    key_prev = None
    for _ in range(max_iter):
        img = np.zeros((ny, nx), dtype=bool)
        for sign in (1.0, -1.0):
            ij = grid.to_pixel(pts * diag + sign)
            np.clip(ij[:, 0], 0, ny - 1, out=ij[:, 0])
            np.clip(ij[:, 1], 0, nx - 1, out=ij[:, 1])
            img[ij[:, 0], ij[:, 1]] = True
        ii, jj = np.nonzero(img)
        pts = grid.to_plane(np.stack([ii, jj], axis=1))
        key = img.tobytes()
        if key == key_prev:
            break
        if key in seen:
            break
        seen = (seen + [key])[-4:]
        key_prev = key
    return grid.with_mask(img)


def fill(r: Raster) -> Raster:
    return r.with_mask(ndimage.binary_fill_holes(r.mask))


def distance_to(r: Raster) -> np.ndarray:
    """Euclidean distance (plane units) from each pixel centre to the nearest set pixel."""
    return ndimage.distance_transform_edt(~r.mask) * r.h


def neighbourhood(r: Raster, eps: float) -> Raster:
    return r.with_mask(distance_to(r) <= eps)


def shift(r: Raster, w) -> Raster:
    """``r + w`` resampled onto the same grid (nearest pixel)."""
    di = int(np.rint(w[1] / r.h))
    dj = int(np.rint(w[0] / r.h))
    out = np.zeros_like(r.mask)
    ny, nx = r.mask.shape
    src = r.mask[max(0, -di): ny - max(0, di), max(0, -dj): nx - max(0, dj)]
    out[max(0, di): max(0, di) + src.shape[0], max(0, dj): max(0, dj) + src.shape[1]] = src
    return r.with_mask(out)


def components(mask: np.ndarray) -> int:
    _, n = ndimage.label(mask, structure=np.ones((3, 3)))
    return int(n)

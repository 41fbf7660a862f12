import numpy as np
import pytest

from locus_lab.errors import DegenerateHullError, PreconditionError, UnsupportedCaseError
from locus_lab.hull import (
    analytic_vertices,
    attractor_side,
    convex_position,
    gap_segment,
    hausdorff_one_sided,
    numeric_hull,
    point_in_convex,
    trap_like_vector,
)
from locus_lab.ifs import Params, attractor_sample

FIG = Params(-10 / 17, 10 / 13)


def _by_label(vl):
    return {v.label: np.array(v.point) for v in vl.vertices}


def test_limit_vertices_closed_form():
    v = _by_label(analytic_vertices(FIG, 8))
    assert np.allclose(v["(pm)"], (17 / 7, 13 / 23))
    assert np.allclose(v["(mp)"], (-17 / 7, -13 / 23))


def test_first_vertices():
    v = _by_label(analytic_vertices(FIG, 8))
    g = FIG.gamma
    assert np.allclose(v["A_0"], -1 / (1 - FIG.diag))
    assert v["A_1"][0] == pytest.approx(-1 + g - g * g / (1 - g), abs=1e-12)
    assert v["A_1"][0] == pytest.approx(-1.8061, abs=1e-4)


def test_extremes_and_json():
    vl = analytic_vertices(FIG, 8)
    assert vl.extreme("right").label in {"(pm)", "B_8", "C_8"}
    assert vl.extreme("top").label == "C_0"
    assert '"address"' in vl.to_json()


def test_same_sign_and_diagonal_rejected():
    with pytest.raises(UnsupportedCaseError):
        analytic_vertices(Params(0.6, 0.7))
    with pytest.raises(UnsupportedCaseError):
        analytic_vertices(Params(-0.6, 0.6))
    with pytest.raises(PreconditionError):
        analytic_vertices(Params(0.6, 0.6))


def _random_opposite(rng, n):
    out = []
    while len(out) < n:
        g, l = rng.uniform(0.5, 0.95, 2)
        if g * l < 0.5 and abs(g - l) > 0.02:
            out.append(Params(-g, l) if rng.random() < 0.5 else Params(g, -l))
    return out


def test_vertices_convex_and_contain_sample():
    rng = np.random.default_rng(21)
    for p in _random_opposite(rng, 25):
        vl = analytic_vertices(p, 12)
        poly = vl.points
        assert convex_position(poly)
        s = attractor_sample(p, 16)
        # the k_max cut drops a sliver near the limit vertices
        trunc = 2 * np.max(np.abs(p.diag)) ** 24 / (1 - np.max(np.abs(p.diag)))
        assert point_in_convex(poly, s.points).min() >= -(s.radius + trunc + 1e-9)


def test_vertices_converge_to_limits():
    v = _by_label(analytic_vertices(FIG, 12))
    d = [np.hypot(*(v[f"A_{k}"] - v["(mp)"])) for k in range(13)]
    assert all(b < a for a, b in zip(d, d[1:]))
    rate = np.max(np.abs(FIG.diag)) ** 2
    assert d[12] <= d[0] * rate**12 * 10


def test_edge_slope_ratio():
    v = _by_label(analytic_vertices(FIG, 10))
    slopes = []
    for k in range(8):
        e = v[f"A_{k + 1}"] - v[f"A_{k}"]
        slopes.append(e[1] / e[0])
    ratios = np.abs(np.array(slopes[1:]) / np.array(slopes[:-1]))
    assert np.allclose(ratios, (FIG.lam / FIG.gamma) ** 2, rtol=1e-9)


def test_numeric_hull_small_cases():
    tri = numeric_hull([(0, 0), (1, 0), (0, 1), (0.2, 0.2)])
    assert len(tri) == 3 and convex_position(tri)
    sq = numeric_hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0), (0.5, 0.5)])
    assert len(sq) == 4
    with pytest.raises(DegenerateHullError):
        numeric_hull([(0, 0), (1, 1), (2, 2)])
    with pytest.raises(DegenerateHullError):
        numeric_hull([(0, 0), (1, 1)])


def test_numeric_hull_matches_analytic():
    s = attractor_sample(FIG, 16)
    hull = numeric_hull(s.points)
    assert hausdorff_one_sided(hull, analytic_vertices(FIG, 8).points) <= 1e-6 + s.radius


def test_gap_segment():
    seg = gap_segment(FIG)
    v = _by_label(analytic_vertices(FIG, 8))
    assert np.allclose(seg.start, v["A_0"]) and np.allclose(seg.end, v["A_1"])
    assert seg.clearance > 0
    s = attractor_sample(FIG, 14)
    assert np.hypot(*(s.points - seg.midpoint).T).min() >= seg.clearance - 1e-12
    with pytest.raises(PreconditionError):
        gap_segment(Params(0.7, 0.7))


def test_trap_like_vector():
    seg = gap_segment(FIG)
    pts = attractor_sample(FIG, 12).points
    w = np.array(trap_like_vector(FIG, seg, pts))
    target = np.array(seg.start) + w
    # lands inside the attractor-free disk around the midpoint, on the attractor's side
    assert np.hypot(*(target - seg.midpoint)) == pytest.approx(seg.clearance / 4)
    assert attractor_side(seg, pts) * ((target - seg.midpoint) @ seg.normal) > 0
    m = seg.mirrored()
    assert np.allclose(trap_like_vector(FIG, m, -pts), -w)
    with pytest.raises(ValueError):
        trap_like_vector(FIG, seg, pts, shrink=0)
    from dataclasses import replace

    with pytest.raises(PreconditionError):
        trap_like_vector(FIG, replace(seg, clearance=0.0), pts)

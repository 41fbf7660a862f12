import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from locus_lab.bseries import BSeries
from locus_lab.errors import (
    DomainError,
    InvalidWordError,
    NormalizationError,
    ResourceLimitError,
    SharedPrefixError,
)
from locus_lab.ifs import (
    Params,
    SignedWord,
    attractor_sample,
    cylinder_gap,
    cylinder_offset,
    eval_address,
    normalized_translation,
    words_from_series,
)

P = Params(0.5, 0.25)

coord = st.floats(-0.95, 0.95).filter(lambda x: abs(x) > 0.05)
params_st = st.builds(Params, coord, coord)
letters = st.text("pm", max_size=8)
words = st.builds(SignedWord, letters, st.text("pm", min_size=1, max_size=4))


def test_fixed_point_of_p():
    assert np.allclose(eval_address(SignedWord("", "p"), P), (2.0, 4 / 3))


def test_m_fixed_point_is_negated():
    assert np.allclose(eval_address(SignedWord("", "m"), P), (-2.0, -4 / 3))


def test_alternating_address():
    assert np.allclose(eval_address(SignedWord.parse("(pm)"), P), (2 / 3, 0.8))


def test_cylinder_offsets():
    q = Params(0.37, -0.6)
    assert np.allclose(cylinder_offset(SignedWord("p"), q), (1, 1))
    assert np.allclose(cylinder_offset(SignedWord("pm"), q), (1 - 0.37, 1 + 0.6))
    assert np.allclose(cylinder_offset(SignedWord("mpp"), P), (-0.25, -0.6875))
    with pytest.raises(InvalidWordError):
        cylinder_offset(SignedWord(""), P)


def test_normalized_translation_examples():
    assert np.allclose(normalized_translation(SignedWord("pm"), SignedWord("mp"), P), (4.0, 24.0))
    q = Params(0.6, -0.7)
    assert np.allclose(normalized_translation(SignedWord("p"), SignedWord("m"), q), (2 / 0.6, -2 / 0.7))
    with pytest.raises(SharedPrefixError):
        normalized_translation(SignedWord("pp"), SignedWord("pm"), P)
    with pytest.raises(InvalidWordError):
        normalized_translation(SignedWord("pm"), SignedWord("m"), P)


def test_word_parsing_and_canonical_form():
    assert SignedWord.parse("mp(m)") == SignedWord("mp", "m")
    assert SignedWord("pmpm", "pm") == SignedWord("", "pm")
    assert SignedWord("", "pmpm") == SignedWord.parse("(pm)")
    assert str(SignedWord.parse("mp(m)")) == "mp(m)"
    with pytest.raises(InvalidWordError):
        SignedWord.parse("pxm")


def test_params_domain():
    assert Params.parse("-0.5, 0.25") == Params(-0.5, 0.25)
    with pytest.raises(DomainError):
        Params(1.2, 0.3)


def test_attractor_sample_small_depths():
    s1 = attractor_sample(Params(0.6, 0.7), 1).points
    assert {tuple(p) for p in s1} == {(1.0, 1.0), (-1.0, -1.0)}
    s2 = attractor_sample(P, 2).points
    assert {tuple(np.round(p, 12)) for p in s2} == {(1.5, 1.25), (0.5, 0.75), (-0.5, -0.75), (-1.5, -1.25)}


def test_attractor_sample_sizes_and_limit():
    for d in range(1, 11):
        pts = attractor_sample(Params(0.6, 0.7), d).points
        assert len(np.unique(np.round(pts, 12), axis=0)) == 2**d
    with pytest.raises(ResourceLimitError):
        attractor_sample(P, 21)


def test_sample_refines_previous_depth():
    q = Params(0.55, -0.8)
    coarse = attractor_sample(q, 6).points
    fine = attractor_sample(q, 7)
    # dropping the last letter's term recovers the coarse sample
    last = np.where((np.arange(2**7) >> 6) & 1, -1.0, 1.0)[:, None] * q.diag**6
    assert np.allclose(np.unique(np.round(fine.points - last, 12), axis=0), np.unique(np.round(coarse, 12), axis=0))


def test_sample_radius_covers_genuine_points():
    q = Params(-0.7, 0.65)
    s = attractor_sample(q, 10)
    anchored = s.anchored(SignedWord("", "mp"))
    assert np.max(np.hypot(*(anchored - s.points).T)) <= s.radius + 1e-12


def test_cylinder_gap_examples():
    g = cylinder_gap(Params(0.3, 0.3), 12)
    assert g.lower > 0
    assert cylinder_gap(Params(0.8, 0.7), 10).lower == 0.0
    ups = [cylinder_gap(Params(0.62, -0.55), d).upper for d in range(2, 13)]
    assert all(b <= a + 1e-12 for a, b in zip(ups, ups[1:]))


def test_cylinder_gap_cantor_regime():
    for x in (0.1, 0.25, 0.45):
        assert cylinder_gap(Params(x, x), 14).lower > 0


def test_words_from_series_examples():
    u, v = words_from_series(BSeries.parse("+-"))
    assert (u.prefix(3), v.prefix(3)) == (SignedWord("pmp"), SignedWord("mpp"))
    u, v = words_from_series(BSeries.parse("+0+"))
    assert (u.prefix(3), v.prefix(3)) == (SignedWord("ppp"), SignedWord("mpm"))
    with pytest.raises(NormalizationError):
        words_from_series(BSeries((-1, 1)))


def test_words_from_series_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(100):
        c = (1,) + tuple(int(x) for x in rng.integers(-1, 2, rng.integers(0, 21)))
        f = BSeries(c)
        u, v = words_from_series(f)
        n = len(c) + 3
        assert np.array_equal((u.coeffs(n) - v.coeffs(n)) / 2, f.coefficients(n - 1))


@given(words, params_st)
def test_central_symmetry(w, p):
    a = np.array(eval_address(w, p))
    assert np.allclose(a, -np.array(eval_address(w.negate(), p)), atol=1e-12)


@given(words, params_st, st.sampled_from("pm"))
def test_self_affinity(w, p, a):
    lhs = np.array(eval_address(w.prepend(a), p))
    rhs = p.diag * np.array(eval_address(w, p)) + (1 if a == "p" else -1)
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(words, params_st)
def test_flip_odd_matches_sign_flip(w, p):
    a = np.array(eval_address(w, p))
    b = np.array(eval_address(w.flip_odd(), Params(-p.gamma, -p.lam)))
    assert np.allclose(a, b, atol=1e-12)


@given(st.text("pm", min_size=1, max_size=10), params_st, st.data())
def test_translation_antisymmetry(body, p, data):
    tail = data.draw(st.text("pm", min_size=len(body), max_size=len(body)))
    u, v = SignedWord("p" + body), SignedWord("m" + tail)
    a = np.array(normalized_translation(u, v, p))
    b = np.array(normalized_translation(v, u, p))
    assert np.allclose(a, -b, rtol=1e-12, atol=1e-9)

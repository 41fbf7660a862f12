import functools
import math
import warnings

import numpy as np
import pytest

import oracles
from locus_lab.errors import DomainError
from locus_lab.escape import (
    BLACK,
    GRAY,
    WHITE,
    RenderJob,
    membership,
    membership_M,
    read_pgm,
    render,
    trivial_mask,
    write_pgm,
)
from locus_lab.ifs import Params

GOLDEN = (math.sqrt(5) - 1) / 2


def test_membership_examples():
    r = membership(Params(0.3, 0.4), 10)
    assert not r.survived and r.depth == 0
    for d in (0, 1, 20, 64):
        r = membership(Params(0.75, 0.7), d)
        assert r.survived and r.depth == d
    assert membership(Params(GOLDEN, GOLDEN), 40).survived


def test_membership_domain_errors():
    for bad in ((0.0, 0.5), (0.5, 0.0)):
        with pytest.raises(DomainError):
            membership(Params(*bad), 5)
    with pytest.raises(DomainError):
        Params(1.0, 0.5)


def test_membership_M_examples():
    for z in (0.72, 0.8j, 0.75 * np.exp(1j * 2.0), -0.99):
        assert membership_M(z, 30).survived
    for z in (0.3, 0.49j, -0.2 + 0.1j):
        r = membership_M(z, 10)
        assert not r.survived and r.depth == 0
    assert membership_M(GOLDEN, 40).survived
    with pytest.raises(DomainError):
        membership_M(0, 5)


def test_real_and_complex_agree_on_diagonal():
    rng = np.random.default_rng(4)
    for x in rng.uniform(0.5, 0.99, 30):
        a = membership(Params(x, x), 18)
        b = membership_M(complex(x), 18)
        assert a.survived == b.survived


@functools.lru_cache(maxsize=None)
def _table(degree: int) -> np.ndarray:
    return oracles.all_finite_series(degree).astype(float)


def _surviving_prefixes(p: Params, degree: int) -> int:
    """Prefixes of ``degree`` that stay within the tail bound at both coordinates."""
    C = _table(degree)
    ok = np.ones(len(C), dtype=bool)
    for x in (p.gamma, p.lam):
        ok &= np.abs(C @ (x ** np.arange(degree + 1))) <= abs(x) ** (degree + 1) / (1 - abs(x))
    return int(ok.sum())


def test_escape_is_sound_against_enumeration():
    rng = np.random.default_rng(14)
    escaped = 0
    for _ in range(200):
        g, l = rng.uniform(0.5, 0.99, 2) * rng.choice([-1, 1], 2)
        p = Params(g, l)
        r = membership(p, 13, dedup_q=0, max_branches=0)
        if not r.survived:
            escaped += 1
            assert _surviving_prefixes(p, max(r.depth, 1)) == 0
            assert _surviving_prefixes(p, 13) == 0
    assert escaped > 20


def test_survival_is_monotone_in_depth():
    rng = np.random.default_rng(5)
    for _ in range(60):
        g, l = rng.uniform(-0.99, 0.99, 2)
        if abs(g) < 1e-3 or abs(l) < 1e-3:
            continue
        p = Params(g, l)
        r = membership(p, 24)
        if r.survived:
            assert all(membership(p, d).survived for d in range(0, 24, 3))
        else:
            assert all(not membership(p, d).survived for d in range(r.depth, 25, 3))


def test_symmetries():
    rng = np.random.default_rng(6)
    for _ in range(100):
        g, l = rng.uniform(0.5, 0.99, 2) * rng.choice([-1, 1], 2)
        base = membership(Params(g, l), 20, dedup_q=0)
        assert membership(Params(l, g), 20, dedup_q=0).survived == base.survived
        assert membership(Params(-g, -l), 20, dedup_q=0).survived == base.survived


def test_dedup_agrees_with_exact_search():
    xs = np.linspace(0.5, 0.99, 64)
    disagreements = 0
    for g in xs:
        for l in xs:
            if g * l >= 0.5:
                continue
            p = Params(g, -l)
            a = membership(p, 16).survived
            b = membership(p, 16, dedup_q=0).survived
            disagreements += a != b
    assert disagreements == 0


def test_render_gray_region_matches_inequality():
    job = RenderJob((0.5, 1.0, 0.5, 1.0), 64, 20, tile=16)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        img = render(job, threads=2)
    xs = 0.5 + (np.arange(64) + 0.5) / 128
    ys = 1.0 - (np.arange(64) + 0.5) / 128
    analytic = np.abs(ys[:, None] * xs[None, :]) >= 0.5
    assert np.array_equal(img == GRAY, analytic)
    assert np.array_equal(trivial_mask(RenderJob((0.5, 1.0, 0.5, 1.0), 64, 20, tile=16)), analytic)


def test_render_small_parameters_all_white():
    img = render(RenderJob((-0.49, -0.01, 0.01, 0.49), 32, 15, tile=8), threads=1)
    assert np.all(img == WHITE)


def test_render_clips_with_warning():
    with pytest.warns(UserWarning):
        render(RenderJob((0.5, 1.0, 0.5, 1.0), 8, 5, tile=8), threads=1)


def test_render_deterministic_across_threads(tmp_path):
    job = RenderJob((-0.9, -0.5, 0.55, 0.95), 32, 18, tile=8)
    a = render(job, threads=1)
    b = render(job, threads=4)
    assert np.array_equal(a, b)
    assert set(np.unique(a)) <= {BLACK, GRAY, WHITE}
    write_pgm(tmp_path / "a.pgm", a)
    assert np.array_equal(read_pgm(tmp_path / "a.pgm"), a)


def test_depth_palette():
    job = RenderJob((0.4, 0.9, 0.4, 0.9), 16, 12, tile=8)
    img = render(job, palette="escape_depth", threads=1)
    binary = render(job, threads=1)
    assert np.array_equal(img == BLACK, binary == BLACK)
    assert np.array_equal(img == GRAY, binary == GRAY)
    with pytest.raises(ValueError):
        render(job, palette="rainbow")


def test_job_validation():
    with pytest.raises(ValueError):
        RenderJob((0.5, 0.4, 0.5, 1.0), 16, 5)
    with pytest.raises(ValueError):
        RenderJob((0.5, 0.9, 0.5, 0.9), 30, 5, tile=16)

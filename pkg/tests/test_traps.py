import json
import math

import numpy as np
import pytest

from locus_lab.bseries import BSeries, evaluate
from locus_lab.errors import (
    IncreaseDepthError,
    MagnitudeError,
    PreconditionError,
    TrapCheckFailure,
)
from locus_lab.escape import membership
from locus_lab.ifs import Params, SignedWord, normalized_translation, words_from_series
from locus_lab.traps import (
    certify_interior,
    default_grid,
    max_hop,
    recheck,
    short_hop_path,
    solve_perturbation,
    verify_trap,
)

GOLDEN = (math.sqrt(5) - 1) / 2
# the certified series from the acceptance run, with its solved parameters
SERIES = BSeries.parse("++---0--")
SOLVED = Params(-0.6488140950908934, 0.7697233077563289)


def _zeros():
    from locus_lab.bseries import find_real_zeros

    zs = [z.location for z in find_real_zeros(SERIES) if z.is_sign_change]
    return min(zs, key=lambda x: abs(x + 0.6488)), min(zs, key=lambda x: abs(x - 0.77))


def test_solver_with_zero_target_finds_truncation_zeros():
    g, l = _zeros()
    sol = solve_perturbation(Params(g, l), SERIES, (0.0, 0.0), 30)
    for x in (sol.params_solved.gamma, sol.params_solved.lam):
        assert abs(evaluate(SERIES, x, 29)) < 1e-10


def test_solver_residuals_and_translation():
    g, l = _zeros()
    w = (0.3, -0.2)
    sol = solve_perturbation(Params(g, l), SERIES, w, 20)
    assert max(map(abs, sol.residuals)) < 1e-10
    u, v = words_from_series(SERIES)
    got = normalized_translation(u.prefix(20), v.prefix(20), sol.params_solved)
    assert np.allclose(got, w, atol=1e-4)


def test_solver_magnitude_error():
    g, l = _zeros()
    with pytest.raises(MagnitudeError):
        solve_perturbation(Params(g, l), SERIES, (1e3, 1e3), 5)
    with pytest.raises(PreconditionError):
        solve_perturbation(Params(0.6, 0.7), SERIES, (0, 0), 20)


def test_verify_trap_accepts_known_certificate():
    u, v = words_from_series(SERIES)
    cert = verify_trap(SOLVED, u.prefix(20), v.prefix(20), 2 * default_grid(SOLVED))
    assert cert.min_margin > 0
    assert {w.label for w in cert.witnesses} == {"p+", "p-", "q+", "q-"}
    assert not cert.rigorous
    d = json.loads(cert.to_json())
    assert d["order_m"] == 20 and d["u"] == str(u.prefix(20))
    assert recheck(cert).min_margin == pytest.approx(cert.min_margin)


def test_verify_trap_failures():
    u, v = words_from_series(SERIES)
    with pytest.raises(PreconditionError):
        verify_trap(SOLVED, SignedWord("pp"), SignedWord("pm"), 0.01)
    with pytest.raises(PreconditionError):
        verify_trap(SOLVED, SignedWord("mp"), SignedWord("pm"), 0.01)
    with pytest.raises(TrapCheckFailure) as exc:
        verify_trap(SOLVED, u.prefix(20), v.prefix(20), 10.0)
    assert exc.value.condition in {"alternation", "q_outside_u_disk", "p_outside_v_disk"}
    with pytest.raises(TrapCheckFailure):
        # the gap between the first-level pieces is far above eps here
        verify_trap(Params(0.3, -0.35), SignedWord("pm"), SignedWord("mp"), 0.01)


def test_short_hop_path():
    a = SignedWord("", "p")
    assert len(short_hop_path(Params(0.75, 0.7), a, a, 10)) == 1
    p = Params(0.75, 0.7)
    path = short_hop_path(p, a, SignedWord("", "m"), 10)
    bound = 2 * p.contraction**10 * math.hypot(*(1 / (1 - np.abs(p.diag))))
    assert max_hop(path) <= bound
    assert np.allclose(path[0], (4.0, 1 / 0.3))
    with pytest.raises(IncreaseDepthError):
        short_hop_path(Params(0.3, 0.3), a, SignedWord("", "m"), 10)


def test_certify_preconditions_and_trivial():
    with pytest.raises(PreconditionError):
        certify_interior(Params(0.7, 0.7), SERIES)
    f = BSeries.parse("+--+-")
    p0 = Params(-0.848374895731953, 0.6609925318901202)
    # a radius below the solver's step exhausts every retry
    certs, trace = certify_interior(p0, f, search_radius=1e-9, M_values=(20, 30), shrink=(1.0,))
    assert certs == [] and len(trace) == 2 and all("error" in t for t in trace)


def test_certificate_in_trivial_region_agrees_with_membership():
    # both zeros sit in the trivial region, where a trap is allowed but not guaranteed
    f = BSeries.parse("+--+-")
    certs, _ = certify_interior(Params(-0.848374895731953, 0.6609925318901202), f, M_values=(20,), shrink=(1.0,))
    for c in certs:
        assert c.min_margin > 0
        assert membership(c.params_solved, 30).survived

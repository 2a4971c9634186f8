import math

import pytest

from deltashock.core import (
    BranchKind,
    InconsistentFan,
    PiecewiseQuadraticFlux,
    Rarefaction,
    ShockTag,
    State,
    SystemSpec,
    UnsupportedScenario,
    VFluxKind,
    double_well_system,
    korchinski_system,
    modified_system,
)
from deltashock.delta_solver import (
    MiddleBranchError,
    TracePair,
    amplitude_rate,
    build_profile,
    classify,
    middle_branch_v,
    threshold_report,
    transport_speeds,
)

U_DW = (3 + math.sqrt(2)) / 2


def closed_one_lax_rate(uL, vL, uR, sigma):
    return uL * vL**2 - sigma * vL + sigma**2 / (4 * uR)


def closed_transitional_rate(uL, uR, sigma):
    return sigma**2 * (uL - uR) / (4 * uL * uR)


def test_korchinski_overcompressive():
    p = build_profile(korchinski_system(), State(1, 1), State(-1, 1))
    (atom,) = p.atoms
    assert atom.speed == 0.0
    assert atom.rate == 2.0
    assert atom.classification.tag is ShockTag.OVERCOMPRESSIVE


def test_korchinski_rate_is_balance_not_reversed_sign():
    # balance-consistent rate u_L v_L - u_R v_R at sigma = 0; the reversed form u_R v_L - u_L v_R is wrong
    for uL, vL, vR in [(1.0, 1.0, 1.0), (2.0, 0.5, 3.0), (0.5, -1.0, 2.0)]:
        p = build_profile(korchinski_system(), State(uL, vL), State(-uL, vR))
        (atom,) = p.atoms
        assert atom.rate == pytest.approx(uL * vL + uL * vR, abs=1e-14)


def test_one_lax_matches_closed_formula():
    p = build_profile(modified_system(), State(2, 1), State(-1, -0.75))
    (atom,) = p.atoms
    assert atom.speed == 1.0
    assert atom.rate == pytest.approx(closed_one_lax_rate(2, 1, -1, 1), abs=1e-12)
    assert atom.rate == pytest.approx(0.75, abs=1e-12)
    assert atom.classification.tag is ShockTag.ONE_LAX
    kinds = [b.kind for b in p.v_branches]
    assert kinds == [BranchKind.CONSTANT, BranchKind.RAMP, BranchKind.CONSTANT]
    assert p.v(1.2) == pytest.approx(-0.6, abs=1e-15)
    assert p.v(0.9) == 1.0 and p.v(1.6) == -0.75


def test_transitional_matches_closed_formula():
    p = build_profile(modified_system(), State(2, 0.125), State(-1, -0.75))
    (atom,) = p.atoms
    assert atom.rate == pytest.approx(closed_transitional_rate(2, -1, 1), abs=1e-12)
    assert atom.rate == pytest.approx(-0.375, abs=1e-12)
    assert atom.classification.tag is ShockTag.TRANSITIONAL
    kinds = [b.kind for b in p.v_branches]
    assert kinds == [BranchKind.CONSTANT, BranchKind.RAMP, BranchKind.RAMP, BranchKind.CONSTANT]
    assert atom.left_trace.v == pytest.approx(0.25) and atom.right_trace.v == pytest.approx(-0.5)


def test_two_lax_mirror():
    p = build_profile(modified_system(), State(1, -0.75), State(-2, 1))
    (atom,) = p.atoms
    assert atom.speed == -1.0
    assert atom.rate == pytest.approx(0.75, abs=1e-12)
    assert atom.classification.tag is ShockTag.TWO_LAX


def test_stationary_null_has_zero_rate():
    p = build_profile(modified_system(), State(1, -0.5), State(-1, -0.5))
    (atom,) = p.atoms
    assert atom.speed == 0.0 and atom.rate == 0.0
    assert atom.classification.tag is ShockTag.TRANSITIONAL
    (rep,) = threshold_report(p)
    assert rep.masked and rep.rarefaction_before and rep.rarefaction_after


def test_double_well_two_deltas():
    p = build_profile(double_well_system(), State(U_DW, 1), State(-U_DW, 1))
    assert len(p.atoms) == 2
    minus, plus = p.atoms
    assert minus.speed == pytest.approx(-1.0, abs=1e-10) and plus.speed == pytest.approx(1.0, abs=1e-10)
    # (u_L - sigma-) v_L and (sigma+ - u_R) v_R
    assert minus.rate == pytest.approx((U_DW + 1) * 1, abs=1e-10)
    assert plus.rate == pytest.approx((1 + U_DW) * 1, abs=1e-10)
    assert p.v(0.0) == 0.0 and p.v(0.99) == 0.0
    assert minus.classification.tag is ShockTag.DEGENERATE


def test_equal_u_data_gives_no_atoms():
    p = build_profile(korchinski_system(), State(0.5, 1), State(0.5, 3))
    assert p.atoms == () and p.u_fan.waves == ()
    assert p.v(0.4) == 1.0 and p.v(0.6) == 3.0
    q = build_profile(modified_system(), State(0.5, 1), State(0.5, 3))
    assert [b.kind for b in q.v_branches] == [BranchKind.CONSTANT, BranchKind.RAMP, BranchKind.CONSTANT]
    r = build_profile(modified_system(), State(0.5, 3), State(0.5, 1))
    assert r.v_branches[0].xi_hi == pytest.approx(2.0)  # v-shock speed u (v_L + v_R)


def test_u_rarefaction_has_no_host_shock():
    with pytest.raises(InconsistentFan):
        build_profile(korchinski_system(), State(-1, 1), State(1, 1))


def test_amplitude_rate_formula():
    tr = TracePair(2.0, 1.0, -1.0, -0.5)
    assert amplitude_rate(1.0, tr, VFluxKind.QUADRATIC_IN_V) == 1.0 * (-1.5) - (-0.25 - 2.0)
    assert amplitude_rate(0.0, TracePair(1, 1, -1, 1), VFluxKind.LINEAR_IN_V) == 2.0


def test_rate_sensitivity_is_linear_in_traces():
    base = TracePair(2.0, 1.0, -1.0, -0.5)
    eps = 1e-3
    bumped = TracePair(2.0, 1.0 + eps, -1.0, -0.5)
    d = amplitude_rate(1.0, bumped, VFluxKind.LINEAR_IN_V) - amplitude_rate(1.0, base, VFluxKind.LINEAR_IN_V)
    assert d == pytest.approx(-(1.0 - 2.0) * eps, abs=1e-15)


def test_classify_patterns_and_degenerate():
    assert classify(0.0, (1, 2), (-1, -2)).tag is ShockTag.OVERCOMPRESSIVE
    assert classify(0.0, (1, 2), (-1, 2)).tag is ShockTag.ONE_LAX
    assert classify(0.0, (-1, 2), (-1, -2)).tag is ShockTag.TWO_LAX
    assert classify(0.0, (-1, 2), (-1, 2)).tag is ShockTag.TRANSITIONAL
    deg = classify(1.0, (1.0, 2), (-1, -2))
    assert deg.tag is ShockTag.DEGENERATE and "lambda1(L)" in deg.description
    with pytest.raises(ValueError):
        classify(0.0, (1, 2), (-1, -2), tol=0.0)


def test_classification_stable_under_small_perturbations():
    cases = [
        (korchinski_system(), State(1, 1), State(-1, 1), ShockTag.OVERCOMPRESSIVE),
        (modified_system(), State(2, 1), State(-1, -0.75), ShockTag.ONE_LAX),
        (modified_system(), State(2, 0.125), State(-1, -0.75), ShockTag.TRANSITIONAL),
        (modified_system(), State(1, -0.75), State(-2, 1), ShockTag.TWO_LAX),
    ]
    for system, left, right, tag in cases:
        for du in (-1e-9, 0.0, 1e-9):
            for dv in (-1e-9, 0.0, 1e-9):
                p = build_profile(system, State(left.u + du, left.v + dv), State(right.u - du, right.v + dv))
                assert p.atoms[0].classification.tag is tag


def test_transport_speeds():
    assert transport_speeds(State(2, 1), modified_system()) == (4.0, 4.0)
    assert transport_speeds(State(-1, 3), korchinski_system()) == (-1.0, -2.0)


def test_middle_branch_zero_for_double_well():
    p = build_profile(double_well_system(), State(U_DW, 1), State(-U_DW, 1))
    rare = p.u_fan.waves[1]
    b = middle_branch_v(rare)
    assert b.kind is BranchKind.ZERO


def test_middle_branch_rejects_non_unique_family():
    f = PiecewiseQuadraticFlux.single(1.0)  # u = xi / 2 inside the fan
    rare = Rarefaction(-1.0, 1.0, -2.0, 2.0, f.pieces[0])
    with pytest.raises(MiddleBranchError):
        middle_branch_v(rare)
    with pytest.raises(UnsupportedScenario):
        middle_branch_v(rare, VFluxKind.QUADRATIC_IN_V)
    thin = Rarefaction(0.0, 0.0, 0.0, 0.0, f.pieces[0])
    assert middle_branch_v(thin, incoming=None) is None


def test_custom_quadratic_system_dispatch():
    system = SystemSpec(PiecewiseQuadraticFlux.single(0.5), VFluxKind.QUADRATIC_IN_V, "custom")
    p = build_profile(system, State(2, 1), State(0, 0.25))
    (atom,) = p.atoms
    assert atom.speed == pytest.approx(1.0)


def test_rarefaction_traces_equal_sigma_over_2u():
    for uL, vL, uR, vR in [(2, 0.125, -1, -0.75), (3, 0.1, -0.5, -2.0), (1.5, -0.2, 0.5, 2.0)]:
        p = build_profile(modified_system(), State(uL, vL), State(uR, vR))
        (atom,) = p.atoms
        s = atom.speed
        before = next(b for b in p.v_branches if b.xi_hi == s)
        after = next(b for b in p.v_branches if b.xi_lo == s)
        if before.kind is BranchKind.RAMP:
            assert atom.left_trace.v == s / (2 * uL)
        if after.kind is BranchKind.RAMP:
            assert atom.right_trace.v == s / (2 * uR)


def test_threshold_data_gives_zero_width_fans_and_continuous_rate():
    # 2 u_L v_L = 2 u_R v_R = sigma: both v-fans collapse; the rate equals the
    # transitional expression, which vanishes only when sigma = 0
    for uL, uR in [(2.0, -1.0), (3.0, -0.5), (1.0, -1.0), (0.7, -0.7)]:
        s = uL + uR
        p = build_profile(modified_system(), State(uL, s / (2 * uL)), State(uR, s / (2 * uR)))
        (atom,) = p.atoms
        assert [b.kind for b in p.v_branches] == [BranchKind.CONSTANT, BranchKind.CONSTANT]
        assert atom.rate == pytest.approx(closed_transitional_rate(uL, uR, s), abs=1e-12)
        assert (atom.rate == 0.0) == (s == 0.0)
        assert atom.classification.tag is ShockTag.DEGENERATE
        eps = 1e-7  # nudge both data into the rarefaction regime
        q = build_profile(modified_system(), State(uL, s / (2 * uL) - eps), State(uR, s / (2 * uR) - eps))
        assert q.atoms[0].rate == pytest.approx(atom.rate, abs=1e-12)


def test_zero_speed_rate_vanishes_for_transitional_data_only():
    for u, vL, vR in [(1.0, -0.5, -0.5), (2.0, -0.1, -3.0), (0.5, -2.0, -0.25)]:
        p = build_profile(modified_system(), State(u, vL), State(-u, vR))
        (atom,) = p.atoms
        assert atom.speed == 0.0
        assert atom.rate == 0.0
        assert atom.classification.tag is ShockTag.TRANSITIONAL
    # with v_L > 0 the left state is not fanned and a delta survives
    p = build_profile(modified_system(), State(1, 0.5), State(-1, -0.5))
    assert p.atoms[0].rate == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("vL,vR", [(1, 1), (0.3, 2.0), (-1, 1), (1, -0.5), (-2, -1)])
def test_double_well_rate_signs_follow_v_data(vL, vR):
    p = build_profile(double_well_system(), State(U_DW, vL), State(-U_DW, vR))
    minus, plus = p.atoms
    assert minus.rate == pytest.approx((U_DW + 1) * vL, abs=1e-10)
    assert plus.rate == pytest.approx((U_DW + 1) * vR, abs=1e-10)
    assert (minus.rate > 0) == (vL > 0) and (plus.rate > 0) == (vR > 0)


def test_double_well_swapped_orientation_rejected():
    with pytest.raises(UnsupportedScenario):
        build_profile(double_well_system(), State(-U_DW, 1), State(U_DW, 1))


def test_classify_total_away_from_equalities():
    import numpy as np

    rng = np.random.default_rng(5)
    tol = 1e-12
    for _ in range(2000):
        sigma = float(rng.uniform(-3, 3))
        speeds = rng.uniform(-3, 3, size=4)
        # push every comparison at least 2 tol away from equality
        speeds = np.where(np.abs(speeds - sigma) < 2 * tol, sigma + 4 * tol, speeds)
        label = classify(sigma, tuple(speeds[:2]), tuple(speeds[2:]), tol)
        assert label.tag in ShockTag
        compressive = speeds[:2].max() > sigma and speeds[2:].min() < sigma
        if compressive:
            assert label.tag is not ShockTag.DEGENERATE

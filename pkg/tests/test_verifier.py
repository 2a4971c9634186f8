import math

import numpy as np
import pytest

from deltashock.core import BranchKind, State, VBranch, korchinski_system, modified_system
from deltashock.delta_solver import build_profile
from deltashock.scenario import REFERENCE_PRESETS, PRESETS
from deltashock.verifier import (
    QUADRATURE_ORDER,
    BumpTestFunction,
    IntervalTooNarrow,
    mass_balance,
    mass_balance_residual,
    self_similarity_check,
    weak_residual,
    weak_residual_single,
)


def profile_of(name):
    sc = PRESETS[name]
    return build_profile(sc.system_spec(), sc.left, sc.right)


@pytest.fixture(scope="module", params=sorted(PRESETS))
def preset_profile(request):
    return profile_of(request.param)


def test_korchinski_balance():
    p = build_profile(korchinski_system(), State(1, 1), State(-1, 1))
    assert mass_balance_residual(p, -10, 10, 1.0) < 1e-10
    rep = mass_balance(p, -10, 10, 1.0)
    assert rep.rhs == 2.0 and rep.times == (0.75, 1.0, 1.25)


def test_one_lax_balance():
    p = profile_of("mod-1lax-fig1-center")
    assert mass_balance_residual(p, -10, 10, 1.0) < 1e-10


def test_perturbed_rate_shows_in_balance():
    p = profile_of("mod-1lax-fig1-center")
    bad = p.replace_atom(0, rate=p.atoms[0].rate + 0.1)
    assert mass_balance_residual(bad, -10, 10, 1.0) == pytest.approx(0.1, abs=1e-10)


@pytest.mark.parametrize("eps", [1e-6, 1e-3, -0.25, 2.0])
def test_balance_sensitivity_equals_injection(preset_profile, eps):
    base = mass_balance_residual(preset_profile, -12, 12, 2.0, 0.5)
    for i, atom in enumerate(preset_profile.atoms):
        r = mass_balance_residual(preset_profile.replace_atom(i, rate=atom.rate + eps), -12, 12, 2.0, 0.5)
        assert abs(r - base - abs(eps)) <= 1e-10


def test_interval_too_narrow():
    p = profile_of("mod-1lax-fig1-center")
    with pytest.raises(IntervalTooNarrow):
        mass_balance(p, -10, 1.2, 1.0)
    with pytest.raises(IntervalTooNarrow):
        mass_balance(p, 0.5, 10, 1.0)
    with pytest.raises(ValueError):
        mass_balance(p, -10, 10, 1.0, dt=0.0)


def test_preset_residuals(preset_profile):
    assert mass_balance_residual(preset_profile, -10, 10, 1.0) < 1e-10
    ru, rv = weak_residual(preset_profile, n=512)
    assert ru < 1e-6 and rv < 1e-6


def test_constant_profile_residual_is_roundoff():
    p = build_profile(korchinski_system(), State(0.7, 2.0), State(0.7, 2.0))
    ru, rv = weak_residual(p, n=64)
    assert ru < 1e-13 and rv < 1e-13


@pytest.mark.parametrize("name", REFERENCE_PRESETS)
def test_deleting_an_atom_is_detected(name):
    p = profile_of(name)
    for i in range(len(p.atoms)):
        _, rv = weak_residual(p.drop_atom(i), n=512)
        assert rv > 1e-2


def test_transitional_atom_deletion_bound():
    p = profile_of("mod-transitional-fig1-right")
    phi = BumpTestFunction(1.0, 0.6, 1.0, 0.4)
    _, rv = weak_residual_single(p.drop_atom(0), phi, 256)
    # residual is exactly the missing line integral of k t (phi_t + sigma phi_x)
    ts = np.linspace(0.6, 1.4, 20001)
    _, px, pt = phi.grad(ts, ts)
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    missing = float(trapezoid(p.atoms[0].rate * ts * (pt + px), ts))
    assert abs(rv) == pytest.approx(abs(missing), rel=1e-6)
    assert abs(rv) > 1e-2


@pytest.mark.parametrize("name", REFERENCE_PRESETS)
def test_weak_residual_converges_at_nominal_order(name):
    p = profile_of(name)
    phi = BumpTestFunction(0.4, 5.0, 1.05, 0.45)
    ns = [16, 32, 64, 128, 256]
    res = [max(abs(r) for r in weak_residual_single(p, phi, n)) for n in ns]
    slope = -np.polyfit(np.log(ns), np.log(res), 1)[0]
    assert abs(slope - QUADRATURE_ORDER) <= 0.2 * QUADRATURE_ORDER
    assert all(b < a for a, b in zip(res, res[1:]))


def test_bump_validation():
    with pytest.raises(ValueError):
        BumpTestFunction(0.0, 1.0, 0.5, 0.5)  # touches t = 0
    with pytest.raises(ValueError):
        BumpTestFunction(0.0, -1.0, 1.0, 0.5)


def test_self_similarity_on_presets(preset_profile):
    assert self_similarity_check(preset_profile, 200).max_deviation == 0.0


def test_self_similarity_empty_fan():
    p = build_profile(korchinski_system(), State(1, 1), State(1, 1))
    assert p.u_fan.waves == ()
    assert self_similarity_check(p, 50).max_deviation == 0.0


def test_self_similarity_negative_control():
    p = profile_of("mod-1lax-fig1-center")

    def drifting(x, t):
        u, v = p.at(x, t)
        return u, v + 1e-3 * t

    rep = self_similarity_check(drifting, 100)
    assert rep.max_deviation > 0.0 and rep.worst is not None
    with pytest.raises(ValueError):
        self_similarity_check(p, 5)


def test_ramp_branch_solves_v_equation_pointwise():
    # v = xi / (2u) with u constant satisfies v_t + (u v^2)_x = 0 exactly
    b = VBranch(1.0, 1.5, BranchKind.RAMP, -1.0)
    x, t, h = 1.2, 1.0, 1e-5
    v = lambda x, t: b(x / t)  # noqa: E731
    vt = (v(x, t + h) - v(x, t - h)) / (2 * h)
    Gx = (-1.0 * v(x + h, t) ** 2 - (-1.0 * v(x - h, t) ** 2)) / (2 * h)
    assert abs(vt + Gx) < 1e-9
    assert math.isclose(modified_system().v_flux.G(-1.0, v(x, t)), -(0.6**2))

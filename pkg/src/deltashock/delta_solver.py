"""Full (u, v) Riemann profiles with embedded delta shocks.

The u-equation closes on its own, so its fan comes from the scalar solver.
The v-equation is then solved around it: constant states, v-rarefactions
``v = xi / (2u)`` for ``G = u v**2``, zero branches inside u-rarefactions, and
one Dirac atom per hosting u-shock.  Every atom rate comes from the mass
balance across the moving discontinuity,

    k' = sigma * (v+ - v-) - (G(u+, v+) - G(u-, v-)),

evaluated with one-sided traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    BranchKind,
    DeltaAtom,
    InconsistentFan,
    Rarefaction,
    Shock,
    ShockClass,
    ShockTag,
    SolutionProfile,
    State,
    SystemSpec,
    UnsupportedScenario,
    VBranch,
    VFluxKind,
    WaveFan,
    constant_branches,
)
from .scalar_riemann import solve_scalar

RAREFACTION_TOL = 1e-12
CLASSIFY_TOL = 1e-12


@dataclass(frozen=True)
class TracePair:
    u_left: float
    v_left: float
    u_right: float
    v_right: float


class MiddleBranchError(UnsupportedScenario):
    """The v-equation inside a u-rarefaction admits a nonzero bounded family."""


def transport_speeds(state: State, system: SystemSpec) -> tuple[float, float]:
    """(v-family speed G_v, u-family speed f') at ``state``."""
    lam_v = system.v_flux.G_v(state.u, state.v)
    lam_u = system.u_flux.derivative(state.u)
    return float(lam_v), float(lam_u)


def amplitude_rate(sigma: float, traces: TracePair, v_flux: VFluxKind) -> float:
    """Growth rate of the delta mass at a discontinuity of speed ``sigma``."""
    jump_v = traces.v_right - traces.v_left
    jump_G = v_flux.G(traces.u_right, traces.v_right) - v_flux.G(traces.u_left, traces.v_left)
    return sigma * jump_v - jump_G


def classify(sigma: float, left: tuple[float, float], right: tuple[float, float],
             tol: float = CLASSIFY_TOL) -> ShockClass:
    """Lax-type label of a discontinuity from the characteristic speeds on each side.

    ``left`` and ``right`` hold the two characteristic speeds (any order) of
    the states bounding the discontinuity.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    l1, l2 = sorted(left)
    r1, r2 = sorted(right)
    near = [name for name, lam in (("lambda1(L)", l1), ("lambda2(L)", l2),
                                   ("lambda1(R)", r1), ("lambda2(R)", r2))
            if abs(lam - sigma) <= tol]
    if near:
        return ShockClass(ShockTag.DEGENERATE, "characteristic: " + ", ".join(near) + " = sigma")
    if l1 > sigma and l2 > sigma and r1 < sigma and r2 < sigma:
        return ShockClass(ShockTag.OVERCOMPRESSIVE)
    if l1 > sigma and r1 < sigma < r2:
        return ShockClass(ShockTag.ONE_LAX)
    if l1 < sigma < l2 and r2 < sigma:
        return ShockClass(ShockTag.TWO_LAX)
    if l1 < sigma < l2 and r1 < sigma < r2:
        return ShockClass(ShockTag.TRANSITIONAL)
    return ShockClass(ShockTag.DEGENERATE, "no compressive pattern")


def middle_branch_v(wave: Rarefaction, v_flux: VFluxKind = VFluxKind.LINEAR_IN_V,
                    incoming: VBranch | None = None) -> VBranch | None:
    """Bounded self-similar v inside a u-rarefaction for ``G = u v``.

    With ``u(xi) = alpha*xi + beta`` the v-equation reduces to
    ``((alpha - 1) xi + beta) v' + alpha v = 0``, whose solutions are
    ``C |(alpha - 1) xi + beta| ** (-alpha / (alpha - 1))``.  When the singular
    point sits inside the fan and the exponent is negative, ``v = 0`` is the
    only bounded choice.  A zero-width fan passes ``incoming`` through.
    """
    if v_flux is not VFluxKind.LINEAR_IN_V:
        raise UnsupportedScenario("middle branches are only built for G = u v")
    if wave.xi_right - wave.xi_left <= RAREFACTION_TOL:
        return incoming
    alpha = 1.0 / (2.0 * wave.piece.a)
    beta = -wave.piece.b / (2.0 * wave.piece.a)
    if alpha == 1.0:
        raise MiddleBranchError("u = xi + beta: the bounded family C*exp(-xi/beta) is not unique")
    xi_star = beta / (1.0 - alpha)
    exponent = -alpha / (alpha - 1.0)
    if wave.xi_left < xi_star < wave.xi_right and exponent < 0:
        return VBranch(wave.xi_left, wave.xi_right, BranchKind.ZERO)
    raise MiddleBranchError(
        f"v = C|{alpha - 1:+.6g} xi {beta:+.6g}|^{exponent:.6g} is bounded on "
        f"[{wave.xi_left:.6g}, {wave.xi_right:.6g}] for every C; a constant fits only if it "
        "matches both traces, and the amplitude is not fixed by the data")


def _atom(system: SystemSpec, shock: Shock, v_minus: float, v_plus: float,
          class_left: State, class_right: State) -> DeltaAtom:
    traces = TracePair(shock.u_left, v_minus, shock.u_right, v_plus)
    rate = amplitude_rate(shock.speed, traces, system.v_flux)
    label = classify(shock.speed, transport_speeds(class_left, system), transport_speeds(class_right, system))
    return DeltaAtom(shock.speed, rate, State(shock.u_left, v_minus), State(shock.u_right, v_plus), label)


def build_profile(system: SystemSpec, left: State, right: State) -> SolutionProfile:
    """Self-similar solution of the Riemann problem ``(left, right)``.

    Supported constructions:

    * equal u data: v alone solves a scalar problem at frozen u (no atoms);
    * a single u-shock (``u_L > u_R``): one atom, with v-rarefactions beside it
      for ``G = u v**2`` when the data characteristic speeds call for them;
    * shock, rarefaction, shock for ``G = u v`` where the bounded v inside the
      rarefaction vanishes: two atoms.

    Raises
    ------
    UnsupportedScenario
        Data outside the catalogue above.
    """
    fan = solve_scalar(system.u_flux, left.u, right.u)
    if not fan.waves:
        return _frozen_u_profile(system, left, right, fan)
    kinds = [type(w) for w in fan.waves]
    if kinds == [Shock]:
        if system.v_flux is VFluxKind.LINEAR_IN_V:
            return _single_shock_linear(system, left, right, fan)
        return _single_shock_quadratic(system, left, right, fan)
    if kinds == [Shock, Rarefaction, Shock] and system.v_flux is VFluxKind.LINEAR_IN_V:
        return _two_deltas(system, left, right, fan)
    if not fan.shocks:
        raise InconsistentFan(f"u-fan has no shock to host a delta ({[k.__name__ for k in kinds]})")
    raise UnsupportedScenario(
        f"fan pattern {[k.__name__ for k in kinds]} with {system.v_flux.value} v-flux is outside the catalogue")


def _frozen_u_profile(system, left, right, fan) -> SolutionProfile:
    u0 = left.u
    vl, vr = left.v, right.v
    if system.v_flux is VFluxKind.LINEAR_IN_V or u0 == 0.0 or vl == vr:
        branches = constant_branches([vl, vr], [u0 if system.v_flux is VFluxKind.LINEAR_IN_V else 0.0])
        if vl == vr:
            branches = constant_branches([vl], [])
        return SolutionProfile(system, left, right, fan, branches)
    lam_l, lam_r = 2 * u0 * vl, 2 * u0 * vr
    if lam_l > lam_r:
        s = u0 * (vl + vr)
        branches = constant_branches([vl, vr], [s])
    else:
        branches = (VBranch(-math.inf, lam_l, BranchKind.CONSTANT, vl),
                    VBranch(lam_l, lam_r, BranchKind.RAMP, u0),
                    VBranch(lam_r, math.inf, BranchKind.CONSTANT, vr))
    return SolutionProfile(system, left, right, fan, branches)


def _single_shock_linear(system, left, right, fan) -> SolutionProfile:
    (shock,) = fan.waves
    branches = constant_branches([left.v, right.v], [shock.speed])
    atom = _atom(system, shock, left.v, right.v, left, right)
    return SolutionProfile(system, left, right, fan, branches, (atom,))


def _single_shock_quadratic(system, left, right, fan) -> SolutionProfile:
    (shock,) = fan.waves
    sigma = shock.speed
    lam_l = system.v_flux.G_v(left.u, left.v)
    lam_r = system.v_flux.G_v(right.u, right.v)
    branches: list[VBranch] = []
    if lam_l < sigma - RAREFACTION_TOL:
        branches.append(VBranch(-math.inf, lam_l, BranchKind.CONSTANT, left.v))
        branches.append(VBranch(lam_l, sigma, BranchKind.RAMP, left.u))
        v_minus = sigma / (2.0 * left.u)
    else:
        branches.append(VBranch(-math.inf, sigma, BranchKind.CONSTANT, left.v))
        v_minus = left.v
    if lam_r > sigma + RAREFACTION_TOL:
        branches.append(VBranch(sigma, lam_r, BranchKind.RAMP, right.u))
        branches.append(VBranch(lam_r, math.inf, BranchKind.CONSTANT, right.v))
        v_plus = sigma / (2.0 * right.u)
    else:
        branches.append(VBranch(sigma, math.inf, BranchKind.CONSTANT, right.v))
        v_plus = right.v
    # classification looks across the adjacent v-fans to the data states
    atom = _atom(system, shock, v_minus, v_plus, left, right)
    return SolutionProfile(system, left, right, fan, tuple(branches), (atom,))


def _two_deltas(system, left, right, fan) -> SolutionProfile:
    s_minus, rare, s_plus = fan.waves
    middle = middle_branch_v(rare, system.v_flux)
    if middle is None:
        raise UnsupportedScenario("zero-width middle rarefaction")
    branches = (VBranch(-math.inf, s_minus.speed, BranchKind.CONSTANT, left.v),
                VBranch(s_minus.speed, s_plus.speed, BranchKind.ZERO),
                VBranch(s_plus.speed, math.inf, BranchKind.CONSTANT, right.v))
    inner_l = State(rare.u_left, 0.0)
    inner_r = State(rare.u_right, 0.0)
    atoms = (_atom(system, s_minus, left.v, 0.0, left, inner_l),
             _atom(system, s_plus, 0.0, right.v, inner_r, right))
    return SolutionProfile(system, left, right, fan, branches, atoms)


@dataclass(frozen=True)
class ThresholdReport:
    """Data characteristic speeds of the v-family against one atom speed."""

    sigma: float
    lambda_left: float
    lambda_right: float
    rarefaction_before: bool
    rarefaction_after: bool
    rate: float
    masked: bool


def threshold_report(profile: SolutionProfile, tol: float = 1e-12) -> list[ThresholdReport]:
    """Compare ``G_v`` at the data states with every atom speed.

    ``masked`` flags a zero-rate atom: a delta hidden by the data sitting on
    the thresholds, which reappears under small perturbations.
    """
    sysm = profile.system
    lam_l = float(sysm.v_flux.G_v(profile.left.u, profile.left.v))
    lam_r = float(sysm.v_flux.G_v(profile.right.u, profile.right.v))
    out = []
    for atom in profile.atoms:
        out.append(ThresholdReport(atom.speed, lam_l, lam_r,
                                   lam_l < atom.speed - tol, lam_r > atom.speed + tol,
                                   atom.rate, abs(atom.rate) <= tol))
    return out

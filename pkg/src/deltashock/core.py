"""Domain types for weakly coupled 2x2 Riemann problems with delta shocks.

Every object here is immutable and every evaluation is a pure function of the
similarity coordinate ``xi = x / t``.  Discontinuities are resolved with the
left-limit convention: evaluating exactly at a jump returns the value on its
left.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np


class DeltaShockError(Exception):
    """Base class for all errors raised by this package."""


class FluxError(DeltaShockError, ValueError):
    """Raised for malformed piecewise-quadratic fluxes."""


class UnsupportedScenario(DeltaShockError):
    """Riemann data outside the supported catalogue of constructions."""


class InconsistentFan(DeltaShockError):
    """A u-fan that cannot host the waves the v-equation requires."""


FLUX_CONTINUITY_TOL = 1e-12


@dataclass(frozen=True)
class State:
    u: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "v", float(self.v))
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError(f"state components must be finite, got ({self.u}, {self.v})")


@dataclass(frozen=True)
class QuadraticPiece:
    """``a*u**2 + b*u + c`` on ``[lower, upper)``."""

    lower: float
    upper: float
    a: float
    b: float
    c: float

    def value(self, u):
        return (self.a * u + self.b) * u + self.c

    def slope(self, u):
        return 2.0 * self.a * u + self.b

    def inverse_slope(self, xi):
        """State whose characteristic speed is ``xi`` (needs ``a != 0``)."""
        return (xi - self.b) / (2.0 * self.a)


@dataclass(frozen=True)
class PiecewiseQuadraticFlux:
    """Continuous scalar flux made of quadratic pieces.

    Parameters
    ----------
    breakpoints : sequence of float
        Strictly increasing interior breakpoints; ``len(breakpoints) + 1``
        pieces partition the real line.
    coefficients : sequence of (a, b, c)
        Coefficients of each piece, left to right.
    """

    breakpoints: tuple[float, ...]
    coefficients: tuple[tuple[float, float, float], ...]
    pieces: tuple[QuadraticPiece, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        coefs = tuple(tuple(float(x) for x in c) for c in self.coefficients)
        if len(coefs) == 0:
            raise FluxError("flux needs at least one piece")
        if len(coefs) != len(bps) + 1:
            raise FluxError(f"{len(bps)} breakpoints need {len(bps) + 1} pieces, got {len(coefs)}")
        if any(len(c) != 3 for c in coefs):
            raise FluxError("each piece needs exactly three coefficients (a, b, c)")
        if not all(math.isfinite(x) for x in bps + sum(coefs, ())):
            raise FluxError("flux coefficients and breakpoints must be finite")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise FluxError(f"breakpoints must be strictly increasing: {bps}")
        edges = (-math.inf,) + bps + (math.inf,)
        pieces = tuple(QuadraticPiece(edges[i], edges[i + 1], *coefs[i]) for i in range(len(coefs)))
        for left, right in zip(pieces, pieces[1:]):
            x = left.upper
            jump = abs(left.value(x) - right.value(x))
            if jump > FLUX_CONTINUITY_TOL * max(1.0, abs(left.value(x))):
                raise FluxError(f"flux is discontinuous at u={x}: jump {jump:.3e}")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def single(cls, a: float, b: float = 0.0, c: float = 0.0) -> "PiecewiseQuadraticFlux":
        return cls((), ((a, b, c),))

    def piece_index(self, u: float, side: str = "right") -> int:
        """Index of the piece containing ``u``; at a breakpoint ``side`` picks the neighbour."""
        i = int(np.searchsorted(self.breakpoints, u, side="right" if side == "right" else "left"))
        return i

    def piece_at(self, u: float, side: str = "right") -> QuadraticPiece:
        return self.pieces[self.piece_index(u, side)]

    def __call__(self, u):
        if np.ndim(u) == 0:
            return self.piece_at(float(u)).value(float(u))
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.breakpoints, u, side="right")
        a, b, c = (np.asarray(self.coefficients)[idx, k] for k in range(3))
        return (a * u + b) * u + c

    def derivative(self, u, side: str = "right"):
        if np.ndim(u) == 0:
            return self.piece_at(float(u), side).slope(float(u))
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.breakpoints, u, side="right" if side == "right" else "left")
        a = np.asarray(self.coefficients)[idx, 0]
        b = np.asarray(self.coefficients)[idx, 1]
        return 2.0 * a * u + b

    def max_abs_slope(self, lo: float, hi: float) -> float:
        """max |f'| over ``[lo, hi]`` (attained at endpoints or breakpoints)."""
        pts = [lo, hi] + [b for b in self.breakpoints if lo < b < hi]
        return max(max(abs(self.derivative(p, "left")), abs(self.derivative(p, "right"))) for p in pts)

    def negated(self) -> "PiecewiseQuadraticFlux":
        return PiecewiseQuadraticFlux(self.breakpoints, tuple((-a, -b, -c) for a, b, c in self.coefficients))


def burgers_flux() -> PiecewiseQuadraticFlux:
    """f(u) = u**2."""
    return PiecewiseQuadraticFlux.single(1.0)


def double_well_flux() -> PiecewiseQuadraticFlux:
    """Double-well flux with a concave middle piece ``1 - u**2``.

    Outer wells are ``(u + 2)**2 - 1`` for ``u < -1`` and ``(u - 2)**2 - 1`` for
    ``u > 1``.  The middle piece must be concave for the flux to be continuous
    at ``u = +-1``.
    """
    return PiecewiseQuadraticFlux((-1.0, 1.0), ((1.0, 4.0, 3.0), (-1.0, 0.0, 1.0), (1.0, -4.0, 3.0)))


class VFluxKind(enum.Enum):
    """Flux G(u, v) of the second equation."""

    LINEAR_IN_V = "linear"  # G = u v
    QUADRATIC_IN_V = "quadratic"  # G = u v^2

    def G(self, u, v):
        if self is VFluxKind.LINEAR_IN_V:
            return u * v
        return u * v * v

    def G_v(self, u, v):
        if self is VFluxKind.LINEAR_IN_V:
            return u + 0.0 * v
        return 2.0 * u * v


@dataclass(frozen=True)
class SystemSpec:
    u_flux: PiecewiseQuadraticFlux
    v_flux: VFluxKind
    name: str = "custom"


def korchinski_system() -> SystemSpec:
    return SystemSpec(burgers_flux(), VFluxKind.LINEAR_IN_V, "korchinski")


def modified_system() -> SystemSpec:
    return SystemSpec(burgers_flux(), VFluxKind.QUADRATIC_IN_V, "modified")


def double_well_system() -> SystemSpec:
    return SystemSpec(double_well_flux(), VFluxKind.LINEAR_IN_V, "doublewell")


# --------------------------------------------------------------------------
# u-waves


@dataclass(frozen=True)
class Shock:
    u_left: float
    u_right: float
    speed: float

    @property
    def xi_left(self) -> float:
        return self.speed

    @property
    def xi_right(self) -> float:
        return self.speed


@dataclass(frozen=True)
class Rarefaction:
    """Centred fan ``u(xi) = (f')^{-1}(xi)`` on ``[xi_left, xi_right]``."""

    u_left: float
    u_right: float
    xi_left: float
    xi_right: float
    piece: QuadraticPiece

    def u_at(self, xi):
        return self.piece.inverse_slope(xi)


ElementaryWave = Shock | Rarefaction


@dataclass(frozen=True)
class WaveFan:
    u_left: float
    u_right: float
    waves: tuple[ElementaryWave, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "waves", tuple(self.waves))
        prev_u = self.u_left
        prev_xi = -math.inf
        for w in self.waves:
            if w.u_left != prev_u:
                raise InconsistentFan(f"wave {w} does not start at u={prev_u}")
            if w.xi_left < prev_xi - 1e-12 * max(1.0, abs(prev_xi)):
                raise InconsistentFan(f"wave speeds decrease at {w}")
            prev_u, prev_xi = w.u_right, w.xi_right
        if self.waves and prev_u != self.u_right:
            raise InconsistentFan(f"fan ends at u={prev_u}, expected {self.u_right}")

    @property
    def shocks(self) -> list[Shock]:
        return [w for w in self.waves if isinstance(w, Shock)]

    def speeds(self) -> list[float]:
        out = []
        for w in self.waves:
            out.extend([w.xi_left] if isinstance(w, Shock) else [w.xi_left, w.xi_right])
        return out


def eval_u(fan: WaveFan, xi: float) -> float:
    """u at similarity coordinate ``xi`` (left limit at shocks)."""
    u = fan.u_left
    for w in fan.waves:
        if isinstance(w, Shock):
            if xi <= w.speed:
                return u
        else:
            if xi <= w.xi_left:
                return u
            if xi < w.xi_right:
                return w.u_at(xi)
        u = w.u_right
    return u


def eval_u_array(fan: WaveFan, xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    out = np.full(xi.shape, fan.u_left, dtype=float)
    for w in fan.waves:
        if isinstance(w, Shock):
            out = np.where(xi > w.speed, w.u_right, out)
        else:
            inside = (xi > w.xi_left) & (xi < w.xi_right)
            out = np.where(inside, w.u_at(xi), out)
            out = np.where(xi >= w.xi_right, w.u_right, out)
    return out


# --------------------------------------------------------------------------
# v-profile


class BranchKind(enum.Enum):
    CONSTANT = "constant"
    RAMP = "ramp"  # v = xi / (2 u)
    ZERO = "zero"


@dataclass(frozen=True)
class VBranch:
    """Regular part of v on ``(xi_lo, xi_hi]``."""

    xi_lo: float
    xi_hi: float
    kind: BranchKind
    value: float = 0.0  # constant value, or the u in the ramp divisor

    def __call__(self, xi):
        if self.kind is BranchKind.CONSTANT:
            return self.value + 0.0 * xi
        if self.kind is BranchKind.RAMP:
            return xi / (2.0 * self.value)
        return 0.0 * xi

    def integral(self, x0: float, x1: float, t: float) -> float:
        """Closed-form integral over ``[x0, x1]`` clipped to this branch at time ``t``."""
        lo = max(x0, self.xi_lo * t)
        hi = min(x1, self.xi_hi * t)
        if hi <= lo:
            return 0.0
        if self.kind is BranchKind.CONSTANT:
            return self.value * (hi - lo)
        if self.kind is BranchKind.RAMP:
            return (hi * hi - lo * lo) / (4.0 * self.value * t)
        return 0.0


@enum.unique
class ShockTag(enum.Enum):
    OVERCOMPRESSIVE = "Overcompressive"
    ONE_LAX = "OneLax"
    TWO_LAX = "TwoLax"
    TRANSITIONAL = "Transitional"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class ShockClass:
    tag: ShockTag
    description: str = ""

    def __str__(self):
        if self.tag is ShockTag.DEGENERATE and self.description:
            return f"Degenerate({self.description})"
        return self.tag.value


@dataclass(frozen=True)
class DeltaAtom:
    """Dirac mass ``rate * t`` travelling at ``speed``."""

    speed: float
    rate: float
    left_trace: State
    right_trace: State
    classification: ShockClass


def atom_mass_at(atom: DeltaAtom, t: float) -> float:
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    return atom.rate * t


@dataclass(frozen=True)
class SolutionProfile:
    system: SystemSpec
    left: State
    right: State
    u_fan: WaveFan
    v_branches: tuple[VBranch, ...]
    atoms: tuple[DeltaAtom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "v_branches", tuple(self.v_branches))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        br = self.v_branches
        if not br or br[0].xi_lo != -math.inf or br[-1].xi_hi != math.inf:
            raise InconsistentFan("v branches must cover the whole xi-line")
        for b0, b1 in zip(br, br[1:]):
            if b0.xi_hi != b1.xi_lo:
                raise InconsistentFan(f"gap between v branches at {b0.xi_hi} / {b1.xi_lo}")
        shock_speeds = [s.speed for s in self.u_fan.shocks]
        for atom in self.atoms:
            if not any(abs(atom.speed - s) <= 1e-12 * max(1.0, abs(s)) for s in shock_speeds):
                raise InconsistentFan(f"atom at speed {atom.speed} has no host shock")

    def u(self, xi: float) -> float:
        return eval_u(self.u_fan, xi)

    def v(self, xi: float) -> float:
        return eval_v(self, xi)

    def at(self, x: float, t: float) -> tuple[float, float]:
        """Regular parts ``(u, v)`` at ``(x, t)``, ``t > 0``."""
        xi = x / t
        return self.u(xi), self.v(xi)

    def v_array(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape, dtype=float)
        for b in self.v_branches:
            mask = (xi > b.xi_lo) & (xi <= b.xi_hi)
            if b.xi_lo == -math.inf:
                mask = xi <= b.xi_hi
            out = np.where(mask, b(xi), out)
        return out

    def u_array(self, xi: np.ndarray) -> np.ndarray:
        return eval_u_array(self.u_fan, xi)

    def regular_v_mass(self, x0: float, x1: float, t: float) -> float:
        """Closed-form integral of the regular part of v over ``[x0, x1]``."""
        return math.fsum(b.integral(x0, x1, t) for b in self.v_branches)

    def total_v_mass(self, x0: float, x1: float, t: float) -> float:
        atoms = [atom_mass_at(a, t) for a in self.atoms if x0 < a.speed * t < x1]
        return self.regular_v_mass(x0, x1, t) + math.fsum(atoms)

    def breakpoints(self) -> list[float]:
        """Every finite xi where u, v or an atom changes character."""
        pts = set(self.u_fan.speeds())
        pts.update(b.xi_hi for b in self.v_branches[:-1])
        pts.update(a.speed for a in self.atoms)
        return sorted(pts)

    def replace_atom(self, index: int, **changes) -> "SolutionProfile":
        atoms = list(self.atoms)
        atoms[index] = replace(atoms[index], **changes)
        return replace(self, atoms=tuple(atoms))

    def drop_atom(self, index: int) -> "SolutionProfile":
        atoms = list(self.atoms)
        del atoms[index]
        return replace(self, atoms=tuple(atoms))


def eval_v(profile: SolutionProfile, xi: float) -> float:
    """Regular (non-atomic) part of v at ``xi`` (left limit at jumps)."""
    for b in profile.v_branches:
        if xi <= b.xi_hi:
            return float(b(xi))
    return float(profile.v_branches[-1](xi))


def constant_branches(values: Sequence[float], cuts: Iterable[float]) -> tuple[VBranch, ...]:
    """Piecewise-constant branches with the given interior cut points."""
    edges = [-math.inf, *cuts, math.inf]
    return tuple(VBranch(edges[i], edges[i + 1], BranchKind.CONSTANT, float(values[i])) for i in range(len(values)))

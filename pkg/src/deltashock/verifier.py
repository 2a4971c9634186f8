"""Independent checks of a SolutionProfile.

Three devices, none of which reuse the amplitude formula:

* interval mass balance of v, with closed-form branch integrals;
* weak-form residuals of both equations against smooth bump test functions,
  by composite Gauss-Legendre quadrature aligned to the wave lines;
* self-similarity under dyadic rescaling of (x, t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import DeltaShockError, SolutionProfile, SystemSpec

# 2-point Gauss-Legendre on [-1, 1]
_GL_NODES = np.array([-1.0, 1.0]) / math.sqrt(3.0)
_GL_WEIGHTS = np.array([1.0, 1.0])
QUADRATURE_ORDER = 4


class IntervalTooNarrow(DeltaShockError):
    """A wave leaves the balance interval during the sampled time window."""


@dataclass(frozen=True)
class BalanceReport:
    a: float
    b: float
    times: tuple[float, ...]
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def mass_balance(profile: SolutionProfile, a: float, b: float, t: float = 1.0,
                 dt: float = 0.25) -> BalanceReport:
    """d/dt of the v-mass in ``[a, b]`` against the boundary flux difference."""
    if dt <= 0 or t - dt <= 0:
        raise ValueError("need 0 < dt < t")
    if not a < 0 < b:
        raise IntervalTooNarrow(f"interval [{a}, {b}] must contain the origin")
    t_hi = t + dt
    for xi in profile.breakpoints():
        if not a < xi * t_hi < b:
            raise IntervalTooNarrow(f"wave at xi={xi} leaves [{a}, {b}] before t={t_hi}")
    m_plus = profile.total_v_mass(a, b, t + dt)
    m_minus = profile.total_v_mass(a, b, t - dt)
    lhs = (m_plus - m_minus) / (2.0 * dt)
    G = profile.system.v_flux.G
    rhs = G(profile.left.u, profile.left.v) - G(profile.right.u, profile.right.v)
    return BalanceReport(a, b, (t - dt, t, t + dt), lhs, rhs)


def mass_balance_residual(profile: SolutionProfile, a: float, b: float, t: float = 1.0,
                          dt: float = 0.25) -> float:
    return mass_balance(profile, a, b, t, dt).residual


# --------------------------------------------------------------------------
# weak form


@dataclass(frozen=True)
class BumpTestFunction:
    """``phi = B((x - xc)/wx) * B((t - tc)/wt)`` with ``B(s) = (1 - s**2)**power``."""

    xc: float
    wx: float
    tc: float
    wt: float
    power: int = 4

    def __post_init__(self):
        if self.tc - self.wt <= 0:
            raise ValueError("test function support must stay in t > 0")
        if self.wx <= 0 or self.wt <= 0 or self.power < 2:
            raise ValueError("bad bump parameters")

    def _b(self, s):
        inside = np.abs(s) < 1.0
        base = np.where(inside, 1.0 - s * s, 0.0)
        val = base ** self.power
        der = np.where(inside, -2.0 * self.power * s * base ** (self.power - 1), 0.0)
        return val, der

    def grad(self, x, t):
        """(phi, phi_x, phi_t)."""
        bx, dbx = self._b((x - self.xc) / self.wx)
        bt, dbt = self._b((t - self.tc) / self.wt)
        return bx * bt, dbx / self.wx * bt, bx * dbt / self.wt

    @property
    def t_support(self) -> tuple[float, float]:
        return self.tc - self.wt, self.tc + self.wt

    @property
    def x_support(self) -> tuple[float, float]:
        return self.xc - self.wx, self.xc + self.wx


def default_test_functions(profile: SolutionProfile) -> list[BumpTestFunction]:
    """A global bump covering the whole fan plus local bumps on each wave line."""
    speeds = profile.breakpoints() or [0.0]
    reach = max(1.0, max(abs(s) for s in speeds))
    tests = [BumpTestFunction(0.0, 2.0 * reach * 1.5 + 0.5, 1.0, 0.5),
             BumpTestFunction(0.37 * reach, 2.0 * reach * 1.5 + 1.0, 1.1, 0.45)]
    for s in speeds:
        tests.append(BumpTestFunction(s * 1.0 + 0.1, 0.6, 1.0, 0.4))
    return tests


def _panels(lo: float, hi: float, n: int, cuts: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(lo, hi, n + 1)
    inner = [c for c in cuts if lo < c < hi]
    if inner:
        edges = np.unique(np.concatenate([edges, inner]))
    left, right = edges[:-1], edges[1:]
    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def weak_residual_single(profile: SolutionProfile, phi: BumpTestFunction, n: int = 512) -> tuple[float, float]:
    """(u-residual, v-residual) of the weak form for one test function."""
    system: SystemSpec = profile.system
    f, G = system.u_flux, system.v_flux.G
    t_nodes, t_w = _panels(*phi.t_support, n, [])
    x_lo, x_hi = phi.x_support
    speeds = profile.breakpoints()
    ru = rv = 0.0
    for t, wt in zip(t_nodes, t_w):
        x, wx = _panels(x_lo, x_hi, n, [s * t for s in speeds])
        xi = x / t
        u = profile.u_array(xi)
        v = profile.v_array(xi)
        _, px, pt = phi.grad(x, t)
        w = wx * wt
        ru += float(np.dot(w, u * pt + f(u) * px))
        rv += float(np.dot(w, v * pt + G(u, v) * px))
    for atom in profile.atoms:
        _, px, pt = phi.grad(atom.speed * t_nodes, t_nodes)
        rv += float(np.dot(t_w, atom.rate * t_nodes * (pt + atom.speed * px)))
    return ru, rv


def weak_residual(profile: SolutionProfile, test_functions: Sequence[BumpTestFunction] | None = None,
                  n: int = 512) -> tuple[float, float]:
    """Largest absolute (u, v) weak residuals over a family of test functions."""
    tests = default_test_functions(profile) if test_functions is None else test_functions
    res = [weak_residual_single(profile, phi, n) for phi in tests]
    return max(abs(r[0]) for r in res), max(abs(r[1]) for r in res)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SelfSimilarityReport:
    max_deviation: float
    samples: int
    worst: tuple[float, float, float] | None = field(default=None)


def self_similarity_check(field_or_profile: SolutionProfile | Callable[[float, float], tuple[float, float]],
                          n: int = 200, seed: int = 0, x_range: float = 5.0) -> SelfSimilarityReport:
    """Max |value(x, t) - value(s x, s t)| over random samples.

    Scalings are powers of two, so ``(s x) / (s t)`` equals ``x / t`` exactly
    and any deviation comes from genuine t-dependence.
    """
    if n < 10:
        raise ValueError("need at least 10 samples")
    fn = field_or_profile.at if isinstance(field_or_profile, SolutionProfile) else field_or_profile
    rng = np.random.default_rng(seed)
    worst, worst_at = 0.0, None
    for _ in range(n):
        x = float(rng.uniform(-x_range, x_range))
        t = float(rng.uniform(0.05, 3.0))
        s = float(2.0 ** rng.integers(-8, 9))
        a = fn(x, t)
        b = fn(x * s, t * s)
        dev = max(abs(a[0] - b[0]), abs(a[1] - b[1]))
        if dev > worst:
            worst, worst_at = dev, (x, t, s)
    return SelfSimilarityReport(worst, n, worst_at)

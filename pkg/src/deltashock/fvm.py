"""First-order finite-volume oracle for the weakly coupled system.

u is advanced with Godunov's scheme in min/max form, which is exact for any
continuous flux (convex or not).  The Godunov interface state is recorded
and frozen during the v update, which uses a local Lax-Friedrichs flux for
``G(u_face, .)``.  For ``G = u v`` this is plain upwinding by the sign of
``u_face``.  v is sub-stepped when its own CFL limit is tighter than u's.

Spike masses are then measured in windows that move with a prescribed
speed, after subtracting either the exact regular part of v or a plateau
estimated just outside the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import DeltaShockError, PiecewiseQuadraticFlux, SolutionProfile, State, SystemSpec, VFluxKind

TIE_TOL = 1e-13


class CFLViolation(DeltaShockError):
    """A non-positive or non-finite time step was computed."""


class WindowClipped(DeltaShockError):
    """The measurement window touches the domain boundary."""


@dataclass(frozen=True)
class Grid1D:
    a: float
    b: float
    cells: int
    cfl: float = 0.45
    end_time: float = 1.0

    def __post_init__(self):
        if self.cells < 100:
            raise ValueError("need at least 100 cells")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must lie in (0, 1)")
        if not self.a < self.b:
            raise ValueError("empty domain")
        if self.end_time <= 0:
            raise ValueError("end time must be positive")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.cells

    @property
    def centers(self) -> np.ndarray:
        return self.a + self.dx * (np.arange(self.cells) + 0.5)

    @property
    def edges(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.cells + 1)

    def require_contains(self, speeds: Iterable[float], t: float | None = None):
        """Raise if a wave with one of ``speeds`` reaches the boundary by ``t``."""
        t = self.end_time if t is None else t
        for s in speeds:
            if not self.a < s * t < self.b:
                raise ValueError(f"wave with speed {s} leaves [{self.a}, {self.b}] before t={t}")


def domain_for(speeds: Iterable[float], end_time: float = 1.0, margin: float = 1.5) -> tuple[float, float]:
    """Symmetric domain holding every wave up to ``end_time`` with room to spare."""
    reach = max([abs(s) for s in speeds] + [1.0]) * end_time
    half = math.ceil(margin * reach + 1.0)
    return -float(half), float(half)


def default_grid(profile: SolutionProfile, cells: int = 4000, cfl: float = 0.45,
                 end_time: float = 1.0) -> Grid1D:
    a, b = domain_for(profile_speeds(profile), end_time)
    return Grid1D(a, b, cells, cfl, end_time)


def profile_speeds(profile: SolutionProfile) -> list[float]:
    system = profile.system
    speeds = list(profile.breakpoints())
    for st in (profile.left, profile.right):
        speeds.append(float(system.u_flux.derivative(st.u)))
        speeds.append(float(system.v_flux.G_v(st.u, st.v)))
    return speeds


# --------------------------------------------------------------------------
# u: Godunov


def _extremum_candidates(flux: PiecewiseQuadraticFlux, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    cands = [lo, hi]
    for bp in flux.breakpoints:
        cands.append(np.clip(bp, lo, hi))
    for a, b, _ in flux.coefficients:
        if a != 0.0:
            cands.append(np.clip(-b / (2.0 * a), lo, hi))
    return np.array(cands)


def godunov_interface(flux: PiecewiseQuadraticFlux, ul: np.ndarray, ur: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(interface flux, interface state) of the local Riemann problems.

    The flux is min f on [ul, ur] when ul <= ur and max f on [ur, ul]
    otherwise.  The state is the point attaining it; when several states tie
    (a stationary shock) their mean is used.
    """
    lo, hi = np.minimum(ul, ur), np.maximum(ul, ur)
    cands = _extremum_candidates(flux, lo, hi)
    vals = flux(cands)
    rising = ul <= ur
    ext = np.where(rising, vals.min(axis=0), vals.max(axis=0))
    tol = TIE_TOL * np.maximum(1.0, np.abs(ext))
    hit = np.abs(vals - ext) <= tol
    state = (cands * hit).sum(axis=0) / hit.sum(axis=0)
    return ext, state


@dataclass(frozen=True)
class StepRecord:
    t0: float
    dt: float
    u_face: np.ndarray


def godunov_steps(flux: PiecewiseQuadraticFlux, u0: np.ndarray, grid: Grid1D,
                  stops: Sequence[float] = (), defects: list | None = None) -> Iterator[tuple[StepRecord, np.ndarray]]:
    """Yield ``(step, u_after)`` until ``grid.end_time``, landing on every stop."""
    u = np.array(u0, dtype=float)
    dx = grid.dx
    targets = sorted({float(s) for s in stops if 0 < s < grid.end_time} | {grid.end_time})
    t = 0.0
    k = 0
    while k < len(targets):
        speed = flux.max_abs_slope(float(u.min()), float(u.max()))
        dt = grid.cfl * dx / speed if speed > 0 else targets[k] - t
        if targets[k] - t <= dt * (1 + 1e-12):
            dt = targets[k] - t
        if not (dt > 0 and math.isfinite(dt)):
            raise CFLViolation(f"time step {dt} at t={t}")
        ue = np.concatenate(([u[0]], u, [u[-1]]))
        F, state = godunov_interface(flux, ue[:-1], ue[1:])
        u_new = u - dt / dx * (F[1:] - F[:-1])
        if defects is not None:
            defects.append(abs(dx * float(np.sum(u_new - u)) + dt * (F[-1] - F[0])))
        rec = StepRecord(t, dt, state)
        t = targets[k] if dt == targets[k] - t else t + dt
        if t >= targets[k]:
            k += 1
        u = u_new
        yield rec, u


@dataclass
class FieldHistory:
    times: list[float]
    values: list[np.ndarray]
    max_step_defect: float = 0.0
    steps: int = 0

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.values[i]


def riemann_initial(grid: Grid1D, left: float, right: float) -> np.ndarray:
    return np.where(grid.centers < 0.0, float(left), float(right))


def evolve_u(flux: PiecewiseQuadraticFlux, u_left: float, u_right: float, grid: Grid1D,
             times: Sequence[float] = ()) -> FieldHistory:
    """Cell averages of u at ``times`` (and at the end time)."""
    defects: list[float] = []
    hist = FieldHistory([], [])
    want = set(times) | {grid.end_time}
    for rec, u in godunov_steps(flux, riemann_initial(grid, u_left, u_right), grid, list(want), defects):
        hist.steps += 1
        t = rec.t0 + rec.dt
        if any(abs(t - w) <= 1e-12 * max(1.0, w) for w in want):
            hist.times.append(t)
            hist.values.append(u.copy())
    hist.max_step_defect = max(defects, default=0.0)
    return hist


# --------------------------------------------------------------------------
# v: frozen-face local Lax-Friedrichs


def evolve_v(u_steps: Iterable[tuple[StepRecord, np.ndarray]] | Iterable[StepRecord], v_flux: VFluxKind,
             v_left: float, v_right: float, grid: Grid1D, times: Sequence[float] = (),
             max_substeps: int = 100000) -> FieldHistory:
    """Cell averages of v driven by the interface states of a u evolution."""
    v = riemann_initial(grid, v_left, v_right)
    dx = grid.dx
    want = sorted(set(times) | {grid.end_time})
    hist = FieldHistory([], [])
    worst = 0.0
    for item in u_steps:
        rec = item[0] if isinstance(item, tuple) else item
        uf = rec.u_face
        done = 0.0
        for _ in range(max_substeps):
            if done >= rec.dt:
                break
            ve = np.concatenate(([v[0]], v, [v[-1]]))
            vl, vr = ve[:-1], ve[1:]
            alpha = np.maximum(np.abs(v_flux.G_v(uf, vl)), np.abs(v_flux.G_v(uf, vr)))
            amax = float(alpha.max())
            h = rec.dt - done
            if amax > 0:
                h = min(h, grid.cfl * dx / amax)
            if not (h > 0 and math.isfinite(h)):
                raise CFLViolation(f"v time step {h} at t={rec.t0 + done}")
            F = 0.5 * (v_flux.G(uf, vl) + v_flux.G(uf, vr)) - 0.5 * alpha * (vr - vl)
            v_new = v - h / dx * (F[1:] - F[:-1])
            worst = max(worst, abs(dx * float(np.sum(v_new - v)) + h * (F[-1] - F[0])))
            v = v_new
            done = rec.dt if rec.dt - (done + h) <= 1e-15 * rec.dt else done + h
        else:
            raise CFLViolation(f"more than {max_substeps} v sub-steps in one u step")
        hist.steps += 1
        t = rec.t0 + rec.dt
        if any(abs(t - w) <= 1e-12 * max(1.0, w) for w in want):
            hist.times.append(t)
            hist.values.append(v.copy())
    hist.max_step_defect = worst
    return hist


@dataclass
class RiemannRun:
    grid: Grid1D
    u: FieldHistory
    v: FieldHistory


def run_riemann(system: SystemSpec, left: State, right: State, grid: Grid1D,
                times: Sequence[float] = ()) -> RiemannRun:
    """Evolve both equations together and keep snapshots at ``times``."""
    u_defects: list[float] = []
    u_hist = FieldHistory([], [])
    want = sorted(set(times) | {grid.end_time})

    def steps():
        for rec, u in godunov_steps(system.u_flux, riemann_initial(grid, left.u, right.u), grid, want, u_defects):
            u_hist.steps += 1
            t = rec.t0 + rec.dt
            if any(abs(t - w) <= 1e-12 * max(1.0, w) for w in want):
                u_hist.times.append(t)
                u_hist.values.append(u.copy())
            yield rec

    v_hist = evolve_v(steps(), system.v_flux, left.v, right.v, grid, want)
    u_hist.max_step_defect = max(u_defects, default=0.0)
    return RiemannRun(grid, u_hist, v_hist)


def measurement_times(end_time: float, count: int = 21) -> list[float]:
    return list(np.linspace(0.5 * end_time, end_time, count))


# --------------------------------------------------------------------------
# spike measurement


@dataclass(frozen=True)
class SpikeMeasurement:
    speed: float
    times: tuple[float, ...]
    masses: tuple[float, ...]
    fitted_rate: float
    intercept: float
    fit_residual: float
    mode: str
    half_width: float


def default_half_width(grid: Grid1D, cells: int = 20) -> float:
    # at least 6 cells wide, at most 5% of the domain; the cell floor wins on very coarse grids
    dx = grid.dx
    return max(min(cells * dx, 0.025 * (grid.b - grid.a)), 3 * dx)


def measure_spike(v_hist: FieldHistory, speed: float, grid: Grid1D, profile: SolutionProfile | None = None,
                  mode: str = "exact", half_width: float | None = None,
                  t_window: tuple[float, float] | None = None, plateau_cells: int = 5) -> SpikeMeasurement:
    """Excess v-mass in a window moving with ``speed``, fitted linearly in t.

    ``mode="exact"`` subtracts the closed-form regular part of ``profile``;
    ``mode="plateau"`` subtracts means of the cells just outside the window.
    """
    if mode not in ("exact", "plateau"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and profile is None:
        raise ValueError("exact background needs a profile")
    hw = default_half_width(grid) if half_width is None else half_width
    T = grid.end_time
    t0, t1 = t_window or (0.5 * T, T)
    dx = grid.dx
    times, masses = [], []
    for t, v in zip(v_hist.times, v_hist.values):
        if t < t0 - 1e-12 or t > t1 + 1e-12:
            continue
        c = speed * t
        i0 = int(math.floor((c - hw - grid.a) / dx))
        i1 = int(math.ceil((c + hw - grid.a) / dx))
        if i0 - plateau_cells < 0 or i1 + plateau_cells > grid.cells:
            raise WindowClipped(f"window around x={c:.6g} reaches the boundary")
        x_lo, x_hi = grid.a + i0 * dx, grid.a + i1 * dx
        raw = float(np.sum(v[i0:i1])) * dx
        if mode == "exact":
            background = profile.regular_v_mass(x_lo, x_hi, t)
        else:
            left = float(np.mean(v[i0 - plateau_cells:i0]))
            right = float(np.mean(v[i1:i1 + plateau_cells]))
            background = left * (c - x_lo) + right * (x_hi - c)
        times.append(t)
        masses.append(raw - background)
    if len(times) < 2:
        raise ValueError("need at least two snapshots inside the fit window")
    slope, intercept = np.polyfit(times, masses, 1)
    fit = slope * np.asarray(times) + intercept
    resid = float(np.sqrt(np.mean((np.asarray(masses) - fit) ** 2)))
    return SpikeMeasurement(speed, tuple(times), tuple(masses), float(slope), float(intercept), resid, mode, hw)


def regular_l1(v: np.ndarray, t: float, grid: Grid1D, profile: SolutionProfile, xi_lo: float, xi_hi: float,
               exclude_half_width: float | None = None) -> float:
    """L1 distance between v and the exact regular part on ``xi_lo*t < x < xi_hi*t``.

    Cells within ``exclude_half_width`` of an atom are skipped.
    """
    x = grid.centers
    mask = (x > xi_lo * t) & (x < xi_hi * t)
    hw = default_half_width(grid) if exclude_half_width is None else exclude_half_width
    for atom in profile.atoms:
        mask &= np.abs(x - atom.speed * t) > hw
    exact = profile.v_array(x / t)
    return float(np.sum(np.abs(v[mask] - exact[mask])) * grid.dx)

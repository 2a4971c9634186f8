"""Entropy solution of the scalar Riemann problem by the Oleinik envelope.

For ``u_L > u_R`` the solution follows the upper concave envelope of ``f`` on
``[u_R, u_L]``; for ``u_L < u_R`` the lower convex envelope on ``[u_L, u_R]``.
Straight envelope segments become shocks and arcs of ``f`` become centred
rarefactions.  Both cases are reduced to a lower convex hull, walked from left
to right.  Contact points are found from closed-form tangency conditions,
piece by piece, and then Newton-polished.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DeltaShockError,
    PiecewiseQuadraticFlux,
    QuadraticPiece,
    Rarefaction,
    Shock,
    WaveFan,
)

DEGENERATE_JUMP = 1e-14
SLOPE_TOL = 1e-10


class EnvelopeError(DeltaShockError):
    """The envelope walk produced an invalid fan (bad flux object)."""


@dataclass(frozen=True)
class TangencyPoint:
    a: float
    slope: float
    endpoint: float


@dataclass(frozen=True)
class OleinikReport:
    ok: bool
    message: str = ""
    wave_index: int | None = None
    sample: float | None = None
    min_margin: float = math.inf


# --------------------------------------------------------------------------
# lower convex hull of a piecewise quadratic on [lo, hi]


@dataclass(frozen=True)
class _Seg:
    x0: float
    x1: float


@dataclass(frozen=True)
class _Arc:
    x0: float
    x1: float
    piece: QuadraticPiece


class _Hull:
    def __init__(self, g: PiecewiseQuadraticFlux, lo: float, hi: float):
        self.g = g
        self.lo, self.hi = lo, hi
        self.pieces = [
            QuadraticPiece(max(p.lower, lo), min(p.upper, hi), p.a, p.b, p.c)
            for p in g.pieces
            if min(p.upper, hi) > max(p.lower, lo)
        ]
        self.points = sorted({lo, hi, *(p.lower for p in self.pieces), *(p.upper for p in self.pieces)})

    def value(self, x: float) -> float:
        return self.g(x)

    def piece_right_of(self, x: float) -> QuadraticPiece:
        for p in self.pieces:
            if p.lower <= x < p.upper:
                return p
        return self.pieces[-1]

    def far_candidates(self, p: float) -> list[float]:
        """Abscissae where the chord slope from ``p`` can be minimal."""
        gp = self.value(p)
        out = []
        for pc in self.pieces:
            if pc.upper <= p:
                continue
            start = max(pc.lower, p)
            if pc.lower > p:
                out.append(pc.lower)
            out.append(pc.upper)
            if pc.a != 0.0 and pc.lower > p:
                disc = (pc.value(p) - gp) / pc.a
                if disc >= 0.0:
                    r = math.sqrt(disc)
                    for q in (p - r, p + r):
                        if start < q < pc.upper:
                            out.append(self._polish_point_tangent(pc, q, p, gp))
        return [q for q in out if q > p]

    def min_chord(self, p: float) -> tuple[float, float]:
        """(minimal chord slope from p, farthest abscissa attaining it)."""
        cands = self.far_candidates(p)
        slopes = [self.chord(p, q) for q in cands]
        if not slopes:
            return math.inf, p
        best = min(slopes)
        tol = SLOPE_TOL * max(1.0, abs(best))
        best_q = max(q for q, s in zip(cands, slopes) if s <= best + tol)
        return best, best_q

    def chord(self, p: float, q: float) -> float:
        """Slope of the chord from ``p`` to ``q > p``.

        Within one quadratic piece the slope is ``a (p + q) + b`` exactly,
        which avoids cancellation when ``q`` sits just past ``p``.
        """
        pc = self.piece_right_of(p)
        if q <= pc.upper:
            return pc.a * (p + q) + pc.b
        return (self.value(q) - self.value(p)) / (q - p)

    @staticmethod
    def _polish_point_tangent(pc: QuadraticPiece, q: float, p: float, gp: float) -> float:
        # tangent at q passes through (p, gp)
        for _ in range(3):
            r = pc.value(q) + pc.slope(q) * (p - q) - gp
            dr = 2.0 * pc.a * (p - q)
            if dr == 0.0:
                break
            q_new = q - r / dr
            if not math.isfinite(q_new):
                break
            q = q_new
        return q

    def arc_end(self, p: float, pc: QuadraticPiece) -> float:
        """Where the convex arc of ``pc`` starting at ``p`` leaves the hull."""
        cands = []
        for xs in self.points:
            if xs <= p:
                continue
            ys = self.value(xs)
            disc = (pc.value(xs) - ys) / pc.a
            if disc >= 0.0:
                c = xs - math.sqrt(disc)
                if p < c <= pc.upper:
                    c = self._polish_point_tangent(pc, c, xs, ys)
                    if p < c <= pc.upper:
                        cands.append(c)
        for pj in self.pieces:
            if pj.lower < pc.upper or pj.a <= 0.0:
                continue
            for c, d in _bitangents(pc, pj):
                if p < c <= pc.upper and pj.lower <= d <= pj.upper and d > c:
                    cands.append(c)
        for c in sorted(cands):
            s, _ = self.min_chord(c)
            if s >= pc.slope(c) - SLOPE_TOL * max(1.0, abs(s)):
                return c
        return pc.upper

    def walk(self) -> list:
        out = []
        p = self.lo
        for _ in range(20 * (len(self.pieces) + 2)):
            if p >= self.hi:
                return out
            pc = self.piece_right_of(p)
            d = pc.slope(p)
            s, q = self.min_chord(p)
            if s <= d + SLOPE_TOL * max(1.0, abs(d)):
                out.append(_Seg(p, q))
                p = q
            else:
                c = self.arc_end(p, pc)
                out.append(_Arc(p, c, pc))
                p = c
        raise EnvelopeError("envelope walk did not terminate")


def _bitangents(p1: QuadraticPiece, p2: QuadraticPiece) -> list[tuple[float, float]]:
    """Common tangents of two parabolas: contact abscissae (c on p1, d on p2)."""
    a1, b1, c1 = p1.a, p1.b, p1.c
    a2, b2, c2 = p2.a, p2.b, p2.c
    # common slope s: c1 - (s-b1)^2/(4a1) = c2 - (s-b2)^2/(4a2)
    A = 1.0 / (4 * a2) - 1.0 / (4 * a1)
    B = -2 * b2 / (4 * a2) + 2 * b1 / (4 * a1)
    C = b2 * b2 / (4 * a2) - b1 * b1 / (4 * a1) - (c2 - c1)
    roots = []
    disc = B * B - 4 * A * C
    if disc >= 0.0:
        # cancellation-free roots; A is tiny when the curvatures nearly match
        q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
        if q != 0.0:
            roots.append(C / q)
        if A != 0.0:
            roots.append(q / A)
    polished = []
    for s in roots:
        for _ in range(2):
            dh = 2 * A * s + B
            if dh == 0.0:
                break
            s -= (A * s * s + B * s + C) / dh
        polished.append(s)
    return [((s - b1) / (2 * a1), (s - b2) / (2 * a2)) for s in polished]


# --------------------------------------------------------------------------


def solve_scalar(flux: PiecewiseQuadraticFlux, u_left: float, u_right: float) -> WaveFan:
    """Entropy fan for ``u_t + f(u)_x = 0`` with Riemann data ``(u_left, u_right)``."""
    u_left, u_right = float(u_left), float(u_right)
    if abs(u_left - u_right) < DEGENERATE_JUMP:
        return WaveFan(u_left, u_left, ())
    decreasing = u_left > u_right
    lo, hi = (u_right, u_left) if decreasing else (u_left, u_right)
    g = flux.negated() if decreasing else flux
    elements = _Hull(g, lo, hi).walk()

    waves = []
    if decreasing:
        elements = elements[::-1]
    for el in elements:
        ul, ur = (el.x1, el.x0) if decreasing else (el.x0, el.x1)
        if ul == ur:
            continue
        if isinstance(el, _Seg):
            speed = (flux(ur) - flux(ul)) / (ur - ul)
            if waves and isinstance(waves[-1], Shock) and abs(waves[-1].speed - speed) <= SLOPE_TOL:
                prev = waves.pop()
                ul = prev.u_left
                speed = (flux(ur) - flux(ul)) / (ur - ul)
            waves.append(Shock(ul, ur, speed + 0.0))
        else:
            piece = flux.pieces[flux.piece_index(0.5 * (ul + ur))]
            waves.append(Rarefaction(ul, ur, piece.slope(ul), piece.slope(ur), piece))
    # pin the exact data at the fan ends
    if waves:
        waves[0] = _with_u(waves[0], u_left=u_left, flux=flux)
        waves[-1] = _with_u(waves[-1], u_right=u_right, flux=flux)
    try:
        fan = WaveFan(u_left, u_right, tuple(waves))
    except DeltaShockError as exc:
        raise EnvelopeError(f"envelope produced an invalid fan: {exc}") from exc
    _check_monotone(fan)
    return fan


def _with_u(w, flux, u_left=None, u_right=None):
    ul = w.u_left if u_left is None else u_left
    ur = w.u_right if u_right is None else u_right
    if isinstance(w, Shock):
        return Shock(ul, ur, (flux(ur) - flux(ul)) / (ur - ul) + 0.0)
    return Rarefaction(ul, ur, w.piece.slope(ul), w.piece.slope(ur), w.piece)


def _check_monotone(fan: WaveFan):
    prev = -math.inf
    for w in fan.waves:
        if isinstance(w, Rarefaction) and not w.xi_left < w.xi_right:
            raise EnvelopeError(f"rarefaction with non-increasing speeds {w}")
        if w.xi_left < prev - SLOPE_TOL * max(1.0, abs(prev)):
            raise EnvelopeError(f"non-monotone wave speeds at {w}")
        prev = w.xi_right


def tangency_points(fan: WaveFan) -> list[TangencyPoint]:
    """Shock/rarefaction junctions where the shock is characteristic."""
    out = []
    for w0, w1 in zip(fan.waves, fan.waves[1:]):
        if isinstance(w0, Shock) and isinstance(w1, Rarefaction):
            out.append(TangencyPoint(w1.u_left, w0.speed, w0.u_left))
        elif isinstance(w0, Rarefaction) and isinstance(w1, Shock):
            out.append(TangencyPoint(w0.u_right, w1.speed, w1.u_right))
    return out


def oleinik_check(flux: PiecewiseQuadraticFlux, fan: WaveFan, samples: int = 1000,
                  tol: float = 1e-10) -> OleinikReport:
    """Check the Oleinik E-condition on every shock and speed monotonicity.

    For a shock from ``u_l`` to ``u_r`` with speed ``s`` every intermediate
    ``w`` must satisfy ``(f(w) - f(u_l)) / (w - u_l) >= s``.
    """
    samples = max(samples, 1000)
    prev = -math.inf
    margin = math.inf
    for i, w in enumerate(fan.waves):
        if w.xi_left < prev - tol * max(1.0, abs(prev)):
            return OleinikReport(False, f"wave {i} slower than its left neighbour", i, None, margin)
        prev = w.xi_right
        if not isinstance(w, Shock):
            continue
        ws = w.u_left + (w.u_right - w.u_left) * (np.arange(1, samples + 1) / (samples + 1))
        chord = (flux(ws) - flux(w.u_left)) / (ws - w.u_left)
        excess = chord - w.speed
        margin = min(margin, float(excess.min()))
        bad = np.nonzero(excess < -tol * max(1.0, abs(w.speed)))[0]
        if bad.size:
            j = int(bad[0])
            return OleinikReport(False, f"shock {i} violates the E-condition at w={ws[j]:.17g}",
                                 i, float(ws[j]), margin)
    return OleinikReport(True, "ok", None, None, margin)


@dataclass(frozen=True)
class SampledEnvelope:
    """Piecewise-linear hull vertices from the brute-force oracle."""

    x: np.ndarray
    y: np.ndarray
    spacing: float

    def contact_states(self, min_edge: float | None = None) -> list[float]:
        """Endpoints of hull edges longer than ``min_edge`` (default 10 grid cells)."""
        min_edge = 10 * self.spacing if min_edge is None else min_edge
        out = []
        for x0, x1 in zip(self.x[:-1], self.x[1:]):
            if x1 - x0 > min_edge:
                out.extend([float(x0), float(x1)])
        return out


def sampled_envelope_oracle(flux: PiecewiseQuadraticFlux, u_left: float, u_right: float,
                            n: int) -> SampledEnvelope:
    """Convex/concave hull of ``n`` uniform flux samples (monotone chain)."""
    if n < 100:
        raise ValueError("oracle needs n >= 100 samples")
    lo, hi = min(u_left, u_right), max(u_left, u_right)
    xs = np.linspace(lo, hi, n)
    ys = np.asarray(flux(xs), dtype=float)
    sign = -1.0 if u_left > u_right else 1.0  # upper hull of f == lower hull of -f
    hx, hy = _lower_hull(xs, sign * ys)
    return SampledEnvelope(hx, sign * hy, (hi - lo) / (n - 1))


def _lower_hull(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (xs[i1] - xs[i0]) * (ys[i] - ys[i0]) - (ys[i1] - ys[i0]) * (xs[i] - xs[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.asarray(hull)
    return xs[idx], ys[idx]

"""Measurements on simulated fields: energies, envelopes and reference predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .invariants import EnergyBreakdown, configurational_force
from .modes import ComplexAmplitude, initial_amplitude, solve_frequency
from .pulse import pulse_spectrum  # noqa: F401  (re-exported)


class InsufficientDataError(ValueError):
    pass


VARIANTS = ("d", "d1", "d2", "comoving")


def _cells(state):
    sl = state.interior
    x = state.x[sl]
    u = state.u[sl]
    ud = state.u_dot[sl]
    return x, u, ud, state.center - sl.start


def energy_quadrature(state, p, frame="lab", variant="d", work_correction=0.0, tail_fraction=0.25, tail_tol=1e-3):
    """Energies of a sampled field by trapezoidal and cellwise quadrature.

    Kinetic and foundation terms use the trapezoid rule on nodes, the
    gradient term uses cell differences so the kink at the inclusion costs
    nothing extra.  ``localized`` is False when more than ``tail_tol`` of the
    continuous energy sits in the outer ``tail_fraction`` of the measured
    region.

    ``frame='lab'`` requires ``v == 0``.  In the co-moving frame,
    ``variant='comoving'`` gives the quasi-energy; ``d1``/``d2`` give the lab
    energy ``E(1)`` (``d2`` adds ``M v^2 / 2``), with ``quasi_energy`` equal
    to the total minus ``work_correction``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown energy variant {variant!r}")
    if state.u_dot is None:
        raise ValueError("energy needs the centred velocity u_dot")
    x, u, ud, c = _cells(state)
    dx = x[1] - x[0]
    du = np.diff(u)
    if frame == "lab":
        if p.v != 0 or variant != "d":
            raise ValueError("lab-frame quadrature is for the fixed inclusion (variant 'd')")
        dens_nodes = 0.5 * p.rho * ud**2 + 0.5 * p.k * u**2
        grad_cells = 0.5 * p.T * du**2 / dx
    elif frame == "comoving":
        v = p.v
        dens_nodes = 0.5 * p.rho * ud**2 + 0.5 * p.k * u**2
        if variant == "comoving":
            grad_cells = 0.5 * (p.T - p.rho * v**2) * du**2 / dx
        else:
            ud_mid = 0.5 * (ud[1:] + ud[:-1])
            grad_cells = 0.5 * (p.T + p.rho * v**2) * du**2 / dx - p.rho * v * ud_mid * du
    else:
        raise ValueError(f"unknown frame {frame!r}")
    e_cont = trapezoid(dens_nodes, dx=dx) + float(np.sum(grad_cells))
    e_disc = 0.5 * (p.M * ud[c] ** 2 + p.K * u[c] ** 2)
    if variant == "d2":
        e_disc += 0.5 * p.M * p.v**2
    n = len(x)
    m = max(1, int(tail_fraction * n / 2))
    tail = (
        trapezoid(dens_nodes[:m], dx=dx) + trapezoid(dens_nodes[-m:], dx=dx)
        + np.sum(grad_cells[: m - 1]) + np.sum(grad_cells[-(m - 1):] if m > 1 else 0.0)
    )
    localized = bool(tail <= tail_tol * max(e_cont, np.finfo(float).tiny))
    if variant == "comoving":
        return EnergyBreakdown(e_cont, e_disc, 0.0, e_cont + e_disc, state.t, variant, localized)
    wc = work_correction if variant in ("d1", "d2") else 0.0
    return EnergyBreakdown(e_cont, e_disc, wc, None, state.t, variant, localized)


def configurational_force_from_field(u, p, dx, center):
    """Kink force from the slope-squared jump using second-order one-sided slopes."""
    left = (3.0 * u[center] - 4.0 * u[center - 1] + u[center - 2]) / (2.0 * dx)
    right = (-3.0 * u[center] + 4.0 * u[center + 1] - u[center + 2]) / (2.0 * dx)
    return configurational_force(right**2 - left**2, p)


def quasi_energy_flux(state, p, j):
    """Quasi-energy flux ``-(T - rho v^2) u_xi u_tau - rho v u_tau^2`` at node ``j``."""
    if j == state.center:
        raise ValueError("flux is evaluated away from the inclusion")
    u_xi = (state.u[j + 1] - state.u[j - 1]) / (2 * state.dx)
    ut = state.u_dot[j]
    return -(p.T - p.rho * p.v**2) * u_xi * ut - p.rho * p.v * ut**2


# ---------------------------------------------------------------------------
# envelope of the inclusion signal
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeSample:
    t: float
    amplitude: float
    frequency: float


def _extrema(t, u):
    """Parabolic refinement of interior local extrema: returns times and values."""
    d = np.diff(u)
    idx = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0) | (d[:-1] < 0) & (d[1:] >= 0)) + 1
    y0, y1, y2 = u[idx - 1], u[idx], u[idx + 1]
    den = y0 - 2 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(den != 0, 0.5 * (y0 - y2) / den, 0.0)
    off = np.clip(off, -1.0, 1.0)
    h = t[idx + 1] - t[idx]
    return t[idx] + off * h, y1 - 0.25 * (y0 - y2) * off


def _zero_crossings(t, u):
    s = np.signbit(u)
    idx = np.flatnonzero(s[:-1] != s[1:])
    u0, u1 = u[idx], u[idx + 1]
    frac = u0 / (u0 - u1)
    return t[idx] + frac * (t[idx + 1] - t[idx]), idx


def _smooth(tc, y, width):
    """Local quadratic least-squares fit over a centred window of ``width`` time units.

    Unlike a moving average this has no bias from the curvature of ``y``.
    Windows with fewer than four points fall back to the mean.
    """
    out = np.empty_like(y)
    lo = np.searchsorted(tc, tc - 0.5 * width, side="left")
    hi = np.searchsorted(tc, tc + 0.5 * width, side="right")
    for i, (a, b) in enumerate(zip(lo, hi)):
        if b - a < 4:
            out[i] = y[a:b].mean()
            continue
        s = (tc[a:b] - tc[i]) / width
        A = np.column_stack([np.ones_like(s), s, s * s])
        coef, *_ = np.linalg.lstsq(A, y[a:b], rcond=None)
        out[i] = coef[0]
    return out


def envelope(t, u, smooth_periods=3.0):
    """Amplitude and frequency of an oscillating signal.

    Amplitude samples are ``|u|`` at parabolically refined extrema; frequency
    samples are ``pi`` over the spacing of successive zero crossings.  Both
    are smoothed with a centred moving average over ``smooth_periods`` local
    periods.  Needs at least three extrema.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    te, ue = _extrema(t, u)
    tz, _ = _zero_crossings(t, u)
    if len(te) < 3 or len(tz) < 3:
        raise InsufficientDataError(f"envelope needs >= 3 extrema, found {len(te)}")
    tf = 0.5 * (tz[1:] + tz[:-1])
    wf = math.pi / np.diff(tz)
    period = 2 * math.pi / np.median(wf)
    width = smooth_periods * period
    amp = _smooth(te, np.abs(ue), width)
    freq = _smooth(tf, wf, width)
    freq_at = np.interp(te, tf, freq)
    return [EnvelopeSample(float(a), float(b), float(c)) for a, b, c in zip(te, amp, freq_at)]


def running_phase(t, u):
    """Unwrapped phase ``psi`` of ``u ~ cos psi``, interpolated between zero crossings."""
    tz, idx = _zero_crossings(np.asarray(t, float), np.asarray(u, float))
    if len(tz) < 2:
        return np.zeros_like(np.asarray(t, float))
    falling = u[idx] > 0
    base = math.pi / 2 if falling[0] else 1.5 * math.pi
    phase = base + math.pi * np.arange(len(tz))
    return np.interp(t, tz, phase)


# ---------------------------------------------------------------------------
# reference predictions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StationaryPhasePrediction:
    """Late-time inclusion motion ``|C| cos(omega0 t - arg C)`` after a pulse."""

    amplitude: ComplexAmplitude
    omega0: float

    def __call__(self, t):
        return self.amplitude.modulus * np.cos(self.omega0 * np.asarray(t, float) - self.amplitude.phase)


def stationary_phase_reference(p, pulse):
    mode = solve_frequency(p)
    return StationaryPhasePrediction(initial_amplitude(mode, pulse), mode.omega0)


def fit_oscillation(t, u, omega):
    """Least-squares ``a cos(omega t) + b sin(omega t)``; returns the complex amplitude."""
    t = np.asarray(t, float)
    A = np.column_stack([np.cos(omega * t), np.sin(omega * t)])
    (a, b), *_ = np.linalg.lstsq(A, np.asarray(u, float), rcond=None)
    return ComplexAmplitude.from_complex(complex(a, b))


def phase_aligned_error(u_num, u_ref):
    """Relative L2 distance after the best phase shift within the mode's span.

    ``u_ref`` is a pair of quadrature profiles ``(u_cos, u_sin)``; the
    numerical field is projected onto their span and the residual measured.
    """
    basis = np.column_stack(u_ref)
    coef, *_ = np.linalg.lstsq(basis, u_num, rcond=None)
    fit = basis @ coef
    return float(np.linalg.norm(u_num - fit) / np.linalg.norm(fit)), coef


def discrete_frequency(p, dx, dt, moving=False):
    """Frequency of the trapped mode supported by the finite-difference scheme.

    Solves the scheme's interior dispersion relation for the decaying
    spatial factors on either side, then the inclusion-node equation for
    ``omega``.  The difference from the continuous root is the phase drift
    of the scheme.
    """
    tv = p.T - p.rho * p.v**2 if moving else p.T
    v = p.v if moving else 0.0
    a0 = tv / dx**2

    def node(w):
        om_t = 2 * math.sin(0.5 * w * dt) / dt
        om_h = math.sin(w * dt) / dt
        g = 1j * p.rho * v * om_h / dx
        roots = np.roots([a0 + g, -2 * a0 + p.rho * om_t**2 - p.k, a0 - g])
        lam_r = roots[np.argmin(np.abs(roots))]
        lam_l = roots[np.argmax(np.abs(roots))]
        val = (p.rho * dx + p.M) * (-(om_t**2)) - (
            tv / dx * (lam_r - 2 + 1 / lam_l) + 1j * p.rho * v * om_h * (lam_r - 1 / lam_l) - p.k * dx - p.K
        )
        return val.real

    w0 = solve_frequency(p).omega0
    lo, hi = 0.98 * w0, 1.02 * w0
    return brentq(node, lo, hi, xtol=1e-15, rtol=1e-14)

"""Trapped-mode frequency, shape and amplitude factors.

For a fixed inclusion (``v = 0``) the mode is the standing wave
``|C| exp(-S|x|) cos(omega0 t - arg C)``; for a moving one it is carried with
the inclusion and picks up the wavenumber ``B``:
``|C| exp(-S|xi|) cos(omega0 t - B xi - arg C)`` with ``xi = x - v t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import LocalizationError, ParamSet, check_localization, frequency_residual
from .pulse import pulse_spectrum

TOL_ROOT = 1e-12
MAX_ITER = 200


class SolverError(RuntimeError):
    def __init__(self, message, bracket):
        super().__init__(f"{message}; final bracket [{bracket[0]!r}, {bracket[1]!r}]")
        self.bracket = bracket


class InconsistentRootError(ValueError):
    pass


class DegenerateExcitationWarning(UserWarning):
    pass


def wrap_phase(phase):
    """Map an angle to ``(-pi, pi]``."""
    w = math.remainder(phase, 2 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class ComplexAmplitude:
    modulus: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.modulus >= 0:
            raise ValueError(f"modulus must be non-negative, got {self.modulus!r}")
        object.__setattr__(self, "phase", wrap_phase(float(self.phase)))

    @classmethod
    def from_complex(cls, z):
        return cls(abs(z), math.atan2(z.imag, z.real) if z != 0 else 0.0)

    @property
    def value(self):
        return self.modulus * complex(math.cos(self.phase), math.sin(self.phase))

    def scaled(self, factor):
        return ComplexAmplitude(self.modulus * factor, self.phase)


@dataclass(frozen=True)
class TrappedMode:
    omega0: float
    S: float
    B: float
    c0: float
    v: float
    params: ParamSet

    @property
    def decay_length(self):
        return 1.0 / self.S

    @property
    def period(self):
        return 2 * math.pi / self.omega0


def bracketed_root(f, a, b, xtol=4 * np.finfo(float).eps, maxiter=MAX_ITER):
    """Root of ``f`` on ``[a, b]`` with ``f(a) > 0 > f(b)`` (or the reverse).

    Regula falsi with the Illinois modification, falling back to bisection
    whenever two consecutive steps fail to halve the bracket.
    """
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise SolverError("root not bracketed", (a, b))
    side = 0
    width = abs(b - a)
    stalled = 0
    for _ in range(maxiter):
        if abs(b - a) <= xtol * max(abs(a), abs(b)):
            return a if abs(fa) < abs(fb) else b
        if stalled >= 2:
            c = 0.5 * (a + b)
            stalled = 0
        else:
            c = (a * fb - b * fa) / (fb - fa)
            if not min(a, b) < c < max(a, b):
                c = 0.5 * (a + b)
        fc = f(c)
        if fc == 0:
            return c
        if np.sign(fc) == np.sign(fb):
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = c, fc
            if side == 1:
                fb *= 0.5
            side = 1
        new_width = abs(b - a)
        stalled = stalled + 1 if new_width > 0.5 * width else 0
        width = new_width
    raise SolverError(f"no convergence after {maxiter} iterations", (a, b))


def decay_rate(p, omega):
    """Spatial decay rate ``S = sqrt(kT - k rho v^2 - T rho omega^2) / (T - rho v^2)``."""
    return math.sqrt(p.radicand(omega)) / (p.T - p.rho * p.v**2)


def wavenumber(p, omega):
    """Carrier wavenumber ``B = v omega rho / (T - rho v^2)``."""
    return p.v * omega * p.rho / (p.T - p.rho * p.v**2)


def c0_fixed(p, omega):
    """Amplitude factor of the standing mode in the form with ``sqrt(k - rho omega^2)``."""
    r = math.sqrt(p.k - p.rho * omega**2)
    return r / (omega * (math.sqrt(p.T) * p.rho + p.M * r))


def c0_moving(p, omega):
    """Amplitude factor of the carried mode, valid for any sub-critical ``v``."""
    r = math.sqrt(p.radicand(omega))
    return r / (omega * (p.T * p.rho + p.M * r))


def c0_equivalent_form(p, omega0):
    """``(M w^2 - K) / (w (M^2 w^2 - K M + 2 T rho))``, equal to :func:`c0_fixed` at a root.

    Needs no square root; as ``T, rho, k -> 0`` (an isolated oscillator) it
    tends to ``1 / (M omega0)``.
    """
    if p.v != 0:
        raise ValueError("equivalent amplitude form is stated for a fixed inclusion (v = 0)")
    den = p.M**2 * omega0**2 - p.K * p.M + 2 * p.T * p.rho
    if not den > 0:
        raise InconsistentRootError(f"non-positive denominator {den!r}: omega0 is not a root of the frequency equation")
    return (p.M * omega0**2 - p.K) / (omega0 * den)


def solve_frequency(p, tol=TOL_ROOT):
    """Solve the frequency equation and evaluate the mode quantities."""
    lo, hi = check_localization(p)
    g = lambda w: float(frequency_residual(p, w))  # noqa: E731
    omega = bracketed_root(g, lo, hi)
    scale = max(abs(p.K), p.M * omega**2, 2 * math.sqrt(p.k * p.T))
    if abs(g(omega)) > tol * scale:
        raise SolverError(f"residual {g(omega):.3e} above tolerance", (omega, omega))
    if not p.radicand(omega) > 0 or (p.v == 0 and not p.k - p.rho * omega**2 > 0):
        raise LocalizationError(f"root omega0={omega!r} sits at the cut-off: decay rate is zero")
    if p.v == 0:
        S, B, c0 = math.sqrt((p.k - p.rho * omega**2) / p.T), 0.0, c0_fixed(p, omega)
    else:
        S, B, c0 = decay_rate(p, omega), wavenumber(p, omega), c0_moving(p, omega)
    return TrappedMode(omega0=omega, S=S, B=B, c0=c0, v=p.v, params=p)


def mode_profile(mode, amp, x, t, frame="lab"):
    """Displacement of the mode with complex amplitude ``amp``.

    In the ``lab`` frame the envelope is centred on ``x = v t``; in the
    ``comoving`` frame ``x`` is already the co-moving coordinate ``xi``.
    """
    x = np.asarray(x, dtype=float)
    xi = x - mode.v * t if frame == "lab" else x
    return amp.modulus * np.exp(-mode.S * np.abs(xi)) * np.cos(mode.omega0 * t - mode.B * xi - amp.phase)


def initial_amplitude(mode, pulse):
    """Late-time amplitude excited by ``pulse`` in the constant-parameter system.

    ``|C| = c0 |Fp(omega0)|`` and ``arg C = arg Fp(omega0) - pi/2`` with
    ``Fp(w) = int p(t) exp(-i w t) dt``.
    """
    fp = pulse_spectrum(pulse, mode.omega0)
    threshold = 1e-12 * pulse.peak() * pulse.duration
    if abs(fp) < threshold:
        warnings.warn(
            f"pulse spectrum |Fp(omega0)|={abs(fp):.3e} is negligible: trapped mode not excited at leading order",
            DegenerateExcitationWarning,
            stacklevel=2,
        )
    if fp == 0:
        return ComplexAmplitude(0.0, -math.pi / 2)
    return ComplexAmplitude(mode.c0 * abs(fp), math.atan2(fp.imag, fp.real) - math.pi / 2)

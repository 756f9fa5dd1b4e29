"""Force pulses applied to the inclusion and their Fourier transforms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

SHAPES = ("half-sine", "gaussian", "raised-cosine")


@dataclass(frozen=True)
class PulseSpec:
    """A force ``p(t)`` that vanishes outside ``[0, duration]``.

    shape
        ``half-sine``: ``A sin(carrier t)``; the duration must hold a whole
        number of half periods of the carrier so the pulse stays continuous.
        ``gaussian``: carrier under a Gaussian window (std ``duration / 8``)
        shifted to zero at both ends.
        ``raised-cosine``: carrier under a Hann window.
    """

    shape: str = "half-sine"
    amplitude: float = 1.0
    carrier: float = 1.0
    duration: float = math.pi

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown pulse shape {self.shape!r}; expected one of {SHAPES}")
        if not self.duration > 0:
            raise ValueError("pulse duration must be positive")
        if not self.carrier > 0:
            raise ValueError("pulse carrier must be positive")
        if self.shape == "half-sine":
            halves = self.carrier * self.duration / math.pi
            if abs(halves - round(halves)) > 1e-9 * max(1.0, halves) or round(halves) < 1:
                raise ValueError("half-sine burst needs carrier * duration = n * pi")

    @classmethod
    def half_sine(cls, carrier, amplitude=1.0, halves=1):
        return cls("half-sine", amplitude, carrier, halves * math.pi / carrier)

    def window(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.duration)
        if self.shape == "half-sine":
            w = np.ones_like(t)
        elif self.shape == "raised-cosine":
            w = 0.5 * (1.0 - np.cos(2.0 * np.pi * t / self.duration))
        else:
            sigma = self.duration / 8.0
            edge = math.exp(-0.5 * (self.duration / 2 / sigma) ** 2)
            w = (np.exp(-0.5 * ((t - self.duration / 2) / sigma) ** 2) - edge) / (1.0 - edge)
        return np.where(inside, w, 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.amplitude * self.window(t) * np.sin(self.carrier * t)
        return out if out.ndim else float(out)

    def peak(self, n=4001):
        t = np.linspace(0.0, self.duration, n)
        return float(np.max(np.abs(self(t))))

    def scaled(self, factor):
        return PulseSpec(self.shape, self.amplitude * factor, self.carrier, self.duration)


def pulse_spectrum(pulse, omega):
    """``Fp(omega) = int_0^t0 p(t) exp(-i omega t) dt`` by adaptive quadrature."""
    if not omega > 0:
        raise ValueError("spectrum is evaluated at positive frequencies only")
    if pulse.amplitude == 0:
        return 0j
    f = lambda t: pulse.amplitude * float(pulse.window(t)) * math.sin(pulse.carrier * t)  # noqa: E731
    opts = dict(epsabs=1e-14 * abs(pulse.amplitude) * pulse.duration, epsrel=1e-12, limit=400)
    re, _ = quad(f, 0.0, pulse.duration, weight="cos", wvar=omega, **opts)
    im, _ = quad(f, 0.0, pulse.duration, weight="sin", wvar=omega, **opts)
    return complex(re, -im)

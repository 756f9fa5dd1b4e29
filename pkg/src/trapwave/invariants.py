"""Closed-form energies, actions and amplitude laws of the trapped mode.

The correct adiabatic invariant is the action ``J = E / omega0`` for a fixed
inclusion and ``Jq = Eq / omega0`` built from the co-moving quasi-energy for a
moving one.  Both equal ``|C|^2 / (2 c0)``, so the amplitude follows
``|C(theta)| = |C(0)| sqrt(c0(theta) / c0(0))``.

:func:`false_invariants` evaluates the lab-frame candidates ``J1`` and ``J2``
that fail to be invariant once ``v != 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .modes import c0_equivalent_form, solve_frequency
from .params import Constant, LinearRamp, LocalizationError, Tabulated

TRACE_COLUMNS = (
    "t", "amplitude", "frequency", "E_c", "E_d", "E", "work_correction",
    "quasi_E", "J", "J_quasi", "J1", "J2", "phi",
)


class WrongVariantError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energies at one instant.

    ``variant`` names the discrete-energy definition: ``d`` (fixed inclusion),
    ``d1`` (moving, without the longitudinal kinetic energy), ``d2`` (with it)
    or ``comoving``.  ``quasi_energy`` is ``e_cont + e_disc - work_correction``
    for the lab variants and the co-moving total for ``comoving``.
    """

    e_cont: float
    e_disc: float
    work_correction: float = 0.0
    quasi_energy: float = None
    time: float = 0.0
    variant: str = "d"
    localized: bool = True

    def __post_init__(self):
        if self.quasi_energy is None:
            object.__setattr__(self, "quasi_energy", self.e_cont + self.e_disc - self.work_correction)

    @property
    def total(self):
        return self.e_cont + self.e_disc


@dataclass
class InvariantTrace:
    """Columns of measured (or predicted) quantities sampled in time."""

    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in TRACE_COLUMNS:
            self.columns.setdefault(name, np.zeros(0))
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}

    def __getitem__(self, name):
        return self.columns[name]

    def __len__(self):
        return len(self.columns["t"])

    def validate(self):
        t = self.columns["t"]
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trace times must be strictly increasing")
        for name in TRACE_COLUMNS:
            if not np.all(np.isfinite(self.columns[name])):
                raise ValueError(f"non-finite entries in trace column {name!r}")
        return self

    def window(self, t_start, t_stop=math.inf):
        keep = (self.columns["t"] >= t_start) & (self.columns["t"] <= t_stop)
        return InvariantTrace({k: v[keep] for k, v in self.columns.items()})

    def amplitude_invariant(self, c0_of_t):
        """``I = |C| / sqrt(c0)`` evaluated with the supplied ``c0(t)`` callable."""
        c0 = np.array([c0_of_t(t) for t in self.columns["t"]])
        return self.columns["amplitude"] / np.sqrt(c0)


# ---------------------------------------------------------------------------
# actions
# ---------------------------------------------------------------------------


def action_fixed(p, mode, modulus):
    """``J = E / omega0`` of the standing mode with amplitude ``modulus``."""
    if p.v != 0:
        raise WrongVariantError("action_fixed is for a fixed inclusion; use action_moving for v != 0")
    w = mode.omega0
    r2 = p.k - p.rho * w**2
    if r2 <= 0:
        # isolated oscillator limit T = rho = k = 0
        return modulus**2 / (2 * c0_equivalent_form(p, w))
    r = math.sqrt(r2)
    return 0.5 * modulus**2 * w * (math.sqrt(p.T) * p.rho + p.M * r) / r


def action_moving(p, mode, modulus):
    """``Jq = Eq / omega0`` from the co-moving quasi-energy."""
    w = mode.omega0
    r = math.sqrt(p.radicand(w))
    return modulus**2 * w * (p.T * p.rho + p.M * r) / (2 * r)


def amplitude_invariant(mode, modulus):
    """``I = |C| / sqrt(c0)``; ``J = I^2 / 2``."""
    return modulus / math.sqrt(mode.c0)


def lab_quasi_energy(p, mode, modulus):
    """Lab-frame quasi-energy of the carried mode over one oscillation.

    ``E(1)`` minus the work ``W = -int F v dt`` done on the inclusion since the
    last zero crossing of ``U`` (``cos 2 psi = -1``), where ``F`` is the kink
    force.  ``E(1) - W`` is constant over the cycle and equals the minimum of
    ``E(1)``.  Equals ``E`` at ``v = 0``.
    """
    w = mode.omega0
    r = math.sqrt(p.radicand(w))
    tv = p.T - p.rho * p.v**2
    return 0.5 * modulus**2 * (p.M * w**2 + p.T**2 * p.rho * w**2 / (tv * r))


def false_invariants(p, mode, modulus):
    """``(J1, J2)``: lab quasi-energies over frequency, without/with ``M v^2 / 2``."""
    w = mode.omega0
    j1 = lab_quasi_energy(p, mode, modulus) / w
    j2 = j1 + p.M * p.v**2 / (2 * w)
    return j1, j2


def false_amplitude_factor(p, mode):
    """Amplitude law implied by holding ``J1`` constant: ``|C| ~ sqrt(this)``."""
    return 1.0 / false_invariants(p, mode, 1.0)[0]


def identity_sides(p, omega):
    """Both sides of the algebraic identity used to simplify the lab quasi-energy.

    ``2k(T - rho v^2)^2 + 2 rho^2 v^2 T w^2 = 2(T - rho v^2) R(w) + 2 T^2 rho w^2``
    with ``R`` the radicand.  Holds for every ``w``.
    """
    tv = p.T - p.rho * p.v**2
    lhs = 2 * p.k * tv**2 + 2 * p.rho**2 * p.v**2 * p.T * omega**2
    rhs = 2 * tv * p.radicand(omega) + 2 * p.T**2 * p.rho * omega**2
    return lhs, rhs


# ---------------------------------------------------------------------------
# energies of the analytic mode
# ---------------------------------------------------------------------------


def cos2psi_coefficient(p, omega):
    """Coefficient of ``cos 2 psi`` in ``2 E / C^2``; zero at a root of the frequency equation."""
    return p.K - p.M * omega**2 + 2 * math.sqrt(p.radicand(omega))


def closed_form_energies(p, mode, amp, t, frame=None):
    """Energies of the mode at time ``t`` (``psi = omega0 t - arg C``).

    ``frame='lab'`` (fixed inclusion) gives ``E_c`` and ``E_d``;
    ``frame='comoving'`` gives the co-moving quasi-energy split.
    """
    if frame is None:
        frame = "lab" if p.v == 0 else "comoving"
    w, S, B = mode.omega0, mode.S, mode.B
    c2 = amp.modulus**2
    psi = w * t - amp.phase
    cos2 = math.cos(2 * psi)
    e_disc = 0.5 * c2 * (p.M * w**2 * math.sin(psi) ** 2 + p.K * math.cos(psi) ** 2)
    tv = p.T - p.rho * p.v**2
    if frame == "lab":
        if p.v != 0:
            raise WrongVariantError("lab closed form is for the fixed inclusion")
        e_cont = 0.5 * c2 * (
            p.rho * w**2 * (1 - cos2) / (2 * S) + tv * S * (1 + cos2) / 2 + p.k * (1 + cos2) / (2 * S)
        )
        return EnergyBreakdown(e_cont, e_disc, 0.0, None, t, "d")
    if frame != "comoving":
        raise ValueError(f"unknown frame {frame!r}")
    q = B**2 + S**2
    e_cont = 0.5 * c2 * (
        p.rho * w**2 / (2 * S) * (1 - S**2 * cos2 / q)
        + tv * (q + S**2 * cos2) / (2 * S)
        + p.k * (1 / (2 * S) + S * cos2 / (2 * q))
    )
    return EnergyBreakdown(e_cont, e_disc, 0.0, e_cont + e_disc, t, "comoving")


# ---------------------------------------------------------------------------
# configurational force
# ---------------------------------------------------------------------------


def configurational_force(jump, p):
    """Wave-pressure force ``F = -(T - rho v^2) [u'^2] / 2`` from the slope-squared jump."""
    return -0.5 * (p.T - p.rho * p.v**2) * jump


def kink_jump(mode, amp, t):
    """``[u'^2]`` across the inclusion for the analytic mode at time ``t``.

    One-sided slopes are ``|C| (-/+ S cos psi + B sin psi)``, hence
    ``[u'^2] = -2 S B |C|^2 sin 2 psi``.
    """
    psi = mode.omega0 * t - amp.phase
    return -2.0 * mode.S * mode.B * amp.modulus**2 * math.sin(2 * psi)


# ---------------------------------------------------------------------------
# slow evolution along a schedule
# ---------------------------------------------------------------------------


def _mode_at(schedule, theta):
    try:
        return solve_frequency(schedule.at_theta(theta))
    except LocalizationError as exc:
        raise LocalizationError(f"localization lost on the path: {exc}", theta=theta) from None


def check_path(schedule, theta_end, n=201):
    """Solve the mode on ``n`` points of ``[0, theta_end]``; raise with the failing theta."""
    for theta in np.linspace(0.0, theta_end, n):
        _mode_at(schedule, float(theta))


def wkb_amplitude(schedule, t, initial):
    """``|C(theta)| = |C(0)| sqrt(c0(theta) / c0(0))`` at ``theta = epsilon t``."""
    theta = schedule.epsilon * t
    check_path(schedule, theta)
    c0_start = _mode_at(schedule, 0.0).c0
    c0_now = _mode_at(schedule, theta).c0
    return initial.modulus * math.sqrt(c0_now / c0_start)


def _breakpoints(schedule):
    pts = set()
    for c in schedule.curves.values():
        if isinstance(c, LinearRamp):
            pts.update((c.theta0, c.theta1))
        elif isinstance(c, Tabulated):
            pts.update(c.thetas)
    return sorted(pts)


def _phase_increment(schedule, a, b, epsrel):
    eps = schedule.epsilon
    f = lambda s: _mode_at(schedule, eps * s).omega0  # noqa: E731
    inner = [bp / eps for bp in _breakpoints(schedule) if a < bp / eps < b]
    edges = [a, *inner, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=200)
        total += val
    return total


def phase_integral(schedule, t, epsrel=1e-11):
    """Running phase ``int_0^t omega0(epsilon s) ds``."""
    if t == 0:
        return 0.0
    check_path(schedule, schedule.epsilon * t, n=51)
    if all(isinstance(c, Constant) for c in schedule.curves.values()):
        return _mode_at(schedule, 0.0).omega0 * t
    return _phase_increment(schedule, 0.0, t, epsrel)


def closed_form_trace(schedule, times, initial, moving=None):
    """Semi-analytic :class:`InvariantTrace` along ``schedule`` from ``|C(0)|``.

    Energies are the phase-averaged closed forms; ``J_quasi`` is the correct
    action and stays equal to its initial value.
    """
    moving = schedule.has_motion if moving is None else moving
    times = np.asarray(times, dtype=float)
    c0_start = _mode_at(schedule, 0.0).c0
    rows = {name: [] for name in TRACE_COLUMNS}
    phi = 0.0
    t_prev = 0.0
    for t in times:
        if t > t_prev:
            phi += _phase_increment(schedule, t_prev, t, 1e-11)
            t_prev = t
        theta = schedule.epsilon * t
        mode = _mode_at(schedule, theta)
        p = mode.params
        amp = initial.modulus * math.sqrt(mode.c0 / c0_start)
        if moving or p.v != 0:
            jq = action_moving(p, mode, amp)
            j1, j2 = false_invariants(p, mode, amp)
            e1 = lab_quasi_energy(p, mode, amp)
        else:
            jq = action_fixed(p, mode, amp)
            j1, j2 = jq, jq
            e1 = jq * mode.omega0
        e_d = 0.25 * amp**2 * (p.M * mode.omega0**2 + p.K)
        e_q = jq * mode.omega0
        rows["t"].append(t)
        rows["amplitude"].append(amp)
        rows["frequency"].append(mode.omega0)
        rows["E_c"].append(e_q - e_d)
        rows["E_d"].append(e_d)
        rows["E"].append(e1)
        rows["work_correction"].append(0.0)
        rows["quasi_E"].append(e_q)
        rows["J"].append(e1 / mode.omega0)
        rows["J_quasi"].append(jq)
        rows["J1"].append(j1)
        rows["J2"].append(j2)
        rows["phi"].append(phi)
    return InvariantTrace(rows)

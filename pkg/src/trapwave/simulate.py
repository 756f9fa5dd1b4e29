"""Finite-difference time stepping of the string with the inclusion.

The string is discretized on nodes ``x_j = j dx`` with the inclusion pinned
to the centre node.  Time integration is the three-level leapfrog scheme
written for momenta, so slowly varying ``rho`` and ``M`` enter as
``(rho u_t)_t`` and ``(M U_t)_t``.  The inclusion's mass and spring are
lumped into the centre node, whose equation then carries the interaction
force implicitly.

A moving inclusion is simulated in co-moving coordinates ``xi = x - l(t)``
where it stays on the centre node.  The mixed derivative ``2 rho v u_xi_tau``
is centred in time, which couples neighbouring nodes at the new level; each
step then needs one tridiagonal solve.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs

from .invariants import TRACE_COLUMNS, InvariantTrace, check_path
from .modes import ComplexAmplitude, mode_profile, solve_frequency
from .params import AdmissibilityError

logger = logging.getLogger(__name__)

CFL = 0.9


class StepSizeError(ValueError):
    pass


class SimulationFailure(RuntimeError):
    """A run stopped early; ``partial`` holds the :class:`RunResult` up to ``t``."""

    def __init__(self, message, t, partial):
        super().__init__(f"t={t:.17g}: {message}")
        self.t = t
        self.partial = partial


class BlowUpError(RuntimeError):
    def __init__(self, t):
        super().__init__(f"non-finite field at t={t!r}")
        self.t = t


@dataclass(frozen=True)
class Grid:
    """Symmetric grid ``[-L, L]`` with absorbing sponges in the outer ``sponge_width``."""

    half_width: float
    n_cells: int
    sponge_width: float
    sponge_strength: float

    def __post_init__(self):
        if self.n_cells % 2:
            raise ValueError("n_cells must be even so the inclusion sits on a node")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if not 0 <= self.sponge_width < self.half_width:
            raise ValueError("sponge must fit inside the half-width")

    @property
    def dx(self):
        return 2.0 * self.half_width / self.n_cells

    @property
    def x(self):
        n = self.n_cells // 2
        return np.arange(-n, n + 1) * self.dx

    @property
    def center(self):
        return self.n_cells // 2

    @property
    def sponge_start(self):
        return self.half_width - self.sponge_width

    @property
    def sigma(self):
        """Damping rate profile: quadratic ramp up to ``sponge_strength`` at the ends."""
        if self.sponge_width == 0:
            return np.zeros(self.n_cells + 1)
        s = np.clip((np.abs(self.x) - self.sponge_start) / self.sponge_width, 0.0, None)
        return self.sponge_strength * s**2

    @property
    def interior(self):
        """Slice of nodes outside the sponges."""
        x = self.x
        idx = np.flatnonzero(np.abs(x) <= self.sponge_start + 1e-12 * self.half_width)
        return slice(int(idx[0]), int(idx[-1]) + 1)

    @classmethod
    def for_decay_lengths(cls, short, long, points_per_decay=100, core_decays=40, sponge_decays=10, speed=1.0):
        """Resolve ``short`` with ``points_per_decay`` nodes, hold ``core_decays`` of ``long``."""
        dx = short / points_per_decay
        sponge = sponge_decays * long
        half = core_decays * long + sponge
        n_half = int(math.ceil(half / dx))
        strength = 50.0 * speed / sponge if sponge > 0 else 0.0
        return cls(n_half * dx, 2 * n_half, sponge, strength)

    @classmethod
    def for_schedule(cls, schedule, points_per_decay=100, core_decays=40, sponge_decays=10, n_theta=201):
        """Grid sized for the shortest and longest decay lengths along the schedule."""
        lengths, speeds = [], []
        for theta in np.linspace(0.0, schedule.theta_max, n_theta):
            p = schedule.at_theta(theta)
            lengths.append(1.0 / solve_frequency(p).S)
            speeds.append(math.sqrt(p.T / p.rho) if p.rho > 0 else math.inf)
        return cls.for_decay_lengths(
            min(lengths), max(lengths), points_per_decay, core_decays, sponge_decays, speed=max(speeds)
        )


@dataclass
class FieldState:
    """Field on the grid at time ``t``.

    ``u_prev`` is the field one step earlier (the leapfrog history);
    ``u_dot`` is the centred velocity at ``t`` when known.  In the co-moving
    frame ``x`` is the co-moving coordinate and ``u_dot`` is ``u_tau``.
    """

    t: float
    x: np.ndarray
    u: np.ndarray
    u_prev: np.ndarray = None
    u_dot: np.ndarray = None
    dt: float = None
    frame: str = "lab"
    center: int = None
    interior: slice = None

    def __post_init__(self):
        if self.center is None:
            self.center = int(np.argmin(np.abs(self.x)))
        if self.interior is None:
            self.interior = slice(0, len(self.x))

    @property
    def U(self):
        """Inclusion displacement (the field at the inclusion node)."""
        return float(self.u[self.center])

    @property
    def U_dot(self):
        if self.u_dot is not None:
            return float(self.u_dot[self.center])
        return float((self.u[self.center] - self.u_prev[self.center]) / self.dt)

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    def copy(self):
        return replace(
            self,
            u=self.u.copy(),
            u_prev=None if self.u_prev is None else self.u_prev.copy(),
            u_dot=None if self.u_dot is None else self.u_dot.copy(),
        )


def zero_state(grid, dt, frame="lab"):
    z = np.zeros(grid.n_cells + 1)
    return FieldState(0.0, grid.x, z, z.copy(), z.copy(), dt, frame, grid.center, grid.interior)


def mode_state(grid, mode, amp, dt, t=0.0, frame=None):
    """State initialised with the analytic mode at ``t`` and ``t - dt``."""
    frame = frame or ("lab" if mode.v == 0 else "comoving")
    x = grid.x
    u = mode_profile(mode, amp, x, t, frame)
    u_prev = mode_profile(mode, amp, x, t - dt, frame)
    xi = x if frame == "comoving" else x - mode.v * t
    u_dot = -amp.modulus * mode.omega0 * np.exp(-mode.S * np.abs(xi)) * np.sin(
        mode.omega0 * t - mode.B * xi - amp.phase
    )
    for arr in (u, u_prev):
        arr[0] = arr[-1] = 0.0
    return FieldState(t, x, u, u_prev, u_dot, dt, frame, grid.center, grid.interior)


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------


class _Tridiagonal:
    """LU factors of the co-moving update matrix (Dirichlet rows at both ends)."""

    def __init__(self, m, a):
        n = m.size
        d = m.copy()
        d[0] = d[-1] = 1.0
        du = np.full(n - 1, -a)
        dl = np.full(n - 1, a)
        du[0] = 0.0
        dl[-1] = 0.0
        dl, d, du, du2, ipiv, info = dgttrf(dl, d, du)
        if info != 0:
            raise np.linalg.LinAlgError(f"singular co-moving update matrix (info={info})")
        self.factors = (dl, d, du, du2, ipiv)

    def solve(self, rhs):
        x, info = dgttrs(*self.factors, rhs)
        return x


@lru_cache(maxsize=4)
def _tridiagonal_factors(n, center, dx, rho, M, a):
    m = np.full(n, rho * dx)
    m[center] += M
    return _Tridiagonal(m, a)


def _node_mass(p, dx, n, center):
    m = np.full(n, p.rho * dx)
    m[center] += p.M
    return m


def _check_dt(p, dx, dt, moving):
    if p.rho <= 0:
        raise AdmissibilityError("time stepping needs rho > 0")
    c = math.sqrt(p.T / p.rho)
    limit = CFL * dx / (c + (abs(p.v) if moving else 0.0))
    if dt > limit * (1 + 1e-12):
        raise StepSizeError(f"dt={dt!r} exceeds CFL limit {limit!r}")


def _elastic_force(u, p, dx, center, pulse_value, tension):
    f = np.empty_like(u)
    f[1:-1] = tension * (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx
    f[0] = f[-1] = 0.0
    f -= p.k * dx * u
    f[center] += pulse_value - p.K * u[center]
    return f


def _advance(state, p, pulse_value, dt, p_back, p_fwd, moving):
    p_back = p if p_back is None else p_back
    p_fwd = p if p_fwd is None else p_fwd
    dx = state.dx
    _check_dt(p, dx, dt, moving)
    for q in (p, p_back, p_fwd):
        if moving:
            q.check()
    u, u_prev = state.u, state.u_prev
    n, c = u.size, state.center
    m_b = _node_mass(p_back, dx, n, c)
    m_f = _node_mass(p_fwd, dx, n, c)
    tension = p.T - p.rho * p.v**2 if moving else p.T
    f = _elastic_force(u, p, dx, c, pulse_value, tension)
    rhs = m_f * u + m_b * (u - u_prev) + dt * dt * f
    a = 0.5 * dt * p.rho * p.v if moving else 0.0
    if moving and (p_fwd.rho * p_fwd.v != p_back.rho * p_back.v):
        # (rho v)_tau u_xi drift term
        drift = (p_fwd.rho * p_fwd.v - p_back.rho * p_back.v) / dt
        rhs[1:-1] += dt * dt * drift * 0.5 * (u[2:] - u[:-2])
    if a == 0.0:
        u_new = rhs / m_f
    else:
        rhs[1:-1] -= a * (u_prev[2:] - u_prev[:-2])
        rhs[0] = rhs[-1] = 0.0
        u_new = _tridiagonal_factors(n, c, dx, p_fwd.rho, p_fwd.M, a).solve(rhs)
    u_new[0] = u_new[-1] = 0.0
    t_new = state.t + dt
    if not np.all(np.isfinite(u_new)):
        raise BlowUpError(t_new)
    return FieldState(t_new, state.x, u_new, u, None, dt, state.frame, c, state.interior)


def step_lab(state, p, pulse_value, dt, p_back=None, p_fwd=None):
    """One leapfrog step for the fixed inclusion.

    ``p`` holds the parameters at the current time; ``p_back`` and ``p_fwd``
    (half a step earlier and later) set the masses of the momentum
    differences and default to ``p``.
    """
    if p.v != 0:
        raise AdmissibilityError("lab-frame stepping is for a fixed inclusion; use step_comoving")
    return _advance(state, p, pulse_value, dt, p_back, p_fwd, moving=False)


def step_comoving(state, p, pulse_value, dt, p_back=None, p_fwd=None):
    """One step of the co-moving equation; identical to :func:`step_lab` when ``v == 0``."""
    return _advance(state, p, pulse_value, dt, p_back, p_fwd, moving=True)


def sponge_damp(state, grid, dt):
    """Damp the latest increment in the sponge: ``u <- u_prev + exp(-sigma dt) (u - u_prev)``."""
    if grid.sponge_strength == 0 or grid.sponge_width == 0:
        return state
    decay = np.exp(-grid.sigma * dt)
    u = state.u_prev + decay * (state.u - state.u_prev)
    return FieldState(state.t, state.x, u, state.u_prev, None, state.dt, state.frame, state.center, state.interior)


# ---------------------------------------------------------------------------
# derived quantities at the inclusion
# ---------------------------------------------------------------------------


def one_sided_slopes(u, center, dx):
    """Second-order one-sided slopes ``(u'(0-), u'(0+))`` at the inclusion node."""
    right = (-3.0 * u[center] + 4.0 * u[center + 1] - u[center + 2]) / (2.0 * dx)
    left = (3.0 * u[center] - 4.0 * u[center - 1] + u[center - 2]) / (2.0 * dx)
    return left, right


def slope_jump_squared(u, center, dx):
    left, right = one_sided_slopes(u, center, dx)
    return right**2 - left**2


def interaction_force(u_prev, u, u_next, p, pulse_value, dt, center):
    """``P`` recovered from the inclusion equation ``M U'' + K U = -P + p``."""
    acc = (u_next[center] - 2.0 * u[center] + u_prev[center]) / dt**2
    return pulse_value - p.K * u[center] - p.M * acc


def string_force(u, p, dx, center, moving=False):
    """``P = -(T - rho v^2) [u']`` from the slope jump on the string side."""
    left, right = one_sided_slopes(u, center, dx)
    tension = p.T - p.rho * p.v**2 if moving else p.T
    return -tension * (right - left)


# ---------------------------------------------------------------------------
# scenario runner
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    schedule: object
    grid: Grid
    dt: float
    frame: str
    pulse: object
    t_signal: np.ndarray
    U_signal: np.ndarray
    samples: dict
    snapshots: list = field(default_factory=list)
    trace: InvariantTrace = None
    measure_start: float = 0.0
    notes: dict = field(default_factory=dict)


def stable_dt(schedule, grid, moving, n_theta=201, cfl=CFL):
    """Largest step allowed by the CFL bound over the whole schedule."""
    worst = 0.0
    for theta in np.linspace(0.0, schedule.theta_max, n_theta):
        p = schedule.at_theta(theta)
        worst = max(worst, math.sqrt(p.T / p.rho) + (abs(p.v) if moving else 0.0))
    return cfl * grid.dx / worst


def run_scenario(
    schedule,
    grid,
    pulse=None,
    horizon=None,
    record_every=None,
    *,
    frame=None,
    initial=None,
    dt=None,
    snapshot_every=None,
    measure_start=None,
    measure=True,
):
    """Integrate from rest (or from the analytic mode if ``initial`` is given).

    The pulse acts on the inclusion through the external force.  Every
    ``record_every`` time units the energies are sampled; the inclusion
    displacement is kept at every step for envelope analysis.  Energies are
    sampled from ``measure_start`` (default: pulse end plus five periods).

    For a moving inclusion the lab energy obeys ``dE/dt = -F v`` with ``F``
    the kink force.  ``work_correction`` is ``-int F v dt`` restarted at every
    zero crossing of the inclusion, so ``E - work_correction`` is the lab
    quasi-energy of the current oscillation referenced where ``cos 2 psi =
    -1``.  The running integral from the first crossing is kept in
    ``samples['work_total']``; ``E - work_total`` is just the energy at that
    crossing and is conserved whatever the parameters do.  Measurement of a
    moving run starts at the first zero crossing after ``measure_start``.
    """
    from . import analysis

    moving = schedule.has_motion if frame is None else frame == "comoving"
    frame = "comoving" if moving else "lab"
    horizon = schedule.t_max if horizon is None else horizon
    if horizon * schedule.epsilon > schedule.theta_max * (1 + 1e-12):
        raise ValueError("horizon beyond the schedule's theta range")
    check_path(schedule, horizon * schedule.epsilon)
    if dt is None:
        dt = stable_dt(schedule, grid, moving)
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    rec_stride = max(1, int(round(record_every / dt))) if record_every else max(1, n_steps // 200)
    snap_stride = max(1, int(round(snapshot_every / dt))) if snapshot_every else None
    step = step_comoving if moving else step_lab

    mode0 = solve_frequency(schedule.at_theta(0.0))
    t0 = pulse.duration if pulse is not None else 0.0
    if measure_start is None:
        measure_start = 0.0 if initial is not None else t0 + 5 * mode0.period

    if initial is None:
        state = zero_state(grid, dt, frame)
    else:
        amp = initial if isinstance(initial, ComplexAmplitude) else ComplexAmplitude(float(initial))
        state = mode_state(grid, mode0, amp, dt, 0.0, frame)

    c = grid.center
    dx = grid.dx
    eps = schedule.epsilon
    evaluate = lambda t: schedule.at_theta(min(max(eps * t, 0.0), schedule.theta_max))  # noqa: E731
    force = (lambda t: float(pulse(t))) if pulse is not None else (lambda t: 0.0)

    t_sig = np.empty(n_steps + 1)
    u_sig = np.empty(n_steps + 1)
    t_sig[0], u_sig[0] = 0.0, state.U
    samples = {name: [] for name in ("t", "E_c", "E_d", "E", "work_correction", "quasi_E", "E2", "v", "M", "localized", "work_total")}
    snapshots = []
    work = work_total = 0.0
    work_on = False
    fv_prev = None
    max_drift = 0.0
    prev = state
    p_now = evaluate(0.0)
    failure = None
    n_done = 0
    for n in range(n_steps):
        t = prev.t
        p_back = evaluate(t - 0.5 * dt)
        p_fwd = evaluate(t + 0.5 * dt)
        if moving:
            max_drift = max(max_drift, abs(p_fwd.rho * p_fwd.v - p_back.rho * p_back.v) / dt)
        try:
            new = step(prev, p_now, force(t), dt, p_back, p_fwd)
            p_new = evaluate(new.t)
        except (BlowUpError, ValueError) as exc:
            failure = exc
            break
        new = sponge_damp(new, grid, dt)
        started = work_on or not moving
        if moving and t >= measure_start - 0.5 * dt:
            fv = -analysis.configurational_force_from_field(prev.u, p_now, dx, c) * p_now.v
            if work_on:
                w = 0.5 * dt * (fv + fv_prev)
                work += w
                work_total += w
            fv_prev = fv
        if n % rec_stride == 0 and n > 0 and measure and started and t >= measure_start - 0.5 * dt:
            mid = FieldState(t, prev.x, prev.u, prev.u_prev, (new.u - prev.u_prev) / (2 * dt), dt, frame, c, grid.interior)
            if moving:
                co = analysis.energy_quadrature(mid, p_now, "comoving", "comoving")
                lab = analysis.energy_quadrature(mid, p_now, "comoving", "d1", work_correction=work)
                samples["E_c"].append(lab.e_cont)
                samples["E_d"].append(lab.e_disc)
                samples["E"].append(lab.total)
                samples["work_correction"].append(work)
                samples["quasi_E"].append(co.quasi_energy)
                samples["E2"].append(lab.quasi_energy + 0.5 * p_now.M * p_now.v**2)
                samples["localized"].append(co.localized)
                samples["work_total"].append(work_total)
            else:
                e = analysis.energy_quadrature(mid, p_now, "lab", "d")
                samples["E_c"].append(e.e_cont)
                samples["E_d"].append(e.e_disc)
                samples["E"].append(e.total)
                samples["work_correction"].append(0.0)
                samples["quasi_E"].append(e.total)
                samples["E2"].append(e.total)
                samples["localized"].append(e.localized)
            samples["t"].append(t)
            samples["v"].append(p_now.v)
            samples["M"].append(p_now.M)
        if moving and t >= measure_start - 0.5 * dt and prev.U * new.U <= 0 and prev.U != new.U:
            # zero crossing of the inclusion: cos 2 psi = -1, restart the cycle integral
            if not work_on:
                work_on = True
                measure_start = new.t
            work = 0.0
        if snap_stride and n % snap_stride == 0:
            snapshots.append(prev.copy())
        t_sig[n + 1], u_sig[n + 1] = new.t, new.U
        prev, p_now = new, p_new
        n_done = n + 1

    samples = {k: np.asarray(v, dtype=float) for k, v in samples.items()}
    result = RunResult(
        schedule, grid, dt, frame, pulse, t_sig[: n_done + 1], u_sig[: n_done + 1], samples, snapshots,
        measure_start=measure_start,
        notes={"steps": n_done, "final_state": prev, "drift_term_max": max_drift, "complete": failure is None},
    )
    if moving:
        logger.info("(rho v)_tau drift term peaks at %.3e", max_drift)
    if measure:
        result.trace = build_trace(result)
    if failure is not None:
        raise SimulationFailure(str(failure), prev.t, result) from failure
    return result


def write_snapshot(path, state):
    """Write ``x u`` rows at 17 significant digits under a ``# t=`` header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# t={state.t:.17g} frame={state.frame}\n")
        for x, u in zip(state.x, state.u):
            fh.write(f"{x:.17g} {u:.17g}\n")


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`: returns ``(t, x, u)``."""
    with open(path, encoding="utf-8") as fh:
        head = fh.readline()
    if not head.startswith("# t="):
        raise ValueError(f"{path}: missing '# t=' header")
    t = float(head[4:].split()[0])
    data = np.loadtxt(path, comments="#", ndmin=2)
    return t, data[:, 0], data[:, 1]


def build_trace(result):
    """Combine energy samples with the measured envelope into an :class:`InvariantTrace`."""
    from . import analysis

    s = result.samples
    empty = InvariantTrace({name: np.zeros(0) for name in TRACE_COLUMNS})
    if len(s["t"]) == 0:
        return empty
    keep = result.t_signal >= result.measure_start
    try:
        env = analysis.envelope(result.t_signal[keep], result.U_signal[keep])
    except analysis.InsufficientDataError:
        return empty
    te = np.array([e.t for e in env])
    amp = np.array([e.amplitude for e in env])
    freq = np.array([e.frequency for e in env])
    inside = (s["t"] >= te[0]) & (s["t"] <= te[-1])
    t = s["t"][inside]
    amplitude = np.interp(t, te, amp)
    frequency = np.interp(t, te, freq)
    phi = np.interp(t, result.t_signal, analysis.running_phase(result.t_signal, result.U_signal))
    E = s["E"][inside]
    quasi = s["quasi_E"][inside]
    work = s["work_correction"][inside]
    cols = {
        "t": t,
        "amplitude": amplitude,
        "frequency": frequency,
        "E_c": s["E_c"][inside],
        "E_d": s["E_d"][inside],
        "E": E,
        "work_correction": work,
        "quasi_E": quasi,
        "J": E / frequency,
        "J_quasi": quasi / frequency,
        "J1": (E - work) / frequency,
        "J2": s["E2"][inside] / frequency,
        "phi": phi,
    }
    return InvariantTrace(cols)

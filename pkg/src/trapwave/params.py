"""Physical parameters and their slow time schedules.

A :class:`ParamSet` is a plain snapshot of the six physical parameters
(spring stiffness ``K``, inclusion mass ``M``, tension ``T``, density ``rho``,
foundation stiffness ``k`` and inclusion speed ``v``).  A
:class:`ParameterSchedule` maps slow time ``theta = epsilon * t`` to a
``ParamSet`` through one curve per parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.interpolate import CubicSpline

PARAM_NAMES = ("K", "M", "T", "rho", "k", "v")


class AdmissibilityError(ValueError):
    """A parameter set violates one of the physical restrictions."""

    def __init__(self, message, theta=None):
        super().__init__(message if theta is None else f"{message} (theta={theta:.10g})")
        self.theta = theta


class DegenerateMediumError(ValueError):
    pass


class LocalizationError(ValueError):
    """No trapped mode exists for the given parameters."""

    def __init__(self, message, theta=None):
        super().__init__(message if theta is None else f"{message} (theta={theta:.10g})")
        self.theta = theta


@dataclass(frozen=True)
class ParamSet:
    """Instantaneous values of the physical parameters (SI units)."""

    K: float
    M: float
    T: float
    rho: float
    k: float
    v: float = 0.0

    def check(self):
        """Raise :class:`AdmissibilityError` if a restriction is violated."""
        if not self.T > 0:
            raise AdmissibilityError(f"restriction T > 0 violated: T={self.T!r}")
        if not self.k > 0:
            raise AdmissibilityError(f"restriction k > 0 violated: k={self.k!r}")
        if not self.M >= 0:
            raise AdmissibilityError(f"restriction M >= 0 violated: M={self.M!r}")
        if not self.rho >= 0:
            raise AdmissibilityError(f"restriction rho >= 0 violated: rho={self.rho!r}")
        if self.rho > 0 and not abs(self.v) < math.sqrt(self.T / self.rho):
            raise AdmissibilityError(
                f"sub-critical restriction |v| < c violated: |v|={abs(self.v)!r}, "
                f"c={math.sqrt(self.T / self.rho)!r}"
            )
        return self

    @property
    def is_admissible(self):
        try:
            self.check()
        except AdmissibilityError:
            return False
        return True

    @property
    def radicand_scale(self):
        """``k T - k rho v^2``, the radicand of the frequency equation at zero frequency."""
        return self.k * self.T - self.k * self.rho * self.v**2

    def radicand(self, omega):
        """``k T - k rho v^2 - T rho omega^2``."""
        return self.radicand_scale - self.T * self.rho * omega**2

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes):
        return replace(self, **changes)


def sound_speed(p):
    """Speed of transverse waves ``sqrt(T / rho)``."""
    if p.rho <= 0:
        raise DegenerateMediumError("sound speed undefined for rho = 0")
    return math.sqrt(p.T / p.rho)


def frequency_residual(p, omega):
    """``g(omega) = 2 sqrt(kT - k rho v^2 - T rho omega^2) - (M omega^2 - K)``.

    The trapped-mode frequency is the root of ``g`` on the bracket returned by
    :func:`check_localization`.  ``g`` is strictly decreasing there.
    """
    r = p.radicand(omega)
    return 2.0 * np.sqrt(np.maximum(r, 0.0)) - (p.M * omega**2 - p.K)


def cutoff_frequency(p):
    """Frequency where the radicand vanishes (``inf`` for a massless string)."""
    if p.rho == 0:
        return math.inf
    return math.sqrt(max(p.radicand_scale, 0.0) / (p.T * p.rho))


def check_localization(p):
    """Return a bracket ``(lo, hi)`` holding exactly one root of the frequency equation.

    The lower end is where ``M omega^2 - K`` vanishes (or 0), the upper end is
    the cut-off frequency where the radicand vanishes.  Raises
    :class:`LocalizationError` when the residual does not change sign.
    """
    p.check()
    if p.M == 0 and p.K >= 0:
        raise LocalizationError("no trapped mode: M = 0 with K >= 0 leaves no positive root")
    if p.radicand_scale <= 0:
        raise LocalizationError("no trapped mode: kT - k rho v^2 <= 0 (v at the sound speed)")

    lo = math.sqrt(p.K / p.M) if (p.K > 0 and p.M > 0) else 0.0
    hi = cutoff_frequency(p)
    if math.isinf(hi):
        # massless string: g -> -inf as M omega^2 grows, pick a point past the root
        hi = math.sqrt((max(p.K, 0.0) + 4.0 * math.sqrt(p.radicand_scale)) / p.M)
    if not hi - lo > 8 * np.finfo(float).eps * hi:
        raise LocalizationError(
            f"no trapped mode: spring frequency sqrt(K/M)={lo:.6g} is not below the cut-off {hi:.6g}"
        )
    g_lo = frequency_residual(p, lo)
    g_hi = frequency_residual(p, hi)
    if not (g_lo > 0 and g_hi < 0):
        raise LocalizationError(
            f"no trapped mode: residual does not change sign on [{lo:.6g}, {hi:.6g}] "
            f"(g_lo={g_lo:.3g}, g_hi={g_hi:.3g})"
        )
    return lo, hi


# ---------------------------------------------------------------------------
# curves of slow time
# ---------------------------------------------------------------------------


class Curve:
    kind = "abstract"

    def __call__(self, theta):
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Curve):
    value: float
    kind = "constant"

    def __call__(self, theta):
        return self.value + 0.0 * np.asarray(theta, dtype=float)

    def to_config(self):
        return {"kind": self.kind, "value": repr(float(self.value))}


@dataclass(frozen=True)
class LinearRamp(Curve):
    """Linear transition from ``start`` to ``end`` over ``[theta0, theta1]``, constant outside."""

    start: float
    end: float
    theta0: float = 0.0
    theta1: float = 1.0
    kind = "linear"

    def __post_init__(self):
        if not self.theta1 > self.theta0:
            raise ValueError("ramp needs theta1 > theta0")

    def _s(self, theta):
        return np.clip((np.asarray(theta, dtype=float) - self.theta0) / (self.theta1 - self.theta0), 0.0, 1.0)

    def __call__(self, theta):
        return self.start + (self.end - self.start) * self._s(theta)

    def to_config(self):
        return {
            "kind": self.kind,
            "start": repr(float(self.start)),
            "end": repr(float(self.end)),
            "theta0": repr(float(self.theta0)),
            "theta1": repr(float(self.theta1)),
        }


@dataclass(frozen=True)
class SmoothstepRamp(LinearRamp):
    """Cubic ``3s^2 - 2s^3`` transition; continuously differentiable at both ends."""

    kind = "smoothstep"

    def __call__(self, theta):
        s = self._s(theta)
        return self.start + (self.end - self.start) * s * s * (3.0 - 2.0 * s)


@dataclass(frozen=True, eq=False)
class Tabulated(Curve):
    """Cubic-spline interpolation of tabulated ``(theta, value)`` rows.

    Outside the table the end values are held.  The natural spline end
    condition is replaced by zero end slopes so the held extension stays C1.
    """

    thetas: tuple
    values: tuple
    kind = "tabulated"
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float)
        va = np.asarray(self.values, dtype=float)
        if th.ndim != 1 or th.shape != va.shape or th.size < 2:
            raise ValueError("tabulated curve needs matching 1-D tables with >= 2 rows")
        if np.any(np.diff(th) <= 0):
            raise ValueError("tabulated thetas must be strictly increasing")
        object.__setattr__(self, "thetas", tuple(th.tolist()))
        object.__setattr__(self, "values", tuple(va.tolist()))
        object.__setattr__(self, "_spline", CubicSpline(th, va, bc_type="clamped"))

    def __call__(self, theta):
        th = np.clip(np.asarray(theta, dtype=float), self.thetas[0], self.thetas[-1])
        return self._spline(th)

    def __eq__(self, other):
        return isinstance(other, Tabulated) and self.thetas == other.thetas and self.values == other.values

    def __hash__(self):
        return hash((self.thetas, self.values))

    def to_config(self):
        rows = "; ".join(f"{a!r} {b!r}" for a, b in zip(self.thetas, self.values))
        return {"kind": self.kind, "table": rows}


# ---------------------------------------------------------------------------
# schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ParameterSchedule:
    """Slowly varying parameters as functions of ``theta = epsilon * t``.

    ``curves`` maps every name in :data:`PARAM_NAMES` to a :class:`Curve`
    (``v`` may be omitted and defaults to zero).  Admissibility is checked on
    ``n_check`` points of ``[0, theta_max]`` at construction unless
    ``validate=False``; every :meth:`evaluate` call checks again.
    """

    epsilon: float
    curves: dict
    theta_max: float = 1.0
    validate: bool = True
    n_check: int = 10_000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        curves = dict(self.curves)
        curves.setdefault("v", Constant(0.0))
        unknown = set(curves) - set(PARAM_NAMES)
        missing = set(PARAM_NAMES) - set(curves)
        if unknown or missing:
            raise ValueError(f"schedule curves: unknown {sorted(unknown)}, missing {sorted(missing)}")
        curves = {n: c if isinstance(c, Curve) else Constant(float(c)) for n, c in curves.items()}
        object.__setattr__(self, "curves", curves)
        if self.validate:
            thetas = np.linspace(0.0, self.theta_max, self.n_check)
            table = {n: np.broadcast_to(curves[n](thetas), thetas.shape) for n in PARAM_NAMES}
            bad = _first_violation(table)
            if bad is not None:
                self.at_theta(float(thetas[bad]))
                raise AdmissibilityError("parameter restriction violated", theta=float(thetas[bad]))

    @classmethod
    def constant(cls, p, epsilon=1.0, theta_max=1.0):
        return cls(epsilon, {n: Constant(getattr(p, n)) for n in PARAM_NAMES}, theta_max=theta_max)

    @property
    def t_max(self):
        return self.theta_max / self.epsilon

    @property
    def has_motion(self):
        c = self.curves["v"]
        return not (isinstance(c, Constant) and c.value == 0.0)

    def at_theta(self, theta):
        values = {n: float(self.curves[n](theta)) for n in PARAM_NAMES}
        p = ParamSet(**values)
        try:
            p.check()
        except AdmissibilityError as exc:
            raise AdmissibilityError(str(exc), theta=float(theta)) from None
        return p

    def evaluate(self, t):
        """Parameters at time ``t`` (``theta = epsilon * t``)."""
        if t < 0:
            raise ValueError(f"t must be non-negative, got {t!r}")
        theta = self.epsilon * t
        if theta > self.theta_max * (1 + 1e-12):
            raise ValueError(f"t={t!r} beyond schedule range (theta={theta!r} > {self.theta_max!r})")
        return self.at_theta(theta)

    def with_epsilon(self, epsilon):
        """Same theta-path traversed at a different rate."""
        return ParameterSchedule(epsilon, self.curves, self.theta_max, validate=False)


def _first_violation(table):
    K, M, T, rho, k, v = (np.asarray(table[n], dtype=float) for n in PARAM_NAMES)
    with np.errstate(divide="ignore", invalid="ignore"):
        supersonic = (rho > 0) & ~(np.abs(v) < np.sqrt(T / np.where(rho > 0, rho, 1.0)))
    bad = ~(T > 0) | ~(k > 0) | ~(M >= 0) | ~(rho >= 0) | supersonic
    idx = np.flatnonzero(bad)
    return int(idx[0]) if idx.size else None


def evaluate(schedule, t):
    return schedule.evaluate(t)

"""Plain-text scenario files.

A scenario is an INI file with one section per physical parameter plus
``[scenario]``, ``[grid]`` and an optional ``[pulse]``::

    [scenario]
    mode = fixed            ; fixed | moving
    epsilon = 0.01          ; slow-time scale, theta = epsilon t
    theta_max = 3.0
    horizon = 300.0         ; [s], default theta_max / epsilon
    record_every = 0.86     ; [s], energy sampling cadence
    initial_amplitude = 1.0 ; start from the analytic mode instead of a pulse
    initial_phase = 0.0     ; [rad]
    outputs = trace         ; any of: trace, snapshots
    snapshot_every = 50.0   ; [s]
    theta_samples = 101     ; rows of the mode table

    [grid]
    points_per_decay = 100
    core_decays = 40
    sponge_decays = 10

    [pulse]
    shape = half-sine       ; half-sine | gaussian | raised-cosine
    amplitude = 1.0         ; [N]
    carrier = omega0        ; [rad/s], or omega0 for the mode frequency at theta=0
    halves = 1              ; half-sine only; otherwise give duration [s]

    [k]
    kind = smoothstep       ; constant | linear | smoothstep | tabulated
    start = 1.0
    end = 2.0
    theta0 = 1.0
    theta1 = 2.0

``epsilon = 0`` is allowed when every curve is constant; it needs a
``horizon`` and is stored as the equivalent schedule with
``epsilon = 1 / horizon`` and ``theta_max = 1``.

Units: K [N/m], M [kg], T [N], rho [kg/m], k [N/m^2], v [m/s].  A
tabulated curve gives ``table = theta value; theta value; ...``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from .modes import ComplexAmplitude, solve_frequency
from .params import PARAM_NAMES, Constant, LinearRamp, ParameterSchedule, SmoothstepRamp, Tabulated
from .pulse import PulseSpec


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


MODES = ("fixed", "moving")
OUTPUTS = ("trace", "snapshots")
GRID_DEFAULTS = {"points_per_decay": 100, "core_decays": 40, "sponge_decays": 10}


@dataclass(frozen=True)
class Scenario:
    schedule: ParameterSchedule
    mode: str = "fixed"
    grid: dict = field(default_factory=lambda: dict(GRID_DEFAULTS))
    pulse: PulseSpec = None
    horizon: float = None
    record_every: float = None
    initial: ComplexAmplitude = None
    outputs: tuple = ("trace",)
    snapshot_every: float = None
    theta_samples: int = 101

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"[scenario] mode: expected one of {MODES}, got {self.mode!r}")
        if self.mode == "fixed" and self.schedule.has_motion:
            raise ConfigError("[scenario] mode: fixed inclusion but the v schedule is not zero")
        if self.mode == "moving" and "v" not in self.schedule.curves:
            raise ConfigError("[scenario] mode: moving inclusion needs a v schedule")
        if self.horizon is not None and self.horizon * self.schedule.epsilon > self.schedule.theta_max * (1 + 1e-12):
            raise ConfigError("[scenario] horizon: beyond theta_max / epsilon")
        if self.pulse is None and self.initial is None:
            raise ConfigError("scenario needs a [pulse] section or [scenario] initial_amplitude")
        for o in self.outputs:
            if o not in OUTPUTS:
                raise ConfigError(f"[scenario] outputs: unknown output {o!r}")

    @property
    def moving(self):
        return self.mode == "moving"

    @property
    def t_end(self):
        return self.schedule.t_max if self.horizon is None else self.horizon


def _curve(section, items, line_of):
    kind = items.get("kind", "constant")
    try:
        if kind == "constant":
            return Constant(float(items["value"]))
        if kind in ("linear", "smoothstep"):
            cls = LinearRamp if kind == "linear" else SmoothstepRamp
            return cls(
                float(items["start"]), float(items["end"]),
                float(items.get("theta0", 0.0)), float(items.get("theta1", 1.0)),
            )
        if kind == "tabulated":
            rows = [r.split() for r in items["table"].split(";") if r.strip()]
            if any(len(r) != 2 for r in rows):
                raise ConfigError(f"[{section}] table: rows must be 'theta value'", line_of(section, "table"))
            return Tabulated(tuple(float(r[0]) for r in rows), tuple(float(r[1]) for r in rows))
    except KeyError as exc:
        raise ConfigError(f"[{section}] missing key {exc.args[0]!r} for kind {kind!r}", line_of(section, "kind")) from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}", line_of(section, None)) from None
    raise ConfigError(f"[{section}] kind: unknown curve kind {kind!r}", line_of(section, "kind"))


def _line_finder(text):
    lines = text.splitlines()

    def line_of(section, key):
        current = None
        for i, raw in enumerate(lines, 1):
            s = raw.strip()
            m = re.match(r"\[(.+)\]", s)
            if m:
                current = m.group(1).strip()
                if key is None and current == section:
                    return i
                continue
            if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
                return i
        return None

    return line_of


def parse_scenario(text):
    """Parse scenario text into a :class:`Scenario`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}", getattr(exc, "lineno", None)) from None
    line_of = _line_finder(text)

    def num(section, key, conv=float, default=None):
        if not cp.has_option(section, key):
            if default is None and conv is not None and key in REQUIRED.get(section, ()):
                raise ConfigError(f"[{section}] missing key {key!r}", line_of(section, None))
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: cannot read {raw!r}", line_of(section, key)) from None

    if not cp.has_section("scenario"):
        raise ConfigError("missing [scenario] section")
    for name in PARAM_NAMES:
        if name != "v" and not cp.has_section(name):
            raise ConfigError(f"missing [{name}] section")
    curves = {name: _curve(name, dict(cp.items(name)), line_of) for name in PARAM_NAMES if cp.has_section(name)}
    eps = num("scenario", "epsilon")
    theta_max = num("scenario", "theta_max", float, 1.0)
    if eps == 0:
        horizon = num("scenario", "horizon")
        if horizon is None or not horizon > 0:
            raise ConfigError("[scenario] epsilon = 0 needs a positive horizon", line_of("scenario", "epsilon"))
        if not all(isinstance(c, Constant) for c in curves.values()):
            raise ConfigError("[scenario] epsilon = 0 needs constant curves", line_of("scenario", "epsilon"))
        eps, theta_max = 1.0 / horizon, 1.0
    try:
        schedule = ParameterSchedule(eps, curves, theta_max=theta_max)
    except ValueError as exc:
        if type(exc) is ValueError:
            raise ConfigError(f"[scenario] {exc}", line_of("scenario", "epsilon")) from None
        raise

    pulse = None
    if cp.has_section("pulse"):
        s = dict(cp.items("pulse"))
        shape = s.get("shape", "half-sine")
        carrier_raw = s.get("carrier", "omega0")
        if carrier_raw.strip() == "omega0":
            carrier = solve_frequency(schedule.at_theta(0.0)).omega0
        else:
            carrier = num("pulse", "carrier")
        amplitude = num("pulse", "amplitude", float, 1.0)
        try:
            if "duration" in s:
                pulse = PulseSpec(shape, amplitude, carrier, num("pulse", "duration"))
            elif shape == "half-sine":
                pulse = PulseSpec.half_sine(carrier, amplitude, num("pulse", "halves", int, 1))
            else:
                raise ConfigError(f"[pulse] duration: required for shape {shape!r}", line_of("pulse", None))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"[pulse] {exc}", line_of("pulse", "shape")) from None

    grid = dict(GRID_DEFAULTS)
    if cp.has_section("grid"):
        for key in cp.options("grid"):
            if key not in GRID_DEFAULTS:
                raise ConfigError(f"[grid] unknown key {key!r}", line_of("grid", key))
            grid[key] = num("grid", key)

    initial = None
    if cp.has_option("scenario", "initial_amplitude"):
        initial = ComplexAmplitude(num("scenario", "initial_amplitude"), num("scenario", "initial_phase", float, 0.0))
    outputs = tuple(o.strip() for o in cp.get("scenario", "outputs", fallback="trace").split(",") if o.strip())
    return Scenario(
        schedule=schedule,
        mode=cp.get("scenario", "mode", fallback="fixed").strip(),
        grid=grid,
        pulse=pulse,
        horizon=num("scenario", "horizon"),
        record_every=num("scenario", "record_every"),
        initial=initial,
        outputs=outputs,
        snapshot_every=num("scenario", "snapshot_every"),
        theta_samples=num("scenario", "theta_samples", int, 101),
    )


REQUIRED = {"scenario": ("epsilon",)}


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_scenario(text)


def _fmt(x):
    return repr(float(x))


def serialize_scenario(sc):
    """Inverse of :func:`parse_scenario` (numbers written with full precision)."""
    out = ["[scenario]", f"mode = {sc.mode}", f"epsilon = {_fmt(sc.schedule.epsilon)}",
           f"theta_max = {_fmt(sc.schedule.theta_max)}"]
    if sc.horizon is not None:
        out.append(f"horizon = {_fmt(sc.horizon)}")
    if sc.record_every is not None:
        out.append(f"record_every = {_fmt(sc.record_every)}")
    if sc.initial is not None:
        out.append(f"initial_amplitude = {_fmt(sc.initial.modulus)}")
        out.append(f"initial_phase = {_fmt(sc.initial.phase)}")
    out.append(f"outputs = {', '.join(sc.outputs)}")
    if sc.snapshot_every is not None:
        out.append(f"snapshot_every = {_fmt(sc.snapshot_every)}")
    out.append(f"theta_samples = {int(sc.theta_samples)}")
    out += ["", "[grid]"] + [f"{k} = {_fmt(v)}" for k, v in sc.grid.items()]
    if sc.pulse is not None:
        p = sc.pulse
        out += ["", "[pulse]", f"shape = {p.shape}", f"amplitude = {_fmt(p.amplitude)}",
                f"carrier = {_fmt(p.carrier)}", f"duration = {_fmt(p.duration)}"]
    for name in PARAM_NAMES:
        out += ["", f"[{name}]"] + [f"{k} = {v}" for k, v in sc.schedule.curves[name].to_config().items()]
    return "\n".join(out) + "\n"


def scenarios_equal(a, b):
    """Structural equality (schedules compare by their curves)."""
    return (
        a.mode == b.mode and a.grid == b.grid and a.pulse == b.pulse and a.horizon == b.horizon
        and a.record_every == b.record_every and a.initial == b.initial and a.outputs == b.outputs
        and a.snapshot_every == b.snapshot_every and a.theta_samples == b.theta_samples
        and a.schedule.epsilon == b.schedule.epsilon and a.schedule.theta_max == b.schedule.theta_max
        and a.schedule.curves == b.schedule.curves
    )


def build_grid(sc):
    from .simulate import Grid

    g = sc.grid
    return Grid.for_schedule(
        sc.schedule, int(g["points_per_decay"]), g["core_decays"], g["sponge_decays"]
    )



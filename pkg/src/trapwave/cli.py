"""Command-line driver: ``trapwave {modes,simulate,invariants,verify}``.

Exit codes: 0 success, 1 usage or config error, 2 admissibility or
localization failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, build_grid, load_scenario
from .invariants import TRACE_COLUMNS, closed_form_trace
from .modes import ComplexAmplitude, SolverError, initial_amplitude, solve_frequency
from .params import AdmissibilityError, Constant, DegenerateMediumError, LocalizationError
from .simulate import BlowUpError, SimulationFailure, StepSizeError, run_scenario, write_snapshot

logger = logging.getLogger("trapwave")

EXIT_OK, EXIT_USAGE, EXIT_ADMISSIBILITY, EXIT_NUMERICAL = 0, 1, 2, 3
MODE_COLUMNS = ("theta", "omega0", "S", "B", "c0")
PLOT_COLUMNS = ("amplitude", "J", "J_quasi", "J1", "J2", "quasi_E")


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return f"{x:.17g}"


def write_table(path, columns, rows, comments=()):
    with open(path, "w", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write("# " + " ".join(columns) + "\n")
        for row in rows:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def read_table(path):
    """Read a table written by :func:`write_table`: returns ``(columns, data, comments)``."""
    comments = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            comments.append(line[1:].strip())
    columns = tuple(comments.pop().split())
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.size == 0:
        data = np.zeros((0, len(columns)))
    return columns, data, comments


def write_trace(path, trace, comments=()):
    rows = np.column_stack([trace[c] for c in TRACE_COLUMNS]) if len(trace) else []
    write_table(path, TRACE_COLUMNS, rows, comments)


def write_plotdata(out, stem, x_name, x, series):
    for name, y in series.items():
        write_table(os.path.join(out, f"{stem}_{name}.dat"), (x_name, name), np.column_stack([x, y]))


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------


def _mode_row(args):
    schedule, theta = args
    try:
        m = solve_frequency(schedule.at_theta(theta))
    except LocalizationError as exc:
        return ("localization", theta, str(exc))
    except AdmissibilityError as exc:
        return ("admissibility", theta, str(exc))
    return (theta, m.omega0, m.S, m.B, m.c0)


def mode_table(scenario, jobs=1):
    sch = scenario.schedule
    if all(isinstance(c, Constant) for c in sch.curves.values()):
        thetas = [0.0]
    else:
        thetas = [float(t) for t in np.linspace(0.0, sch.theta_max, scenario.theta_samples)]
    work = [(sch, t) for t in thetas]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_mode_row, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        rows = [_mode_row(w) for w in work]
    for row in rows:
        if isinstance(row[0], str):
            raise CommandError(f"{row[0]} failure at theta={row[1]:.17g}: {row[2]}", EXIT_ADMISSIBILITY)
    return np.array(rows, dtype=float)


def cmd_modes(args):
    for path in args.config:
        sc = load_scenario(path)
        table = mode_table(sc, args.jobs)
        for row in table:
            print(" ".join(_fmt(v) for v in row))
        if args.out:
            out = _outdir(args, path)
            write_table(os.path.join(out, "modes.txt"), MODE_COLUMNS, table)
            if args.plotdata:
                write_plotdata(out, "modes", "theta", table[:, 0],
                               {c: table[:, i] for i, c in enumerate(MODE_COLUMNS) if i})
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def simulate_scenario(sc, out, plotdata=False):
    """Run one scenario and write its outputs into ``out``; returns the run result."""
    os.makedirs(out, exist_ok=True)
    grid = build_grid(sc)
    snap_every = sc.snapshot_every if "snapshots" in sc.outputs else None
    comments = [f"frame={'comoving' if sc.moving else 'lab'} dx={_fmt(grid.dx)} epsilon={_fmt(sc.schedule.epsilon)}"]
    try:
        result = run_scenario(
            sc.schedule, grid, sc.pulse, sc.horizon, sc.record_every,
            frame="comoving" if sc.moving else "lab", initial=sc.initial, snapshot_every=snap_every,
        )
    except SimulationFailure as exc:
        partial = exc.partial
        _write_outputs(out, sc, partial, [f"INCOMPLETE: run stopped at {exc}"] + comments, plotdata)
        raise CommandError(f"simulation failed: {exc}; partial output in {out}", EXIT_NUMERICAL) from exc
    _write_outputs(out, sc, result, comments, plotdata)
    return result


def _write_outputs(out, sc, result, comments, plotdata):
    comments = comments + [f"dt={_fmt(result.dt)} steps={result.notes['steps']}"]
    if "trace" in sc.outputs:
        write_trace(os.path.join(out, "trace.txt"), result.trace, comments)
        if plotdata and len(result.trace):
            write_plotdata(out, "trace", "t", result.trace["t"], {c: result.trace[c] for c in PLOT_COLUMNS})
    if result.snapshots:
        snap_dir = os.path.join(out, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        for i, s in enumerate(result.snapshots):
            write_snapshot(os.path.join(snap_dir, f"snap_{i:05d}.txt"), s)
    if plotdata:
        write_table(os.path.join(out, "inclusion_U.dat"), ("t", "U"),
                    np.column_stack([result.t_signal, result.U_signal]))


def _simulate_job(job):
    path, out, plotdata = job
    try:
        simulate_scenario(load_scenario(path), out, plotdata)
    except CommandError as exc:
        return exc.code, str(exc)
    except OSError as exc:
        return EXIT_NUMERICAL, f"cannot write output for {path}: {exc.filename or out}: {exc.strerror}"
    except Exception as exc:  # reported back to the parent process
        return _classify(exc) or EXIT_NUMERICAL, f"{path}: {type(exc).__name__}: {exc}"
    return EXIT_OK, None


def cmd_simulate(args):
    if not args.out:
        raise CommandError("simulate needs --out <dir>", EXIT_USAGE)
    jobs = [(path, _outdir(args, path), args.plotdata) for path in args.config]
    for path, _, _ in jobs:
        load_scenario(path)  # parse everything before running anything
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_simulate_job, jobs))
    else:
        results = [_simulate_job(j) for j in jobs]
    code = EXIT_OK
    for rc, msg in results:
        if rc:
            print(f"error: {msg}", file=sys.stderr)
            code = max(code, rc)
    return code


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------


def invariant_trace(sc):
    """Closed-form trace on ``theta_samples`` times from zero to the horizon."""
    if sc.initial is not None:
        amp = sc.initial
    else:
        amp = initial_amplitude(solve_frequency(sc.schedule.at_theta(0.0)), sc.pulse)
    times = np.linspace(0.0, sc.t_end, sc.theta_samples)
    return closed_form_trace(sc.schedule, times, ComplexAmplitude(amp.modulus, amp.phase), moving=sc.moving)


def cmd_invariants(args):
    for path in args.config:
        tr = invariant_trace(load_scenario(path))
        if args.out:
            out = _outdir(args, path)
            write_trace(os.path.join(out, "invariants.txt"), tr, ["closed-form prediction"])
            if args.plotdata:
                write_plotdata(out, "invariants", "t", tr["t"], {c: tr[c] for c in PLOT_COLUMNS})
        else:
            print("# " + " ".join(TRACE_COLUMNS))
            for i in range(len(tr)):
                print(" ".join(_fmt(tr[c][i]) for c in TRACE_COLUMNS))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args):
    from .verify import run_suite

    results = run_suite(args.suite, jobs=args.jobs)
    graded = [c for c in results if not c.info]
    failed = [c for c in graded if not c.passed]
    print(f"{len(graded) - len(failed)}/{len(graded)} checks passed")
    return EXIT_OK if not failed else EXIT_NUMERICAL


# ---------------------------------------------------------------------------


def _outdir(args, path):
    if len(args.config) == 1:
        out = args.out
    else:
        out = os.path.join(args.out, os.path.splitext(os.path.basename(path))[0])
    os.makedirs(out, exist_ok=True)
    return out


def _classify(exc):
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, (AdmissibilityError, LocalizationError, DegenerateMediumError)):
        return EXIT_ADMISSIBILITY
    if isinstance(exc, (SolverError, SimulationFailure, BlowUpError, StepSizeError, ArithmeticError, OSError)):
        return EXIT_NUMERICAL
    return None


def build_parser():
    from .verify import SUITES

    parser = _Parser(prog="trapwave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_cmd(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", action="append", required=True, metavar="PATH",
                       help="scenario file (repeat for a batch)")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
        p.add_argument("--plotdata", action="store_true", help="also write two-column .dat files")
        p.set_defaults(func=func)

    scenario_cmd("modes", cmd_modes, "tabulate the trapped mode along the schedule")
    scenario_cmd("simulate", cmd_simulate, "run the finite-difference simulation")
    scenario_cmd("invariants", cmd_invariants, "closed-form amplitude and invariant predictions")
    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--jobs", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:
        code = _classify(exc)
        if code is None:
            raise
        theta = getattr(exc, "theta", None)
        where = f" (theta={theta:.17g})" if theta is not None else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return code

"""Command line entry point: run flows, batch-check inequalities, dump invariants.

Config files are JSON objects::

    {
      "curve": {"kind": "fourier", "base": 1.0, "cos_coeffs": [0.1]},
      "n": 256,
      "flow": {"t_end": 20.0},
      "monitor_every": 10,
      "normalize_sl2": false,
      "seed": 42,
      "output": "run.csv",
      "format": "csv"
    }

Every key is optional.  Command line flags override values from the file,
which override the built-in defaults.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
import json
import math
import sys
import time

import numpy as np

from . import affine, sl2
from . import flow as flow_mod
from .curve import ConvexityError, CurveSpec, from_spec, make_fourier, random_coefficients, validate

SCHEMA_NAME = "ceaflow-trajectory"
SCHEMA_VERSION = 1

BASE_COLUMNS = (
    "t",
    "dt",
    "area",
    "area_drift_rel",
    "affine_length",
    "energy",
    "energy_n2",
    "energy_n3",
    "santalo",
    "total_curv",
    "min_sigma",
    "max_sigma",
    "min_r",
    "minkowski_residual",
    "script_L",
    "script_M",
    "script_Q",
    "sup_ht",
)
NORMALIZE_COLUMNS = ("roundness", "norm_m", "norm_phi")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

# tolerances for the post-run sanity checks of `simulate`
AREA_DRIFT_TOL = 1e-5
SANTALO_SLACK = 1e-8
INEQUALITY_TOL = 1e-9
TOTALCUR_TOL = 1e-7


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"'{field_name}': {message}")
        self.field = field_name


def columns(normalize_sl2):
    return BASE_COLUMNS + (NORMALIZE_COLUMNS if normalize_sl2 else ())


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    curve: CurveSpec = field(default_factory=lambda: CurveSpec(kind="fourier", cos_coeffs=(0.1,)))
    n: int = 256
    flow: flow_mod.FlowParams = field(default_factory=flow_mod.FlowParams)
    monitor_every: int = 10
    normalize_sl2: bool = False
    seed: int = 42
    output_path: str = "trajectory.csv"
    format: str = "csv"

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a JSON object")
        known = {"curve", "n", "flow", "monitor_every", "normalize_sl2", "seed", "output", "format"}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown key")
        kw = {}
        if "curve" in data:
            kw["curve"] = _build("curve", CurveSpec, data["curve"])
        if "flow" in data:
            kw["flow"] = _build("flow", flow_mod.FlowParams, data["flow"])
        if "n" in data:
            kw["n"] = _int_field("n", data["n"])
        if "monitor_every" in data:
            kw["monitor_every"] = _int_field("monitor_every", data["monitor_every"])
        if "normalize_sl2" in data:
            if not isinstance(data["normalize_sl2"], bool):
                raise ConfigError("normalize_sl2", "must be true or false")
            kw["normalize_sl2"] = data["normalize_sl2"]
        if "seed" in data:
            kw["seed"] = _int_field("seed", data["seed"])
        if "output" in data:
            if not isinstance(data["output"], str) or not data["output"]:
                raise ConfigError("output", "must be a non-empty path string")
            kw["output_path"] = data["output"]
        if "format" in data:
            kw["format"] = data["format"]
        return cls(**kw).validated()

    def validated(self):
        if self.n < 16 or self.n % 2:
            raise ConfigError("n", f"must be an even integer >= 16, got {self.n}")
        if self.monitor_every < 1:
            raise ConfigError("monitor_every", f"must be >= 1, got {self.monitor_every}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must fit in an unsigned 64-bit integer")
        if self.format not in ("csv", "jsonl"):
            raise ConfigError("format", f"must be 'csv' or 'jsonl', got {self.format!r}")
        return self

    def initial_curve(self):
        spec = self.curve
        if spec.kind == "fourier" and spec.seed is None and not spec.cos_coeffs and not spec.sin_coeffs:
            spec = replace(spec, seed=self.seed)
        try:
            return from_spec(spec, self.n).require_convex()
        except ConvexityError as exc:
            raise ConfigError("curve", str(exc)) from None
        except ValueError as exc:
            raise ConfigError("curve", str(exc)) from None


def _int_field(name, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, f"must be an integer, got {value!r}")
    return value


def _build(prefix, cls, data):
    if not isinstance(data, dict):
        raise ConfigError(prefix, "expected a JSON object")
    names = {f.name for f in fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{prefix}.{key}", "unknown key")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(prefix, str(exc)) from None


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON in {path}: {exc}") from None
    return ExperimentConfig.from_dict(data)


def apply_overrides(config, args):
    """Command line flags win over the file."""
    kw = {}
    if getattr(args, "n", None) is not None:
        kw["n"] = args.n
    if getattr(args, "output", None) is not None:
        kw["output_path"] = args.output
    if getattr(args, "format", None) is not None:
        kw["format"] = args.format
    if getattr(args, "normalize_sl2", False):
        kw["normalize_sl2"] = True
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    if getattr(args, "monitor_every", None) is not None:
        kw["monitor_every"] = args.monitor_every
    if getattr(args, "t_end", None) is not None:
        try:
            kw["flow"] = replace(config.flow, t_end=args.t_end)
        except ValueError as exc:
            raise ConfigError("--t-end", str(exc)) from None
    return replace(config, **kw).validated()


# --- output ------------------------------------------------------------------


def fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def record_row(rec, norm=None):
    inv = rec.invariants
    row = {
        "t": rec.t,
        "dt": rec.dt,
        "area": inv.area,
        "area_drift_rel": rec.area_drift_rel,
        "affine_length": inv.affine_length,
        "energy": inv.energy,
        "energy_n2": inv.energy_n2,
        "energy_n3": inv.energy_n3,
        "santalo": inv.santalo,
        "total_curv": inv.total_curv,
        "min_sigma": inv.min_sigma,
        "max_sigma": inv.max_sigma,
        "min_r": inv.min_r,
        "minkowski_residual": inv.minkowski_residual,
        "script_L": inv.script_L,
        "script_M": inv.script_M,
        "script_Q": inv.script_Q,
        "sup_ht": rec.sup_ht,
    }
    if norm is not None:
        row.update(roundness=norm.roundness, norm_m=norm.m, norm_phi=norm.phi)
    return row


def write_table(path, rows, cols, fmt_name):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if fmt_name == "csv":
            fh.write(f"# schema={SCHEMA_NAME} version={SCHEMA_VERSION}\n")
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(fmt(row[c]) for c in cols) + "\n")
        else:
            fh.write(json.dumps({"schema": SCHEMA_NAME, "version": SCHEMA_VERSION, "columns": list(cols)}) + "\n")
            for row in rows:
                parts = []
                for c in cols:
                    v = fmt(row[c])
                    parts.append(f'"{c}": {v if v not in ("nan", "inf", "-inf") else "null"}')
                fh.write("{" + ", ".join(parts) + "}\n")


# --- experiments -------------------------------------------------------------


def trajectory_violations(traj):
    """Post-run checks that hold for every correct run."""
    out = []
    drift = traj.series("area_drift_rel")
    if drift.max() > AREA_DRIFT_TOL:
        out.append(f"area drift {drift.max():.3g} exceeds {AREA_DRIFT_TOL:g}")
    sant = traj.series("santalo")
    if sant.size > 1 and np.diff(sant).min() < -SANTALO_SLACK:
        out.append(f"santalo integral decreased by {-np.diff(sant).min():.3g}")
    return out


def run_experiment(config):
    """Run one flow and write its table.  Returns the summary dict."""
    start = time.perf_counter()
    curve0 = config.initial_curve()
    traj = flow_mod.run(curve0, config.flow, monitor_every=config.monitor_every)
    rows = []
    for rec, snap in zip(traj.records, traj.snapshots):
        norm = sl2.normalize(snap) if config.normalize_sl2 else None
        rows.append(record_row(rec, norm))
    cols = columns(config.normalize_sl2)
    write_table(config.output_path, rows, cols, config.format)
    final = traj.final_record
    return {
        "termination": traj.termination,
        "t_final": final.t,
        "steps_accepted": traj.steps_accepted,
        "steps_rejected": traj.steps_rejected,
        "records": len(rows),
        "B": traj.B,
        "final": final.invariants.as_dict(),
        "violations": trajectory_violations(traj),
        "output": config.output_path,
        "wall_time_s": time.perf_counter() - start,
    }


@dataclass
class SuiteReport:
    count: int
    seed: int
    violations: list = field(default_factory=list)
    equality_cases: int = 0
    checked: int = 0

    @property
    def ok(self):
        return not self.violations


def check_curve(curve):
    """All static affine checks on one curve; returns (violations, equality)."""
    state, inv = affine.analyze(curve)
    problems = []
    slacks = affine.check_inequalities(inv)
    for name, s in zip(("isoperimetric", "blaschke_santalo", "aleksandrov_fenchel"), slacks.as_tuple()):
        if s < -INEQUALITY_TOL:
            problems.append(f"{name} slack {s:.3g}")
    if not affine.check_infsup(inv, state).holds(tol=INEQUALITY_TOL):
        problems.append("sigma never reaches pi^(-2/3) A^(2/3)")
    tc = affine.check_totalcur_identity(state)
    if not tc.relative_residual < TOTALCUR_TOL:
        problems.append(f"total curvature identity residual {tc.relative_residual:.3g}")
    if not affine.check_oscillation_bounds(inv, state).holds(tol=INEQUALITY_TOL):
        problems.append("sigma outside the oscillation bounds")
    return problems, slacks.equality(tol=INEQUALITY_TOL)


def suite_specs(count, seed, max_harmonics=4, amplitude=0.3):
    """The ``count`` random fourier specs drawn from ``seed``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for _ in range(count):
        harmonics = int(rng.integers(1, max_harmonics + 1))
        cos_c, sin_c = random_coefficients(rng, harmonics, amplitude)
        out.append(CurveSpec(kind="fourier", cos_coeffs=cos_c, sin_coeffs=sin_c))
    return out


def run_inequality_suite(count, seed, n=256, amplitude=0.3):
    if count < 1:
        raise ConfigError("--count", f"must be >= 1, got {count}")
    report = SuiteReport(count=count, seed=seed)
    for i, spec in enumerate(suite_specs(count, seed, amplitude=amplitude)):
        curve = make_fourier(spec, n)
        problems, equality = check_curve(curve)
        report.checked += 1
        report.equality_cases += int(equality)
        if problems:
            report.violations.append({"index": i, "spec": asdict(spec), "problems": problems})
    return report


def analyze_config(config):
    curve = config.initial_curve()
    state, inv = affine.analyze(curve)
    problems, equality = check_curve(curve)
    report = validate(curve)
    return {
        "invariants": inv.as_dict(),
        "B": affine.b_constant(inv.script_L),
        "slacks": asdict(affine.check_inequalities(inv)),
        "m_relation_residual": state.m_relation_residual,
        "totalcur_identity_residual": affine.check_totalcur_identity(state).relative_residual,
        "symmetry_defect": report.symmetry_defect,
        "equality_case": equality,
        "violations": problems,
    }


# --- argument handling -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="ceaflow", description=__doc__.split("\n")[0])
    p.add_argument("--log-level", default="WARNING", help="python logging level (default WARNING)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="integrate the flow and write a trajectory table")
    sim.add_argument("--config", help="JSON config file")
    sim.add_argument("--n", type=int)
    sim.add_argument("--t-end", type=float)
    sim.add_argument("--output")
    sim.add_argument("--format", choices=("csv", "jsonl"))
    sim.add_argument("--normalize-sl2", action="store_true")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--monitor-every", type=int)

    chk = sub.add_parser("check-inequalities", help="verify the affine inequalities on random curves")
    chk.add_argument("--count", type=int, default=100)
    chk.add_argument("--seed", type=int, default=7)
    chk.add_argument("--n", type=int, default=256)
    chk.add_argument("--amplitude", type=float, default=0.3, help="coefficient scale; 0 gives circles")

    ana = sub.add_parser("analyze", help="print the invariants of the configured initial curve")
    ana.add_argument("--config", help="JSON config file")
    ana.add_argument("--n", type=int)
    ana.add_argument("--seed", type=int)

    swp = sub.add_parser("sweep", help="run several simulate configs on a process pool")
    swp.add_argument("configs", nargs="+")
    swp.add_argument("--workers", type=int, default=None)
    return p


def _config_from_args(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    return apply_overrides(config, args)


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def _sweep_one(path):
    config = load_config(path)
    return run_experiment(config)


def main(argv=None):
    import logging

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
    try:
        if args.command == "simulate":
            summary = run_experiment(_config_from_args(args))
            _dump(summary)
            return EXIT_VIOLATION if summary["violations"] else EXIT_OK
        if args.command == "check-inequalities":
            report = run_inequality_suite(args.count, args.seed, n=args.n, amplitude=args.amplitude)
            _dump(asdict(report))
            return EXIT_OK if report.ok else EXIT_VIOLATION
        if args.command == "analyze":
            out = analyze_config(_config_from_args(args))
            _dump(out)
            return EXIT_VIOLATION if out["violations"] else EXIT_OK
        if args.command == "sweep":
            configs = [load_config(p) for p in args.configs]
            outputs = [c.output_path for c in configs]
            if len(set(outputs)) != len(outputs):
                raise ConfigError("output", "sweep configs must write to distinct files")
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                summaries = list(pool.map(_sweep_one, args.configs))
            _dump(summaries)
            return EXIT_VIOLATION if any(s["violations"] for s in summaries) else EXIT_OK
    except ConfigError as exc:
        print(f"ceaflow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ceaflow: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

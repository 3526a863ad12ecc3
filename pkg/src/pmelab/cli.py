"""Configuration-driven experiment runner.

Experiments are described by flat INI-style files (bracketed section
headers, key = value lines, no nesting) and run in one of five modes:

  bound-only        regime verdict + every applicable bound/ceiling
  simulate          time integration only
  validate          bounds + simulation + envelope check + bound comparison
  inequality-suite  the seeded functional-inequality battery
  sweep             one parameter swept over a range of sub-experiments

Each run writes into its output directory: config.ini (the exact resolved
configuration, round-trippable), report.txt, bounds.csv, series.csv and
inequalities.csv as applicable, all numbers with 17 significant digits so
identical config + seed reproduces byte-identical files.  Exit status 0 on
success, 1 on configuration/usage errors, 2 when a validated bound is
violated (t*_est < T, or psi above the global ceiling) - the scientifically
interesting outcome, distinct from a crash.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import io
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from . import pde, verify
from .errors import ConfigurationError, PmelabError
from .geometry import (
    BALL,
    DISK,
    INTERVAL,
    RECTANGLE,
    DomainShape,
    build_grid,
    compute_geometry,
    integrate,
)
from .regime import ProblemParams, classify, flux_exponent

MODES = ("bound-only", "simulate", "validate", "inequality-suite", "sweep")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BOUND_VIOLATED = 2

_SWEEPABLE = ("a", "b", "c", "k", "m", "p", "q", "amplitude")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclasses.dataclass
class SweepSpec:
    parameter: str
    lo: float
    hi: float
    count: int
    mode: str = "bound-only"


@dataclasses.dataclass
class ExperimentConfig:
    shape: DomainShape
    params: ProblemParams
    datum: pde.InitialDatum
    solver: pde.SolverConfig
    mode: str = "bound-only"
    seed: int = 0
    sweep: SweepSpec | None = None
    label: str = "experiment"


def _get(section, key, cast, *, required=True, default=None):
    if key not in section:
        if required:
            raise ConfigurationError(f"[{section.name}] missing key {key!r}")
        return default
    raw = section[key]
    try:
        value = cast(raw)
    except ValueError as exc:
        raise ConfigurationError(f"[{section.name}] {key} = {raw!r}: {exc}") from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigurationError(f"[{section.name}] {key} = {raw!r} is not finite")
    return value


def _parse_shape(section) -> DomainShape:
    kind = _get(section, "kind", str)
    if kind == INTERVAL:
        return DomainShape.interval(_get(section, "half_length", float))
    if kind == DISK:
        return DomainShape.disk(_get(section, "radius", float))
    if kind == BALL:
        return DomainShape.ball(_get(section, "radius", float))
    if kind == RECTANGLE:
        return DomainShape.rectangle(
            _get(section, "half_width_x", float), _get(section, "half_width_y", float)
        )
    raise ConfigurationError(f"[domain] unknown kind {kind!r}")


def parse_config(source: str | Path) -> ExperimentConfig:
    """Parse an experiment file (or literal INI text) with field-level errors."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    text = None
    label = "experiment"
    path = Path(source) if not str(source).lstrip().startswith("[") else None
    if path is not None:
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        text = path.read_text()
        label = path.stem
    else:
        text = str(source)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error: {exc}") from exc

    for name in ("experiment", "domain", "params", "initial", "solver"):
        if name not in parser:
            raise ConfigurationError(f"missing required section [{name}]")

    exp = parser["experiment"]
    mode = _get(exp, "mode", str)
    if mode not in MODES:
        raise ConfigurationError(f"[experiment] mode must be one of {MODES}, got {mode!r}")
    seed = _get(exp, "seed", int, required=False, default=0)

    shape = _parse_shape(parser["domain"])

    ps = parser["params"]
    params = ProblemParams(
        a=_get(ps, "a", float), b=_get(ps, "b", float), c=_get(ps, "c", float),
        k=_get(ps, "k", float), m=_get(ps, "m", float), p=_get(ps, "p", float),
        q=_get(ps, "q", float),
    )

    ds = parser["initial"]
    table = None
    table_raw = _get(ds, "table", str, required=False)
    if table_raw:
        rows = []
        for chunk in table_raw.split(";"):
            r, v = chunk.split(",")
            rows.append((float(r), float(v)))
        table = tuple(rows)
    datum = pde.InitialDatum(
        kind=_get(ds, "kind", str, required=False, default="constant"),
        amplitude=_get(ds, "amplitude", float, required=False, default=1.0),
        width=_get(ds, "width", float, required=False, default=1.0),
        offset=_get(ds, "offset", float, required=False, default=0.0),
        table=table,
        compat_tol=_get(ds, "compat_tol", float, required=False, default=1e-8),
    )

    sv = parser["solver"]
    solver = pde.SolverConfig(
        resolution=_get(sv, "resolution", int),
        cfl_safety=_get(sv, "cfl_safety", float, required=False, default=0.5),
        t_horizon=_get(sv, "t_horizon", float),
        blowup_sup_threshold=_get(sv, "blowup_sup_threshold", float, required=False, default=1e8),
        blowup_phi_threshold=_get(sv, "blowup_phi_threshold", float, required=False, default=1e12),
        dt_floor=_get(sv, "dt_floor", float, required=False, default=1e-14),
        output_stride=_get(sv, "output_stride", int, required=False, default=50),
        growth_cap=_get(sv, "growth_cap", float, required=False, default=0.2),
    )

    sweep = None
    if mode == "sweep":
        if "sweep" not in parser:
            raise ConfigurationError("sweep mode needs a [sweep] section")
        sw = parser["sweep"]
        parameter = _get(sw, "parameter", str)
        if parameter not in _SWEEPABLE:
            raise ConfigurationError(
                f"[sweep] parameter must be one of {_SWEEPABLE}, got {parameter!r}"
            )
        sub_mode = _get(sw, "mode", str, required=False, default="bound-only")
        if sub_mode not in ("bound-only", "simulate", "validate"):
            raise ConfigurationError("[sweep] mode must be bound-only, simulate or validate")
        sweep = SweepSpec(
            parameter=parameter,
            lo=_get(sw, "min", float),
            hi=_get(sw, "max", float),
            count=_get(sw, "count", int),
            mode=sub_mode,
        )
        if sweep.count < 2:
            raise ConfigurationError("[sweep] count must be >= 2")

    return ExperimentConfig(shape, params, datum, solver, mode, seed, sweep, label)


def render_config(config: ExperimentConfig) -> str:
    """Exact resolved configuration, parseable back by parse_config."""
    parser = configparser.ConfigParser()
    parser["experiment"] = {"mode": config.mode, "seed": str(config.seed)}
    dom: dict[str, str] = {"kind": config.shape.kind}
    if config.shape.kind == INTERVAL:
        dom["half_length"] = _fmt(config.shape.extents[0])
    elif config.shape.kind in (DISK, BALL):
        dom["radius"] = _fmt(config.shape.extents[0])
    else:
        dom["half_width_x"] = _fmt(config.shape.extents[0])
        dom["half_width_y"] = _fmt(config.shape.extents[1])
    parser["domain"] = dom
    parser["params"] = {
        name: _fmt(getattr(config.params, name)) for name in ("a", "b", "c", "k", "m", "p", "q")
    }
    initial = {
        "kind": config.datum.kind,
        "amplitude": _fmt(config.datum.amplitude),
        "width": _fmt(config.datum.width),
        "offset": _fmt(config.datum.offset),
        "compat_tol": _fmt(config.datum.compat_tol),
    }
    if config.datum.table:
        initial["table"] = ";".join(f"{_fmt(r)},{_fmt(v)}" for r, v in config.datum.table)
    parser["initial"] = initial
    parser["solver"] = {
        "resolution": str(config.solver.resolution),
        "cfl_safety": _fmt(config.solver.cfl_safety),
        "t_horizon": _fmt(config.solver.t_horizon),
        "blowup_sup_threshold": _fmt(config.solver.blowup_sup_threshold),
        "blowup_phi_threshold": _fmt(config.solver.blowup_phi_threshold),
        "dt_floor": _fmt(config.solver.dt_floor),
        "output_stride": str(config.solver.output_stride),
        "growth_cap": _fmt(config.solver.growth_cap),
    }
    if config.sweep is not None:
        parser["sweep"] = {
            "parameter": config.sweep.parameter,
            "min": _fmt(config.sweep.lo),
            "max": _fmt(config.sweep.hi),
            "count": str(config.sweep.count),
            "mode": config.sweep.mode,
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


_BOUNDS_COLUMNS = (
    "variant", "formula", "value", "phi0", "eps1", "eps1_max", "eps2", "eps3",
    "c1", "c2", "c3", "c4", "c5", "upsilon", "sigma", "alpha", "eps_global",
    "M1", "M2", "a", "b", "c", "k", "m", "p", "q", "rho0", "d", "volume",
    "surface", "dimension",
)


def _bounds_row(result: bounds_mod.BoundResult) -> dict[str, str]:
    ledger = result.ledger
    params, geom = ledger.params, ledger.geometry
    row = {name: "" for name in _BOUNDS_COLUMNS}
    row.update(
        variant=ledger.variant, formula=result.formula, value=_fmt(result.value),
        phi0=_fmt(result.phi0),
        a=_fmt(params.a), b=_fmt(params.b), c=_fmt(params.c), k=_fmt(params.k),
        m=_fmt(params.m), p=_fmt(params.p), q=_fmt(params.q),
        rho0=_fmt(geom.rho0), d=_fmt(geom.d), volume=_fmt(geom.volume),
        surface=_fmt(geom.surface), dimension=str(geom.dimension),
    )
    if ledger.epsilons is not None:
        row.update(
            eps1=_fmt(ledger.epsilons.eps1), eps1_max=_fmt(ledger.epsilons.eps1_max),
            eps2=_fmt(ledger.epsilons.eps2), eps3=_fmt(ledger.epsilons.eps3),
        )
    for name in ("c1", "c2", "c3", "c4", "c5", "upsilon", "sigma", "alpha",
                 "eps_global", "M1", "M2"):
        value = getattr(ledger, name)
        if value is not None:
            row[name] = _fmt(value)
    return row


def _write_bounds_csv(path: Path, rows: list[dict[str, str]]) -> None:
    lines = [",".join(_BOUNDS_COLUMNS)]
    lines += [",".join(row[col] for col in _BOUNDS_COLUMNS) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_series_csv(path: Path, series: pde.SimulationSeries) -> None:
    lines = ["t,sup_u,phi,psi,dt"]
    for s in series.samples:
        lines.append(",".join(_fmt(v) for v in (s.t, s.sup_u, s.phi, s.psi, s.dt)))
    path.write_text("\n".join(lines) + "\n")


def _write_inequalities_csv(path: Path, reports: list[verify.InequalityReport]) -> None:
    lines = ["inequality,shape,lambda,epsilon,seed,amplitude,resolution,"
             "lhs,rhs,margin,margin_2x,margin_4x,tolerance,passed"]
    for r in reports:
        case = r.case
        lines.append(",".join((
            case.inequality,
            "-",
            _fmt(case.lam),
            _fmt(case.epsilon) if case.epsilon is not None else "",
            str(case.test_function.seed),
            _fmt(case.test_function.amplitude),
            str(case.resolution),
            _fmt(r.lhs), _fmt(r.rhs), _fmt(r.margin),
            _fmt(r.margin_refined[0]), _fmt(r.margin_refined[1]),
            _fmt(r.tolerance),
            "1" if r.passed else "0",
        )))
    path.write_text("\n".join(lines) + "\n")


def _initial_moments(config: ExperimentConfig, geom, beta: float) -> tuple[float, float, float]:
    grid = build_grid(geom, config.solver.resolution)
    field, resid = pde.make_initial_field(config.datum, grid, config.params.k, beta)
    ms = config.params.m * config.params.s
    return integrate(grid, field.values, ms), integrate(grid, field.values, 2.0), resid


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None,
                   quiet: bool = False) -> tuple[int, Path]:
    """Execute one experiment; returns (exit status, output directory)."""
    if out_dir is None:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        out = Path("runs") / f"{config.label}-{stamp}"
    else:
        out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(render_config(config))

    report: list[str] = []
    status = EXIT_OK

    def say(line: str) -> None:
        report.append(line)
        if not quiet:
            print(line)

    try:
        status = _run_modes(config, out, say)
    except PmelabError as exc:
        say(f"error: {exc}")
        status = EXIT_CONFIG
    say(f"exit status: {status}")
    (out / "report.txt").write_text("\n".join(report) + "\n")
    return status, out


def _run_modes(config: ExperimentConfig, out: Path, say) -> int:
    geom = compute_geometry(config.shape)
    params = config.params
    say(f"mode: {config.mode}")
    say(
        f"domain: {config.shape.kind} extents={config.shape.extents} N={geom.dimension} "
        f"rho0={_fmt(geom.rho0)} d={_fmt(geom.d)} volume={_fmt(geom.volume)} "
        f"surface={_fmt(geom.surface)}"
    )
    say(
        "params: " + " ".join(f"{n}={_fmt(getattr(params, n))}" for n in
                              ("a", "b", "c", "k", "m", "p", "q"))
    )

    if config.mode == "inequality-suite":
        reports = verify.standard_suite(config.seed, resolution=config.solver.resolution)
        _write_inequalities_csv(out / "inequalities.csv", reports)
        n_pass = sum(1 for r in reports if r.passed)
        say(f"inequality suite: {n_pass}/{len(reports)} cases passed "
            f"(margin >= -10x quadrature tolerance)")
        return EXIT_OK if n_pass == len(reports) else EXIT_BOUND_VIOLATED

    if config.mode == "sweep":
        return _run_sweep(config, out, say)

    verdict = classify(params, geom.dimension)
    say(f"regime: {verdict.label}")
    if verdict.violated_conditions:
        say("violated hypotheses: " + "; ".join(verdict.violated_conditions))

    if config.mode in ("bound-only", "validate") and verdict.not_covered:
        say("no bound machinery applies to these parameters")
        return EXIT_CONFIG

    beta = 0.0
    if params.k > 0.0 and not verdict.not_covered:
        beta = flux_exponent(params, verdict)
    say(f"flux: g(u) = k u^beta with beta={_fmt(beta)}")

    phi0, psi0, resid = _initial_moments(config, geom, beta)
    say(f"initial datum: {config.datum.kind} compat_residual={_fmt(resid)}")
    say(f"phi0={_fmt(phi0)} psi0={_fmt(psi0)}")

    results: list[bounds_mod.BoundResult] = []
    if config.mode in ("bound-only", "validate"):
        results = bounds_mod.all_bounds(params, geom, phi0, psi0)
        _write_bounds_csv(out / "bounds.csv", [_bounds_row(r) for r in results])
        for r in results:
            kindname = "C (psi ceiling)" if r.formula == bounds_mod.FORMULA_GLOBAL else "T"
            say(f"bound: variant={r.ledger.variant} formula={r.formula} "
                f"{kindname}={_fmt(r.value)}")
        if config.mode == "bound-only":
            return EXIT_OK

    series = None
    if config.mode in ("simulate", "validate"):
        series = pde.run(config.datum, params, geom, config.solver)
        _write_series_csv(out / "series.csv", series)
        say(f"simulation: verdict={series.verdict} samples={len(series.samples)} "
            f"t_end={_fmt(series.samples[-1].t)} sup_end={_fmt(series.samples[-1].sup_u)}")
        if series.verdict == pde.VERDICT_BLOWUP:
            say(f"t_star_est={_fmt(series.t_star_est)} "
                f"uncertainty={_fmt(series.t_star_uncertainty)}")

    if config.mode == "validate":
        return _validate_outcome(series, results, verdict, say)
    return EXIT_OK


def _validate_outcome(series, results, verdict, say) -> int:
    status = EXIT_OK
    if verdict.global_existence:
        ceiling = next(r for r in results if r.formula == bounds_mod.FORMULA_GLOBAL)
        worst = max(s.psi for s in series.samples)
        holds = worst <= ceiling.value
        say(f"ceiling check: max psi={_fmt(worst)} C={_fmt(ceiling.value)} "
            f"bound holds: {'yes' if holds else 'no'}")
        if not holds:
            status = EXIT_BOUND_VIOLATED
        return status

    closed = next(
        r for r in results
        if r.formula in (bounds_mod.FORMULA_CLOSED_3D, bounds_mod.FORMULA_CLOSED_2D)
    )
    if series.verdict != pde.VERDICT_BLOWUP:
        say(f"bound check: untestable (no blow-up observed; verdict={series.verdict}); "
            f"T={_fmt(closed.value)} remains a valid lower bound")
        return EXIT_OK
    holds = series.t_star_est >= closed.value
    say(f"bound check: t_star_est={_fmt(series.t_star_est)} >= T={_fmt(closed.value)} : "
        f"bound holds: {'yes' if holds else 'no'}")
    if not holds:
        status = EXIT_BOUND_VIOLATED

    env = verify.check_phi_envelope(series, closed.ledger)
    say(f"envelope check: {'PASS' if env.passed else 'FAIL'} "
        f"worst_ratio={_fmt(env.worst_ratio)} tolerance={_fmt(env.tolerance)}")
    if not env.passed:
        status = EXIT_BOUND_VIOLATED
    return status


def _run_sweep(config: ExperimentConfig, out: Path, say) -> int:
    sweep = config.sweep
    values = np.linspace(sweep.lo, sweep.hi, sweep.count)
    sub_configs = []
    for i, value in enumerate(values):
        params = config.params
        datum = config.datum
        if sweep.parameter == "amplitude":
            datum = dataclasses.replace(datum, amplitude=float(value))
        else:
            params = dataclasses.replace(params, **{sweep.parameter: float(value)})
        sub = dataclasses.replace(
            config, params=params, datum=datum, mode=sweep.mode, sweep=None,
            label=f"{sweep.parameter}-{i:03d}",
        )
        sub_configs.append(sub)

    def run_one(item):
        i, sub = item
        sub_dir = out / f"{sweep.parameter}={values[i]:.6g}"
        return run_experiment(sub, out_dir=sub_dir, quiet=True)

    with ThreadPoolExecutor(max_workers=min(4, sweep.count)) as pool:
        outcomes = list(pool.map(run_one, enumerate(sub_configs)))

    rows: list[dict[str, str]] = []
    t_values: list[float] = []
    status = EXIT_OK
    for i, (sub_status, sub_dir) in enumerate(outcomes):
        status = max(status, sub_status)
        say(f"sweep point {sweep.parameter}={values[i]:.6g}: status {sub_status}")
        bounds_file = sub_dir / "bounds.csv"
        if bounds_file.exists():
            lines = bounds_file.read_text().splitlines()
            header = lines[0].split(",")
            for line in lines[1:]:
                row = dict(zip(header, line.split(",")))
                row["sweep_value"] = _fmt(values[i])
                rows.append(row)
                if row["formula"] in (bounds_mod.FORMULA_CLOSED_3D,
                                      bounds_mod.FORMULA_CLOSED_2D):
                    t_values.append(float(row["value"]))
    if rows:
        columns = ["sweep_value", *_BOUNDS_COLUMNS]
        lines = [",".join(columns)]
        lines += [",".join(row.get(col, "") for col in columns) for row in rows]
        (out / "bounds.csv").write_text("\n".join(lines) + "\n")
    if len(t_values) == sweep.count:
        monotone = all(t_values[i + 1] >= t_values[i] for i in range(len(t_values) - 1))
        say(f"T nondecreasing in {sweep.parameter}: {'yes' if monotone else 'no'}")
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pmelab",
        description="Blow-up bounds and simulation for the nonlocal porous-medium problem",
    )
    parser.add_argument("config", help="path to the experiment configuration file")
    parser.add_argument("--out", default=None, help="output directory (default: timestamped)")
    parser.add_argument("--mode", default=None, choices=MODES, help="override the config mode")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        config = parse_config(args.config)
        if args.mode is not None:
            config = dataclasses.replace(config, mode=args.mode)
            if args.mode != "sweep":
                config = dataclasses.replace(config, sweep=None)
        status, out = run_experiment(config, out_dir=args.out, quiet=args.quiet)
    except PmelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        print(f"artifacts written to {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())

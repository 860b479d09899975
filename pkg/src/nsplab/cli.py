"""Command-line front end: ``nsplab <kind> --config cfg.json [--out DIR]``.

Every run writes ``<kind>.csv``, ``<kind>_report.json`` and ``manifest.json``
into the output directory.  The exit status is 0 only when every internal
check of the experiment passed; on any failure the partial artifacts are
removed and the manifest records the cause.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decay import (
    KERNEL_PIECES,
    ExperimentConfig,
    InitialData,
    PreconditionError,
    compare_ns,
    evolve_norm_series,
    expected_kernel_slope,
    fit_decay,
    spectral_kernel_lq_slope,
    verify_lower_bound,
)
from .green import (
    acceptance_oracle_grid,
    asymptotic_check,
    asymptotic_slopes,
    high_freq_envelope,
    oracle_discrepancy,
)
from .gridio import write_grid
from .nonlinear import GridSpec, StepperConfig, run_simulation
from .radial import Gaussian
from .reports import RunManifest, annotate_fits, emit_csv, emit_report
from .symbol import FluidParams, characteristic_residual, eigen_decompose

KINDS = ("eigen", "green-check", "decay", "lower-bound", "compare-ns", "kernel-lp", "simulate")

PARAM_DEFAULTS = {
    "mu": 1.0, "nu": 0.0, "debye": 1.0, "rho_bar": 1.0,
    "sound_speed": 1.0, "gamma": 2.0, "poisson": True,
}

_DECAY = {
    "t_min": 100.0, "t_max": 1e4, "points_per_two_decades": 60,
    "derivative_orders": [0], "norms": [["n", 2], ["m", 2], ["E", 2]],
    "averaging": True, "averaging_window": 1.0,
    "initial": {"n0": {"amplitude": 1.0, "rate": 1.0}, "m0_long": None,
                "m0_trans": None, "floor": [math.exp(-1.0), 1.0]},
}

EXPERIMENT_DEFAULTS = {
    "eigen": {"r_min": 1e-3, "r_max": 1e3, "count": 61},
    "green-check": {"count": 20, "tolerance": 1e-10, "r_cut": 10.0,
                    "envelope_t_max": 20.0, "asymptotic_t": 1.0},
    "decay": _DECAY,
    "lower-bound": {**_DECAY, "R": 5.0, "samples": 400, "norms": [["m", 2]]},
    "compare-ns": {**_DECAY, "norms": [["n", 2], ["m", 2]]},
    "kernel-lp": {"pieces": list(KERNEL_PIECES), "p": [2, "inf"], "alpha": [0, 1],
                  "mode": "model", "t_min": 100.0, "t_max": 1e4, "points": 61},
    "simulate": {"L": 40.0, "N": 32, "dealias_fraction": 2.0 / 3.0, "dt": 0.1,
                 "scheme": "ETD2", "t_end": 20.0, "snapshot_stride": 10,
                 "epsilon": 1e-4, "nonlinear": True, "write_snapshots": False},
}

OUTPUT_DEFAULTS = {"directory": "nsplab-out", "formats": ["csv", "json"]}
GAUSSIAN_KEYS = {"amplitude": 1.0, "rate": 1.0, "poly": []}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _merge(defaults: dict, given: dict, path: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(path, "expected an object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown key")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(given))
    return out


def _gaussian(spec, path: str):
    if spec is None:
        return None
    g = _merge(GAUSSIAN_KEYS, spec, path)
    try:
        return Gaussian(float(g["amplitude"]), float(g["rate"]), tuple(float(c) for c in g["poly"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def _p_value(p, path: str) -> float:
    if isinstance(p, str) and p.lower() in ("inf", "infinity"):
        return math.inf
    try:
        value = float(p)
    except (TypeError, ValueError):
        raise ConfigError(path, f"invalid norm exponent {p!r}") from None
    if not value >= 2:
        raise ConfigError(path, "p must be in [2, inf]")
    return value


def build_params(section: dict) -> FluidParams:
    p = _merge(PARAM_DEFAULTS, section, "$.params")
    try:
        return FluidParams(mu=float(p["mu"]), nu_second=float(p["nu"]), debye=float(p["debye"]),
                           rho_bar=float(p["rho_bar"]), sound_speed=float(p["sound_speed"]),
                           gamma=float(p["gamma"]), poisson_enabled=bool(p["poisson"]))
    except (TypeError, ValueError) as exc:
        message = str(exc)
        key = "nu" if message.startswith("(2/3)") else message.split(" ")[0]
        raise ConfigError(f"$.params.{key}" if key in PARAM_DEFAULTS else "$.params",
                          message) from None


def build_experiment_config(params: FluidParams, exp: dict) -> ExperimentConfig:
    init = _merge(_DECAY["initial"], exp["initial"], "$.experiment.initial")
    floor = init["floor"]
    norms = tuple((str(f), _p_value(p, f"$.experiment.norms[{i}]"))
                  for i, (f, p) in enumerate(exp["norms"]))
    try:
        return ExperimentConfig(
            params=params,
            initial=InitialData(
                n0=_gaussian(init["n0"], "$.experiment.initial.n0"),
                m0_long=_gaussian(init["m0_long"], "$.experiment.initial.m0_long"),
                m0_trans=_gaussian(init["m0_trans"], "$.experiment.initial.m0_trans"),
                floor=tuple(floor) if floor is not None else None),
            t_min=float(exp["t_min"]), t_max=float(exp["t_max"]),
            points_per_two_decades=int(exp["points_per_two_decades"]),
            derivative_orders=tuple(int(k) for k in exp["derivative_orders"]),
            norms=norms, averaging=bool(exp["averaging"]) and params.poisson_enabled,
            averaging_window=float(exp["averaging_window"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError("$.experiment", str(exc)) from None


def load_config(path) -> dict:
    """Parse and validate a JSON config; defaults are filled in."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"parse error: {exc}") from None
    except OSError as exc:
        raise ConfigError("$", f"cannot read config: {exc}") from None
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    top = _merge({"params": {}, "experiment": {}, "output": {}}, raw, "$")
    params = build_params(top["params"])
    exp_raw = top["experiment"]
    if not isinstance(exp_raw, dict) or "kind" not in exp_raw:
        raise ConfigError("$.experiment.kind", "missing experiment kind")
    kind = exp_raw["kind"]
    if kind not in KINDS:
        raise ConfigError("$.experiment.kind", f"unknown kind {kind!r}; expected one of {KINDS}")
    body = {k: v for k, v in exp_raw.items() if k != "kind"}
    exp = _merge(EXPERIMENT_DEFAULTS[kind], body, "$.experiment")
    output = _merge(OUTPUT_DEFAULTS, top["output"], "$.output")
    bad = sorted(set(output["formats"]) - {"csv", "json"})
    if bad:
        raise ConfigError("$.output.formats", f"unsupported format {bad[0]!r}")
    config = {"params": _merge(PARAM_DEFAULTS, top["params"], "$.params"),
              "experiment": {"kind": kind, **exp}, "output": output}
    # build once so constraint violations surface at load time
    _objects(config, params)
    return config


def _objects(config: dict, params: FluidParams | None = None) -> dict:
    params = params or build_params(config["params"])
    exp = config["experiment"]
    kind = exp["kind"]
    out = {"params": params}
    if kind in ("decay", "lower-bound", "compare-ns"):
        out["experiment"] = build_experiment_config(params, exp)
    elif kind == "simulate":
        try:
            out["grid"] = GridSpec(float(exp["L"]), int(exp["N"]), float(exp["dealias_fraction"]))
            out["stepper"] = StepperConfig(float(exp["dt"]), str(exp["scheme"]),
                                           float(exp["t_end"]), int(exp["snapshot_stride"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError("$.experiment", str(exc)) from None
    elif kind == "kernel-lp":
        for i, piece in enumerate(exp["pieces"]):
            if piece not in KERNEL_PIECES:
                raise ConfigError(f"$.experiment.pieces[{i}]", f"unknown kernel piece {piece!r}")
        for i, p in enumerate(exp["p"]):
            _p_value(p, f"$.experiment.p[{i}]")
        if exp["mode"] not in ("model", "exact"):
            raise ConfigError("$.experiment.mode", "mode must be 'model' or 'exact'")
    return out


# -- experiments ---------------------------------------------------------------
# Each returns (rows, columns, report, checks).

def _run_eigen(config, objs):
    exp = config["experiment"]
    params = objs["params"]
    rows = []
    for r in np.geomspace(exp["r_min"], exp["r_max"], int(exp["count"])):
        e = eigen_decompose(params, float(r))
        res = max(characteristic_residual(params, float(r), lam)
                  for lam in (e.lambda0, e.lambda_plus, e.lambda_minus))
        rows.append({"r": e.r, "lambda0": e.lambda0,
                     "lambda_plus_re": e.lambda_plus.real, "lambda_plus_im": e.lambda_plus.imag,
                     "lambda_minus_re": e.lambda_minus.real,
                     "lambda_minus_im": e.lambda_minus.imag,
                     "discriminant": e.discriminant, "regime": e.regime, "residual": res})
    worst = max(row["residual"] for row in rows)
    checks = {"characteristic_residual": worst <= 1e-12}
    return rows, None, {"max_residual": worst}, checks


def _run_green_check(config, objs):
    exp = config["experiment"]
    params = objs["params"]
    radii, times = acceptance_oracle_grid(params, int(exp["count"]))
    worst, where = oracle_discrepancy(params, radii, times)
    slopes = asymptotic_slopes(params)
    t_grid = np.linspace(0.5, float(exp["envelope_t_max"]), 40)
    try:
        C, R0, _ = high_freq_envelope(params, float(exp["r_cut"]), t_grid)
    except ArithmeticError:
        C, R0 = float("nan"), float("nan")
    rows = asymptotic_check(params, np.geomspace(1e-3, 1e3, 61), float(exp["asymptotic_t"]))
    # approximants that do not apply at a radius are left blank
    rows = [{k: ("" if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}
            for row in rows]
    checks = {"oracle": worst <= float(exp["tolerance"]),
              "high_frequency_slope": slopes["high_slope"] <= -0.8,
              "envelope_rate_positive": bool(R0 > 0)}
    if "b_slope" in slopes:
        checks["b_expansion_slope"] = abs(slopes["b_slope"] - 4.0) <= 0.2
    report = {"oracle_max_error": worst, "oracle_worst_point": where, "slopes": slopes,
              "envelope": {"C": C, "R0": R0}}
    return rows, None, report, checks


def _sharp(cfg: ExperimentConfig) -> bool:
    return cfg.initial.floor is not None


def _run_decay(config, objs):
    cfg = objs["experiment"]
    series = evolve_norm_series(cfg)
    fits = [fit_decay(s, averaging=cfg.averaging) for s in series.values()]
    notes = annotate_fits(fits, cfg.params.poisson_enabled, _sharp(cfg))
    checks = {f"fit_{d['field']}_L{d['p']}_k{d['k']}": d["passed"] for d in notes}
    if cfg.averaging:
        for key, s in series.items():
            if key[1] == 2:
                avg = s.averaged()
                checks[f"monotone_{s.label}"] = bool(np.all(np.diff(avg) <= 1e-12 * avg[:-1]))
    return series, None, {"fits": notes}, checks


def _run_lower_bound(config, objs):
    cfg = objs["experiment"]
    exp = config["experiment"]
    rep = verify_lower_bound(cfg.params, float(exp["R"]), cfg, int(exp["samples"]))
    rows = [{"t": float(t), "F": float(f)} for t, f in zip(rep.t_samples, rep.F_samples)]
    body = rep.as_dict()
    body["ratio_series"] = {"t": rep.ratio_t, "value": rep.ratio_values}
    lo, hi = rep.ratio_band
    checks = {"F_min_above_analytic": rep.F_min_numeric >= rep.F_min_analytic,
              "periodicity": rep.periodicity_defect <= 1e-8,
              "ratio_band": bool(lo > 0 and hi / lo <= 1e2)}
    return rows, None, {"lower_bound": body}, checks


def _run_compare_ns(config, objs):
    cfg = objs["experiment"]
    res = compare_ns(cfg)
    nsp = annotate_fits(res["nsp"], True, _sharp(cfg))
    ns = annotate_fits(res["ns"], False, _sharp(cfg))
    rows = []
    for label, fits in (("nsp", nsp), ("ns", ns)):
        for d in fits:
            rows.append({"system": label, "field": d["field"], "p": d["p"], "k": d["k"],
                         "exponent": d["exponent"], "stderr": d["stderr"], "target": d["target"]})
    checks = {f"{label}_{d['field']}_L{d['p']}_k{d['k']}": d["passed"]
              for label, fits in (("nsp", nsp), ("ns", ns)) for d in fits}
    report = {"fits": {"nsp": nsp, "ns": ns},
              **{k: v for k, v in res.items() if k.endswith("_exponent")}}
    return rows, None, report, checks


def _run_kernel_lp(config, objs):
    exp = config["experiment"]
    params = objs["params"]
    rows, checks = [], {}
    for piece in exp["pieces"]:
        for p_raw in exp["p"]:
            p = _p_value(p_raw, "$.experiment.p")
            for alpha in exp["alpha"]:
                fit = spectral_kernel_lq_slope(params, piece, p, int(alpha), exp["mode"],
                                               float(exp["t_min"]), float(exp["t_max"]),
                                               int(exp["points"]))
                target = expected_kernel_slope(piece, p, int(alpha))
                ok = abs(fit.exponent - target) <= 0.05
                label = "inf" if math.isinf(p) else f"{p:g}"
                rows.append({"piece": piece, "p": label, "alpha": int(alpha),
                             "slope": fit.exponent, "stderr": fit.stderr, "target": target})
                checks[f"{piece}_p{label}_a{alpha}"] = ok
    return rows, None, {"slopes": rows}, checks


def _run_simulate(config, objs, out_dir: Path, threads: int):
    exp = config["experiment"]
    grid = GridSpec(objs["grid"].L, objs["grid"].N, objs["grid"].dealias_fraction, workers=threads)
    res = run_simulation(grid, objs["params"], objs["stepper"], float(exp["epsilon"]),
                         nonlinear=bool(exp["nonlinear"]))
    e = res.energy
    slack = 1e-6 * e[:-1]
    checks = {"mass_zero": bool(np.abs(res.mass).max() <= 1e-12),
              "conjugate_symmetry": res.max_asymmetry <= 1e-12,
              "energy_nonincreasing": bool(np.all(np.diff(e) <= slack))}
    extra = []
    if exp["write_snapshots"]:
        for i, st in enumerate(res.snapshots):
            extra.append(write_grid(out_dir / f"snapshot_{i:04d}_n.grid", st.n_hat))
    report = {"final_time": float(res.t[-1]), "max_asymmetry": res.max_asymmetry,
              "max_abs_mass": float(np.abs(res.mass).max()), "grid": {"L": grid.L, "N": grid.N},
              "stepper": {"dt": objs["stepper"].dt, "scheme": objs["stepper"].scheme}}
    return res.rows(), None, report, checks, extra


def run_experiment(config: dict, out_dir=None, seed: int | None = None, threads: int = 1):
    """Run a validated config; returns ``(manifest, exit_status)``."""
    kind = config["experiment"]["kind"]
    out_dir = Path(out_dir or config["output"]["directory"])
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.start(kind, config)
    manifest.config = {**config, "seed": seed, "threads": threads}
    formats = config["output"]["formats"]
    written = []
    try:
        objs = _objects(config)
        extra = []
        if kind == "simulate":
            rows, columns, report, checks, extra = _run_simulate(config, objs, out_dir, threads)
        else:
            runner = {"eigen": _run_eigen, "green-check": _run_green_check,
                      "decay": _run_decay, "lower-bound": _run_lower_bound,
                      "compare-ns": _run_compare_ns, "kernel-lp": _run_kernel_lp}[kind]
            rows, columns, report, checks = runner(config, objs)
        written.extend(extra)
        if "csv" in formats:
            written.append(emit_csv(rows, out_dir / f"{kind}.csv", columns))
        report = {"kind": kind, "config": config, "checks": checks,
                  "passed": all(checks.values()), **report}
        if "json" in formats:
            written.append(emit_report(report, out_dir / f"{kind}_report.json"))
        manifest.checks = checks
        manifest.artifacts = written
        if all(checks.values()):
            manifest.finish("ok")
            status = 0
        else:
            failed = sorted(k for k, v in checks.items() if not v)
            manifest.finish("checks_failed", "failed checks: " + ", ".join(failed))
            status = 1
    except (ArithmeticError, ValueError) as exc:
        for path in written:
            Path(path).unlink(missing_ok=True)
        manifest.artifacts = []
        manifest.finish("error", f"{type(exc).__name__}: {exc}")
        status = 1
    manifest.artifacts.append(out_dir / "manifest.json")
    manifest.write(out_dir)
    return manifest, status


def _defaults_epilog() -> str:
    lines = ["config defaults:", f"  params: {json.dumps(PARAM_DEFAULTS)}",
             f"  output: {json.dumps(OUTPUT_DEFAULTS)}"]
    for kind, d in EXPERIMENT_DEFAULTS.items():
        lines.append(f"  experiment[{kind}]: {json.dumps(d)}")
    lines.append("environment: NSPLAB_OUT overrides --out")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsplab", description=__doc__.splitlines()[0],
        epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"nsplab {__version__}")
    parser.add_argument("kind", choices=KINDS, help="experiment to run")
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", help="output directory (default: output.directory)")
    parser.add_argument("--seed", type=int, default=None,
                        help="recorded in the manifest; all experiments are deterministic")
    parser.add_argument("--threads", type=int, default=1, help="FFT worker threads for simulate")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("nsplab: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"nsplab: config error: {exc}", file=sys.stderr)
        return 2
    if config["experiment"]["kind"] != args.kind:
        print(f"nsplab: config kind {config['experiment']['kind']!r} does not match "
              f"subcommand {args.kind!r}", file=sys.stderr)
        return 2
    out = os.environ.get("NSPLAB_OUT") or args.out
    manifest, status = run_experiment(config, out, args.seed, args.threads)
    if manifest.failure:
        print(f"nsplab: {manifest.status}: {manifest.failure}", file=sys.stderr)
    print(f"nsplab: run {manifest.run_id} {manifest.status} -> {Path(out or config['output']['directory'])}")
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``sasa {run,sweep,variance,pflug,selftest}``.

Exit status is 0 on success, 1 for configuration errors and 2 when a run
hits a non-finite value.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from sasa.errors import NumericalError
from sasa.harness.config import ConfigError, build, coerce, load_config, normalize_key
from sasa.harness.experiments import SWEEP_AXES, run_sweep, run_variance_experiment
from sasa.harness.runner import (
    OPTIMIZERS,
    TESTS,
    AdamConfig,
    RunAborted,
    SasaConfig,
    run_baseline,
    run_sasa,
    sgm_schedule,
)
from sasa.harness.traces import TraceWriter, write_summary, write_trace
from sasa.inference import ESTIMATORS

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# (flag, settings key, type, help); every default is None so that unset
# flags fall through to the config file and then to the dataclass default
_COMMON = [
    ("--alpha0", "alpha0", float, "initial learning rate"),
    ("--beta", "beta", float, "momentum"),
    ("--delta", "delta", float, "equivalence tolerance"),
    ("--gamma", "gamma", float, "significance level"),
    ("--zeta", "zeta", float, "drop factor"),
    ("--period", "period", int, "test period M in iterations (default 1000, or one epoch for logreg)"),
    ("--max-iters", "max_iterations", int, "iteration budget"),
    ("--seed", "seed", int, "RNG seed for the run"),
    ("--pairing", "pairing", str, "statistic pairing: next or current"),
    ("--loss-every", "loss_every", int, "loss row cadence"),
    ("--batch-size", "batch_size", int, "logreg minibatch size (default 1)"),
    ("--weight-decay", "weight_decay", float, "logreg L2 coefficient (default 5e-4)"),
    ("--dim", "dim", int, "problem dimension (default 100 quadratic, 20 logreg)"),
    ("--noise-var", "noise_var", float, "quadratic noise variance (default 1)"),
    ("--separation", "separation", float, "logreg cluster separation (default 2)"),
    ("--n-samples", "n_samples", int, "logreg dataset size (default 1000)"),
    ("--data-seed", "data_seed", int, "logreg dataset seed (default 0)"),
]
_CHOICES = [
    ("--estimator", "estimator", ESTIMATORS),
    ("--test", "test", TESTS),
    ("--problem", "problem", ("quadratic", "logreg")),
]
_PROBLEM_DEFAULTS = {"problem": "quadratic", "batch_size": 1, "weight_decay": 5e-4, "noise_var": 1.0,
                     "separation": 2.0, "n_samples": 1000, "data_seed": 0}
_SETTING_TYPES = {key: kind for _, key, kind, _ in _COMMON}
_SETTING_TYPES.update({key: str for _, key, _ in _CHOICES})
_SETTING_TYPES.update(optimizer=str, poly_b=float, poly_c=float, cut_every=int, axis=str, values=str,
                      seeds=str, horizon=int, checkpoints=int)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key=value file; flags override it")
    p.add_argument("--out", type=Path, help="output directory for CSV files")
    for flag, key, kind, text in _COMMON:
        p.add_argument(flag, dest=key, type=kind, default=None, help=text)
    for flag, key, choices in _CHOICES:
        p.add_argument(flag, dest=key, choices=choices, default=None)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sasa", description="Statistical adaptive stochastic approximation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="single optimizer run")
    _add_common(run)
    run.add_argument("--optimizer", choices=OPTIMIZERS, default=None)
    run.add_argument("--poly-b", dest="poly_b", type=float, default=None, help="SGM-poly offset b")
    run.add_argument("--poly-c", dest="poly_c", type=float, default=None, help="SGM-poly exponent c")
    run.add_argument("--cut-every", dest="cut_every", type=int, default=None, help="SGM-hand cut period")

    sweep = sub.add_parser("sweep", help="one-axis sensitivity sweep")
    _add_common(sweep)
    sweep.add_argument("--axis", choices=SWEEP_AXES, default=None)
    sweep.add_argument("--values", default=None, help="comma-separated values")

    var = sub.add_parser("variance", help="replicated first-drop comparison of the det and markov tests")
    _add_common(var)
    var.add_argument("--seeds", default=None, help="comma-separated seeds (default 0,1,2,3,4)")

    pfl = sub.add_parser("pflug", help="Yaida vs Pflug condition comparison at fixed step")
    _add_common(pfl)
    pfl.add_argument("--horizon", type=int, default=None)
    pfl.add_argument("--checkpoints", type=int, default=None)

    sub.add_parser("selftest", help="run the estimator and quantile oracles")
    return parser


def _settings(args) -> dict:
    """File values first, then explicit flags on top."""
    merged: dict = {}
    if getattr(args, "config", None) is not None:
        raw = load_config(args.config, known=set(_SETTING_TYPES) | set(SasaConfig.field_names()))
        merged.update({k: coerce(v, _SETTING_TYPES.get(k, str)) for k, v in raw.items()
                       if k not in SasaConfig.field_names()})
        merged.update({k: v for k, v in raw.items() if k in SasaConfig.field_names()})
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "out", "command"):
            merged[normalize_key(key)] = value
    return merged


def build_problem(s: dict):
    from sasa.problems import LogRegProblem, noisy_quadratic, synth_logreg_data

    kind = s.get("problem", _PROBLEM_DEFAULTS["problem"])
    get = lambda k: s.get(k, _PROBLEM_DEFAULTS.get(k))  # noqa: E731
    try:
        if kind == "quadratic":
            return noisy_quadratic(n=int(get("dim") or 100), noise_var=float(get("noise_var")))
        if kind == "logreg":
            data = synth_logreg_data(int(get("n_samples")), int(get("dim") or 20),
                                     float(get("separation")), int(get("data_seed")))
            return LogRegProblem(data, weight_decay=float(get("weight_decay")),
                                 batch_size=int(get("batch_size")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown problem {kind!r}")


def _sasa_config(s: dict, problem) -> SasaConfig:
    s = dict(s)
    if "period" not in s and hasattr(problem, "epoch_iters"):
        s["period"] = problem.epoch_iters
    return build(SasaConfig, s)


def _parse_list(text: str, kind, name: str) -> list:
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name} {text!r}") from exc


def _out_dir(args) -> Path | None:
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _trace_sink(out: Path | None, name: str):
    return TraceWriter(out / name) if out is not None else None


def _report(trace) -> None:
    drops = ",".join(map(str, trace.drop_iters)) or "none"
    print(f"{trace.label} seed={trace.seed} drops={drops} final_loss={trace.final_loss:.6g}")


def cmd_run(args, s) -> int:
    problem = build_problem(s)
    cfg = _sasa_config(s, problem)
    optimizer = s.get("optimizer", "sasa")
    if optimizer not in OPTIMIZERS:
        raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
    params = None if optimizer == "sasa" else _baseline_params(optimizer, s, cfg)
    out = _out_dir(args)
    sink = _trace_sink(out, f"trace_{optimizer}.csv")
    try:
        if optimizer == "sasa":
            trace = run_sasa(problem, cfg, label="sasa", on_row=sink)
        else:
            trace = run_baseline(problem, optimizer, params, max_iterations=cfg.max_iterations,
                                 period=cfg.period, seed=cfg.seed, delta=cfg.delta, gamma=cfg.gamma,
                                 estimator=cfg.estimator, loss_every=cfg.loss_every, on_row=sink)
    finally:
        if sink is not None:
            sink.close()
    _report(trace)
    if out is not None:
        write_summary([trace], out / f"summary_{optimizer}.csv")
    return EXIT_OK


def _baseline_params(optimizer: str, s: dict, cfg: SasaConfig) -> dict:
    if optimizer == "adam":
        params = {"alpha0": float(s["alpha0"])} if "alpha0" in s else {}
        build(AdamConfig, params)  # validate before running
        return params
    params = {"beta": cfg.beta}
    if optimizer == "sgm-const":
        params["alpha"] = cfg.alpha0
    elif optimizer == "sgm-poly":
        params.update(a=cfg.alpha0, b=float(s.get("poly_b", 1.0)), c=float(s.get("poly_c", 0.5)))
    elif optimizer == "sgm-hand":
        every = s.get("cut_every", max(1, cfg.max_iterations // 3))
        params.update(alpha0=cfg.alpha0, zeta=cfg.zeta, every=int(every))
    try:
        sgm_schedule(optimizer, params)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return params


def cmd_sweep(args, s) -> int:
    if "axis" not in s or "values" not in s:
        raise ConfigError("sweep needs --axis and --values")
    problem = build_problem(s)
    cfg = _sasa_config(s, problem)
    axis = s["axis"]
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {SWEEP_AXES}")
    values = _parse_list(str(s["values"]), float, "values")
    if not values:
        raise ConfigError("sweep needs at least one value")
    for v in values:
        build(SasaConfig, {**s, "period": cfg.period, axis: v})  # reject bad values before any run
    results = run_sweep(problem, cfg, axis, values)
    out = _out_dir(args)
    for value, trace in results:
        _report(trace)
        if out is not None:
            write_trace(trace, out / f"trace_{axis}_{value:g}.csv")
    if out is not None:
        write_summary([t for _, t in results], out / f"summary_{s['axis']}.csv")
    return EXIT_OK


def cmd_variance(args, s) -> int:
    problem = build_problem(s)
    cfg = _sasa_config(s, problem)
    seeds = _parse_list(str(s.get("seeds", "0,1,2,3,4")), int, "seeds")
    if not seeds:
        raise ConfigError("need at least one seed")
    out = _out_dir(args)
    for test in ("det", "markov"):
        res = run_variance_experiment(problem, test, cfg.period, cfg.delta, cfg.gamma, seeds, base=cfg)
        flag = " (degenerate: single seed)" if res.degenerate else ""
        print(f"{test}: first drops {res.first_drops} std {res.std_first_drop:.1f} "
              f"censored {res.censored}{flag}")
        if out is not None:
            write_summary(res.traces, out / f"summary_variance_{test}.csv")
    return EXIT_OK


def cmd_pflug(args, s) -> int:
    from sasa.pflug import ConditionRow, compare_conditions

    if "problem" not in s:
        s = {**s, "problem": "logreg"}
    problem = build_problem(s)
    cfg = _sasa_config(s, problem)
    horizon = int(s.get("horizon", 20_000))
    n_check = int(s.get("checkpoints", 20))
    if horizon < 0 or n_check < 1:
        raise ConfigError("horizon must be >= 0 and checkpoints >= 1")
    rows = compare_conditions(problem, cfg.alpha0, cfg.beta, horizon, seed=cfg.seed, n_checkpoints=n_check)
    for r in rows:
        if not (math.isfinite(r.zbar) and math.isfinite(r.vbar)):
            raise NumericalError(f"non-finite statistics at iteration {r.iter}")
    if rows:
        last = rows[-1]
        print(f"iter={last.iter} yaida_ratio={last.yaida_ratio:.4g} "
              f"pflug_relative_error={last.pflug_relative_error:.4g}")
    out = _out_dir(args)
    if out is not None:
        with open(out / "conditions.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(ConditionRow._fields)
            w.writerows(rows)
    return EXIT_OK


def cmd_selftest(args, s) -> int:
    from sasa.selftest import run_selftest

    failures = run_selftest(print)
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


_COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "variance": cmd_variance, "pflug": cmd_pflug,
             "selftest": cmd_selftest}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        s = _settings(args) if args.command != "selftest" else {}
        return _COMMANDS[args.command](args, s)
    except ConfigError as exc:
        print(f"sasa: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunAborted as exc:
        print(f"sasa: {exc}", file=sys.stderr)
        if isinstance(exc.__cause__, (NumericalError, FloatingPointError)):
            return EXIT_NUMERIC
        raise
    except NumericalError as exc:
        print(f"sasa: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands: synth (generate model + samples), reduce (PCA / random
projection of a CSV), fit (fit one estimator), evaluate (score a fitted
density), experiment (the full cross-validated comparison).

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

import argparse
import dataclasses
import os
import sys

from . import models
from .decomp import FitOptions, fit_prob_tensor
from .experiment import ExperimentConfig, run_experiment
from .fileio import (
    DataError,
    load_csv,
    parse_keyvalue,
    read_density,
    write_csv,
    write_density,
    write_tsv,
)
from .histogram import empirical_l2_risk, histogram_from_data, u_map
from .reduce import apply_unit_cube, fit_unit_cube, pca_reduce, random_reduce


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="lrhist", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic model and samples")
    p.add_argument("--model", choices=("multiview", "tucker"), default="tucker")
    p.add_argument("--dims", type=int, default=3)
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--marginal-bins", type=int, default=8)
    p.add_argument("--spec", help="existing spec file to sample from")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-spec", help="where to write the generated spec")

    p = sub.add_parser("reduce", help="dimensionality-Reduce a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("pca", "random"), required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--no-rescale", action="store_true",
                   help="skip unit-cube scaling of the reduced data")

    p = sub.add_parser("fit", help="fit one estimator on unit-cube data")
    p.add_argument("--input", required=True)
    p.add_argument("--estimator", choices=("standard", "tucker", "cp"),
                   required=True)
    p.add_argument("--bins", type=int, required=True)
    p.add_argument("--components", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=FitOptions.max_iters)
    p.add_argument("--rel-tol", type=float, default=FitOptions.rel_tol)
    p.add_argument("--restarts", type=int, default=FitOptions.restarts)
    p.add_argument("--output", required=True)

    p = sub.add_parser("evaluate", help="empirical L2 risk of a fitted density")
    p.add_argument("--density", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--truth-spec",
                   help="model spec for an additional exact L1 error")

    p = sub.add_parser("experiment", help="cross-validated comparison")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--data")
    p.add_argument("--synth-spec")
    p.add_argument("--seed", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="directory for runs.tsv and report.tsv")
    return parser


_CONFIG_KEYS = {
    "data_csv": str,
    "synth_spec": str,
    "synth_n_total": int,
    "reduce_method": str,
    "reduce_dim": int,
    "rescale": str,
    "n_train": int,
    "n_cv_validation": int,
    "cv_folds": int,
    "repetitions": int,
    "b_max": int,
    "k_max": int,
    "estimators": str,
    "fit_max_iters": int,
    "fit_rel_tol": float,
    "fit_restarts": int,
    "fit_epsilon_guard": float,
    "cv_fit_max_iters": int,
    "cv_fit_rel_tol": float,
    "cv_fit_restarts": int,
    "cv_fit_epsilon_guard": float,
    "seed": int,
    "jobs": int,
}


def _config_from_entries(entries, base_dir=""):
    unknown = set(entries) - set(_CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    parsed = {}
    for key, raw in entries.items():
        try:
            parsed[key] = _CONFIG_KEYS[key](raw)
        except ValueError:
            raise UsageError(f"config key {key!r}: bad value {raw!r}") from None
    kwargs = {}
    fit_kwargs = {}
    cv_fit_kwargs = {}
    for key, value in parsed.items():
        if key == "data_csv":
            kwargs["csv_path"] = _join(base_dir, value)
        elif key == "synth_spec":
            kwargs["model_spec"] = _join(base_dir, value)
        elif key == "estimators":
            kwargs["estimators"] = tuple(
                e.strip() for e in value.split(",") if e.strip()
            )
        elif key.startswith("cv_fit_"):
            cv_fit_kwargs[key[len("cv_fit_"):]] = value
        elif key.startswith("fit_"):
            fit_kwargs[key[len("fit_"):]] = value
        else:
            kwargs[key] = value
    if fit_kwargs:
        kwargs["fit_options"] = FitOptions(**fit_kwargs)
    if cv_fit_kwargs:
        base = ExperimentConfig.__dataclass_fields__["cv_fit_options"].default_factory()
        kwargs["cv_fit_options"] = dataclasses.replace(base, **cv_fit_kwargs)
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _join(base, path):
    if os.path.isabs(path) or not base:
        return path
    return os.path.join(base, path)


def _cmd_synth(args):
    out_spec = args.out_spec
    if args.spec:
        spec = models.read_spec(args.spec)
    else:
        if args.model == "multiview":
            spec = models.random_multiview_spec(
                args.dims, args.components, args.marginal_bins, args.seed
            )
        else:
            spec = models.random_tucker_spec(
                args.dims, args.components, args.marginal_bins, args.seed
            )
        # keep the generated model next to the samples so exact errors can
        # be evaluated later
        if out_spec is None:
            out_spec = args.out_csv + ".spec"
    if args.n < 1:
        raise UsageError("--n must be positive")
    sampler = (
        models.sample_multiview
        if isinstance(spec, models.MultiViewSpec)
        else models.sample_tucker
    )
    X = sampler(spec, args.n, args.seed)
    write_csv(args.out_csv, X)
    if out_spec:
        models.write_spec(spec, out_spec)
        print(f"wrote {args.n} samples to {args.out_csv} (model: {out_spec})")
    else:
        print(f"wrote {args.n} samples to {args.out_csv}")
    return 0


def _cmd_reduce(args):
    X = load_csv(args.input)
    if args.method == "pca":
        Xr, _ = pca_reduce(X, args.dim)
    else:
        Xr, _ = random_reduce(X, args.dim, args.seed)
    if not args.no_rescale:
        Xr = apply_unit_cube(Xr, fit_unit_cube(Xr))
    write_csv(args.output, Xr)
    print(f"wrote reduced data ({Xr.shape[0]} x {Xr.shape[1]}) to {args.output}")
    return 0


def _cmd_fit(args):
    X = load_csv(args.input)
    h = histogram_from_data(X, args.bins)
    if args.estimator != "standard":
        opts = FitOptions(
            max_iters=args.max_iters, rel_tol=args.rel_tol,
            restarts=args.restarts, seed=args.seed,
        )
        t = fit_prob_tensor(h.weights, args.components, args.estimator, opts)
        h = u_map(t)
    write_density(args.output, h)
    print(f"wrote fitted density to {args.output}")
    return 0


def _cmd_evaluate(args):
    h = read_density(args.density)
    X = load_csv(args.data)
    risk = empirical_l2_risk(h, X)
    print(f"empirical_l2_risk = {risk:.6f}")
    if args.truth_spec:
        spec = models.read_spec(args.truth_spec)
        err = models.exact_l1_error(spec, h)
        print(f"exact_l1_error = {err:.6f}")
    return 0


def _format_report(report):
    header = ("estimator", "risk", "bins", "components", "p-value")
    rows = []
    for s in report.summaries:
        rows.append((
            s.estimator,
            f"{s.mean_risk:.3f} ± {s.std_risk:.3f}",
            f"{s.mean_b:.3f} ± {s.std_b:.3f}",
            "-" if s.estimator == "standard"
            else f"{s.mean_k:.3f} ± {s.std_k:.3f}",
            "-" if s.p_value is None else f"{s.p_value:.2e}",
        ))
    widths = [
        max(len(header[c]), *(len(r[c]) for r in rows))
        for c in range(len(header))
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)


def _write_report_files(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    write_tsv(
        os.path.join(out_dir, "runs.tsv"),
        ("repetition", "estimator", "risk", "b", "k"),
        [(r.repetition, r.estimator, r.risk, r.b, r.k) for r in report.runs],
    )
    write_tsv(
        os.path.join(out_dir, "report.tsv"),
        ("estimator", "mean_risk", "std_risk", "mean_b", "std_b",
         "mean_k", "std_k", "p_value_vs_standard"),
        [
            (s.estimator, s.mean_risk, s.std_risk, s.mean_b, s.std_b,
             s.mean_k, s.std_k, "" if s.p_value is None else s.p_value)
            for s in report.summaries
        ],
    )


def _cmd_experiment(args):
    if args.config:
        entries = parse_keyvalue(args.config)
        config = _config_from_entries(
            entries, base_dir=os.path.dirname(args.config)
        )
    else:
        config = None
    overrides = {}
    if args.data is not None:
        overrides["csv_path"] = args.data
        overrides["model_spec"] = None
    if args.synth_spec is not None:
        overrides["model_spec"] = args.synth_spec
        overrides["csv_path"] = None
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.repetitions is not None:
        overrides["repetitions"] = args.repetitions
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    try:
        if config is None:
            config = ExperimentConfig(**overrides)
        elif overrides:
            config = dataclasses.replace(config, **overrides)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    report = run_experiment(config)
    print(_format_report(report))
    if args.out:
        _write_report_files(report, args.out)
        print(f"wrote runs.tsv and report.tsv to {args.out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "reduce": _cmd_reduce,
    "fit": _cmd_fit,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

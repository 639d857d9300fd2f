"""Command-line interface: generate | train | predict | analyze | benchmark.

Flags override config-file values, which override built-in defaults; the
effective configuration (with its hash and the package version) is echoed
into every report.  Exit codes: 0 success, 1 numerical failure, 2 usage or
I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .analysis import component_report, component_value
from .data import (
    Dataset,
    ParseError,
    ScalingError,
    SplitSpec,
    fit_scaler,
    identity_scaler,
    load_csv,
    load_table,
    pearson_r,
    rmse,
    save_csv,
    split,
    synth_generate,
)
from .gpr import TrainingError, predict_mean, predict_variance, train, train_rmse
from .hdmr import random_amplitude_spec, spec_from_term_list, uniform_spec
from .hyperopt import OptimizationError, OptimizationSpec, optimize, write_trace_csv
from .kernels import FAMILIES, BaseKernel
from .model_io import ModelFileError, load_model, save_model

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    """Invalid or contradictory command configuration."""


_DEFAULTS = {
    "generate": {
        "family": "additive-1d",
        "dim": 4,
        "size": 500,
        "noise": 0.0,
        "seed": 0,
        "with_truth": False,
        "coupling": 0.8,
        "active": None,
        "gp_length": 0.5,
        "out": None,
    },
    "train": {
        "data": None,
        "model": None,
        "d": None,
        "terms_file": None,
        "kernel": "se",
        "length": 1.0,
        "delta": 1e-6,
        "scaling": "zscore",
        "amplitudes": "uniform",
        "seed": 0,
        "optimize": "none",
        "opt_delta": False,
        "budget": 200,
        "restarts": 1,
        "bounds": "1e-2:1e2",
        "delta_bounds": "1e-8:1e-1",
        "trace": None,
        "max_m": 15000,
    },
    "predict": {"model": None, "data": None, "out": None, "seed": 0},
    "analyze": {
        "model": None,
        "out": None,
        "grid_component": None,
        "grid_res": 50,
        "grid_out": None,
        "seed": 0,
    },
    "benchmark": {
        "family": None,
        "data": None,
        "dim": 6,
        "noise": 0.0,
        "coupling": 0.8,
        "active": None,
        "gp_length": 0.5,
        "kernel": "se",
        "length": 1.0,
        "delta": 1e-6,
        "scaling": "zscore",
        "d_values": None,
        "train_sizes": None,
        "test_size": 1000,
        "repeats": 1,
        "seed": 0,
        "out": None,
        "timing": False,
        "max_m": 15000,
    },
}


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _parse_bounds(text: str) -> tuple[float, float]:
    try:
        lo_text, hi_text = text.split(":")
        lo, hi = float(lo_text), float(hi_text)
    except ValueError:
        raise ConfigError(f"bounds must look like 'lo:hi', got {text!r}") from None
    if not 0.0 < lo < hi:
        raise ConfigError(f"bounds must satisfy 0 < lo < hi, got {text!r}")
    return lo, hi


def _parse_int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdmrgp",
        description="Fit multivariate functions with additive-subset-kernel GP regression.",
    )
    parser.add_argument("--version", action="version", version=f"hdmrgp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON config file; flags override its values")
        return p

    p = cmd("generate", "write a synthetic dataset as CSV")
    p.add_argument("--family", choices=("additive-1d", "coupled-2d", "full-d", "gp-sample"))
    p.add_argument("--dim", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--with-truth", action="store_true", dest="with_truth")
    p.add_argument("--coupling", type=float, help="full-d product coupling strength")
    p.add_argument("--active", help="additive-1d: comma list of contributing coordinates")
    p.add_argument("--gp-length", type=float, dest="gp_length", help="gp-sample length scale")
    p.add_argument("--out", help="output CSV path")

    p = cmd("train", "fit a model and write a model file")
    p.add_argument("--data", help="training CSV (last column is the target)")
    p.add_argument("--model", help="output model file (NPZ)")
    p.add_argument("--d", type=int, help="subset size; one kernel term per size-d subset")
    p.add_argument("--terms-file", dest="terms_file", help="JSON term list (overrides --d)")
    p.add_argument("--kernel", choices=FAMILIES)
    p.add_argument("--length", type=float, help="shared length scale (scaled coordinates)")
    p.add_argument("--delta", type=float, help="diagonal jitter / noise magnitude")
    p.add_argument("--scaling", choices=("zscore", "minmax", "none"))
    p.add_argument("--amplitudes", choices=("uniform", "random"))
    p.add_argument("--seed", type=int)
    p.add_argument("--optimize", choices=("none", "shared", "per-term"))
    p.add_argument("--opt-delta", action="store_true", dest="opt_delta")
    p.add_argument("--budget", type=int, help="max likelihood evaluations")
    p.add_argument("--restarts", type=int)
    p.add_argument("--bounds", help="length-scale search bounds, lo:hi")
    p.add_argument("--delta-bounds", dest="delta_bounds", help="delta search bounds, lo:hi")
    p.add_argument("--trace", help="write the optimizer trace CSV here")
    p.add_argument("--max-m", dest="max_m", type=int, help="refuse larger training sets")

    p = cmd("predict", "evaluate a model on a query CSV")
    p.add_argument("--model")
    p.add_argument("--data", help="query CSV: D feature columns, optionally a truth column")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--seed", type=int)

    p = cmd("analyze", "rank the additive components of a model")
    p.add_argument("--model")
    p.add_argument("--out", help="component report CSV path")
    p.add_argument("--grid-component", dest="grid_component", help="subset indices, e.g. '0' or '0,2'")
    p.add_argument("--grid-res", dest="grid_res", type=int)
    p.add_argument("--grid-out", dest="grid_out", help="component curve CSV path")
    p.add_argument("--seed", type=int)

    p = cmd("benchmark", "sweep subset size and training size, reporting RMSE ranges")
    p.add_argument("--family", choices=("additive-1d", "coupled-2d", "full-d", "gp-sample"))
    p.add_argument("--data", help="dataset CSV to sweep over (instead of a generator)")
    p.add_argument("--dim", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--coupling", type=float)
    p.add_argument("--active", help="additive-1d: comma list of contributing coordinates")
    p.add_argument("--gp-length", type=float, dest="gp_length", help="gp-sample length scale")
    p.add_argument("--kernel", choices=FAMILIES)
    p.add_argument("--length", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--scaling", choices=("zscore", "minmax", "none"))
    p.add_argument("--d-values", dest="d_values", help="comma list of subset sizes")
    p.add_argument("--train-sizes", dest="train_sizes", help="comma list of training sizes")
    p.add_argument("--test-size", dest="test_size", type=int)
    p.add_argument("--repeats", type=int, help="independent splits per cell")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="benchmark CSV path")
    p.add_argument("--timing", action="store_true", help="record wall time in the CSV")
    p.add_argument("--max-m", dest="max_m", type=int)

    return parser


def _effective_config(args: argparse.Namespace) -> dict:
    command = args.command
    given = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    config = dict(_DEFAULTS[command])
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path) as handle:
                file_values = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path}: invalid JSON ({exc})") from None
        if not isinstance(file_values, dict):
            raise ConfigError(f"config file {config_path}: expected a JSON object")
        unknown = sorted(set(file_values) - set(config))
        if unknown:
            raise ConfigError(f"config file {config_path}: unknown keys {unknown}")
        config.update(file_values)
    config.update(given)
    return config


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def _print_header(command: str, config: dict) -> None:
    print(f"hdmrgp {command} (version {__version__})")
    print(f"  config: {json.dumps(config, sort_keys=True, default=str)}")
    print(f"  config_hash: {_config_hash(config)}  seed: {config.get('seed', 0)}")


def _require(config: dict, *keys: str) -> None:
    missing = [k for k in keys if config.get(k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ConfigError(f"missing required option(s): {flags}")


def _generator_params(config: dict) -> dict:
    params = {}
    if config["family"] == "full-d":
        params["coupling"] = float(config["coupling"])
    if config["family"] == "additive-1d" and config.get("active") is not None:
        params["active"] = _parse_int_list(config["active"])
    if config["family"] == "gp-sample":
        params["length"] = float(config["gp_length"])
    return params


def cmd_generate(config: dict) -> int:
    _require(config, "out")
    _print_header("generate", config)
    dataset = synth_generate(
        config["family"],
        int(config["dim"]),
        int(config["size"]),
        noise=float(config["noise"]),
        seed=int(config["seed"]),
        **_generator_params(config),
    )
    save_csv(dataset, config["out"], with_truth=bool(config["with_truth"]))
    print(f"  wrote {dataset.n_samples} rows x {dataset.n_features} features -> {config['out']}")
    return EXIT_OK


def _build_spec_from_config(config: dict, dim: int):
    if config.get("terms_file") is not None and config.get("d") is not None:
        raise ConfigError("--d and --terms-file are contradictory; give exactly one")
    if config.get("terms_file") is not None:
        with open(config["terms_file"]) as handle:
            entries = json.load(handle)
        return spec_from_term_list(dim, entries)
    if config.get("d") is None:
        raise ConfigError("one of --d or --terms-file is required")
    base = BaseKernel(config["kernel"], float(config["length"]))
    if config["amplitudes"] == "random":
        return random_amplitude_spec(dim, int(config["d"]), base, seed=int(config["seed"]))
    return uniform_spec(dim, int(config["d"]), base)


def _check_memory_guard(m: int, max_m: int) -> None:
    if m > max_m:
        gib = m * m * 8 / 2**30
        raise ConfigError(
            f"training size {m} exceeds the guard of {max_m} "
            f"(Gram matrix would need {gib:.1f} GiB); raise --max-m to override"
        )


def _fit(config: dict, xs, fs, scaler, spec):
    """Train directly or through the likelihood search, per the config."""
    if config["optimize"] == "none":
        return train(spec, xs, fs, float(config["delta"]), scaler), None
    opt = OptimizationSpec(
        mode=config["optimize"],
        optimize_delta=bool(config["opt_delta"]),
        length_bounds=_parse_bounds(config["bounds"]),
        delta_bounds=_parse_bounds(config["delta_bounds"]),
        budget=int(config["budget"]),
        restarts=int(config["restarts"]),
        seed=int(config["seed"]),
    )
    result = optimize(spec, xs, fs, float(config["delta"]), opt, scaler)
    return result.model, result


def cmd_train(config: dict) -> int:
    _require(config, "data", "model")
    _print_header("train", config)
    started = time.perf_counter()
    dataset = load_csv(config["data"])
    _check_memory_guard(dataset.n_samples, int(config["max_m"]))
    if config["scaling"] == "none":
        scaler = identity_scaler(dataset.n_features)
    else:
        scaler = fit_scaler(dataset, config["scaling"])
    xs = scaler.transform_x(dataset.X)
    fs = scaler.transform_y(dataset.y)
    spec = _build_spec_from_config(config, dataset.n_features)
    model, opt_result = _fit(config, xs, fs, scaler, spec)
    if opt_result is not None and config.get("trace"):
        n_lengths = len(spec.terms) if config["optimize"] == "per-term" else 1
        write_trace_csv(opt_result, config["trace"], n_lengths=n_lengths)
    save_model(model, config["model"])
    elapsed = time.perf_counter() - started

    orders = sorted({len(t.subset) for t in model.spec.terms})
    lengths = sorted({t.kernel.length for t in model.spec.terms})
    length_text = _fmt(lengths[0]) if len(lengths) == 1 else f"per-term ({len(lengths)} distinct)"
    print(f"  M={dataset.n_samples}  D={dataset.n_features}  "
          f"d={orders[0] if len(orders) == 1 else orders}  N={model.spec.n_terms}")
    print(f"  delta={_fmt(model.delta)}  length={length_text}  scaling={config['scaling']}")
    if opt_result is not None:
        print(f"  optimized log_ml={_fmt(opt_result.log_ml)} "
              f"after {opt_result.n_evaluations} evaluations")
    print(f"  log_ml={_fmt(model.log_ml)}")
    print(f"  train_rmse={_fmt(train_rmse(model))}")
    print(f"  wall_time={elapsed:.2f} s")
    print(f"  model -> {config['model']}")
    return EXIT_OK


def cmd_predict(config: dict) -> int:
    _require(config, "model", "data", "out")
    _print_header("predict", config)
    model = load_model(config["model"])
    table, names = load_table(config["data"])
    dim = model.spec.dim
    if table.shape[1] == dim:
        features, truth = table, None
    elif table.shape[1] == dim + 1:
        features, truth = table[:, :dim], table[:, dim]
    else:
        raise ConfigError(
            f"query file has {table.shape[1]} columns; the model expects "
            f"{dim} features (plus an optional truth column)"
        )
    if not np.all(np.isfinite(features)):
        raise ConfigError("query file contains non-finite feature values")
    mean = predict_mean(model, features)
    variance = predict_variance(model, features)

    feature_names = names[:dim] if names else [f"x{j + 1}" for j in range(dim)]
    header = feature_names + ["mean", "variance"]
    columns = [features[:, j] for j in range(dim)] + [mean, variance]
    if truth is not None:
        header += ["truth", "residual"]
        columns += [truth, mean - truth]
    with open(config["out"], "w", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for i in range(features.shape[0]):
            handle.write(",".join(_fmt(col[i]) for col in columns) + "\n")

    factor = float(model.scaler.y_scale) ** 2
    print(f"  {features.shape[0]} predictions -> {config['out']}")
    print(f"  variance is in scaled-target units; multiply by {_fmt(factor)} for original units")
    if truth is not None:
        print(f"  test_rmse={_fmt(rmse(mean, truth))}")
        if truth.size >= 2:
            print(f"  pearson_r={_fmt(pearson_r(mean, truth))}")
    return EXIT_OK


def _subset_text(subset) -> str:
    return "+".join(str(i) for i in subset)


def cmd_analyze(config: dict) -> int:
    _require(config, "model")
    _print_header("analyze", config)
    model = load_model(config["model"])
    report = component_report(model)

    rows = [
        (rank + 1, _subset_text(e.subset), e.variance, e.share, e.length)
        for rank, e in enumerate(report.entries)
    ]
    print(f"  {'rank':>4}  {'subset':<12}  {'variance':>13}  {'share':>9}  {'length':>10}")
    for rank, subset, variance, share, length in rows:
        print(f"  {rank:>4}  {subset:<12}  {variance:>13.6e}  {share:>9.4f}  {length:>10.4g}")
    print(f"  total component variance: {_fmt(report.total_variance)}"
          + ("  [degenerate: constant fit, shares zeroed]" if report.degenerate else ""))
    print("  component values are in scaled-target units; "
          f"original units via y = value * {_fmt(model.scaler.y_scale)} + offset "
          f"{_fmt(model.scaler.y_offset)} (offset applies to the full sum only)")

    if config.get("out"):
        with open(config["out"], "w", newline="") as handle:
            handle.write("rank,subset,variance,share,length\n")
            for rank, subset, variance, share, length in rows:
                handle.write(f"{rank},{subset},{_fmt(variance)},{_fmt(share)},{_fmt(length)}\n")
        print(f"  report -> {config['out']}")

    if config.get("grid_component") is not None:
        _require(config, "grid_out")
        subset = tuple(_parse_int_list(config["grid_component"]))
        if len(subset) not in (1, 2):
            raise ConfigError("grid export supports 1- or 2-variable components only")
        res = int(config["grid_res"])
        if res < 2:
            raise ConfigError("grid resolution must be at least 2")
        x_orig = model.scaler.inverse_x(model.X)
        lows, highs = x_orig.min(axis=0), x_orig.max(axis=0)
        mid = 0.5 * (lows + highs)
        axes = [np.linspace(lows[i], highs[i], res) for i in subset]
        if len(subset) == 1:
            grid = axes[0][:, None]
        else:
            a, b = np.meshgrid(axes[0], axes[1], indexing="ij")
            grid = np.column_stack([a.ravel(), b.ravel()])
        queries = np.tile(mid, (grid.shape[0], 1))
        for k, i in enumerate(subset):
            queries[:, i] = grid[:, k]
        values = component_value(model, subset, queries)
        with open(config["grid_out"], "w", newline="") as handle:
            handle.write(",".join(f"x{i + 1}" for i in subset) + ",value\n")
            for r in range(grid.shape[0]):
                cells = [_fmt(grid[r, k]) for k in range(len(subset))] + [_fmt(values[r])]
                handle.write(",".join(cells) + "\n")
        print(f"  component {{{_subset_text(subset)}}} grid ({res} per axis) -> {config['grid_out']}")
    return EXIT_OK


def _benchmark_pool(config: dict) -> Dataset:
    if config.get("data") is not None and config.get("family") is not None:
        raise ConfigError("--data and --family are contradictory; give exactly one")
    if config.get("data") is not None:
        return load_csv(config["data"])
    if config.get("family") is None:
        raise ConfigError("one of --family or --data is required")
    d_max = max(_parse_int_list(config["train_sizes"]))
    pool_size = d_max + int(config["test_size"])
    params = _generator_params(config)
    return synth_generate(
        config["family"],
        int(config["dim"]),
        pool_size,
        noise=float(config["noise"]),
        seed=int(config["seed"]),
        **params,
    )


def cmd_benchmark(config: dict) -> int:
    _require(config, "d_values", "train_sizes", "out")
    _print_header("benchmark", config)
    d_values = _parse_int_list(config["d_values"])
    train_sizes = _parse_int_list(config["train_sizes"])
    repeats = int(config["repeats"])
    test_size = int(config["test_size"])
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    for m in train_sizes:
        _check_memory_guard(m, int(config["max_m"]))

    pool = _benchmark_pool(config)
    needed = max(train_sizes) + test_size
    if pool.n_samples < needed:
        raise ConfigError(
            f"pool has {pool.n_samples} rows but the largest cell needs {needed}"
        )
    for d in d_values:
        if not 1 <= d <= pool.n_features:
            raise ConfigError(f"subset size {d} invalid for {pool.n_features} features")

    master_seed = int(config["seed"])
    base = BaseKernel(config["kernel"], float(config["length"]))
    delta = float(config["delta"])
    timing = bool(config["timing"])
    results = []
    for d in d_values:
        spec_template = uniform_spec(pool.n_features, d, base)
        for m in train_sizes:
            for run in range(repeats):
                cell_seed = int(
                    np.random.SeedSequence([master_seed, d, m, run]).generate_state(1)[0]
                )
                train_set, test_set = split(pool, SplitSpec(m, test_size, seed=cell_seed))
                started = time.perf_counter()
                if config["scaling"] == "none":
                    scaler = identity_scaler(train_set.n_features)
                else:
                    scaler = fit_scaler(train_set, config["scaling"])
                model = train(
                    spec_template,
                    scaler.transform_x(train_set.X),
                    scaler.transform_y(train_set.y),
                    delta,
                    scaler,
                )
                pred = predict_mean(model, test_set.X)
                seconds = time.perf_counter() - started
                results.append(
                    {
                        "d": d,
                        "M": m,
                        "run": run,
                        "train_rmse": train_rmse(model),
                        "test_rmse": rmse(pred, test_set.y),
                        "pearson_r": pearson_r(pred, test_set.y),
                        "seconds": seconds if timing else 0.0,
                    }
                )

    with open(config["out"], "w", newline="") as handle:
        handle.write("d,M,run,train_rmse,test_rmse,pearson_r,seconds\n")
        for row in results:
            handle.write(
                f"{row['d']},{row['M']},{row['run']},{_fmt(row['train_rmse'])},"
                f"{_fmt(row['test_rmse'])},{_fmt(row['pearson_r'])},{_fmt(row['seconds'])}\n"
            )

    print(f"  {'d':>3}  {'M':>7}  {'test_rmse range':>33}")
    for d in d_values:
        for m in train_sizes:
            cell = [r["test_rmse"] for r in results if r["d"] == d and r["M"] == m]
            print(f"  {d:>3}  {m:>7}  [{min(cell):.6e}, {max(cell):.6e}]")
    print(f"  benchmark CSV -> {config['out']}")
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "predict": cmd_predict,
    "analyze": cmd_analyze,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _effective_config(args)
        return _COMMANDS[args.command](config)
    except (ConfigError, ParseError, ModelFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingError, OptimizationError, ScalingError, ValueError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

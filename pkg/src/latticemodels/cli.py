"""Command-line interface: simulation, fitting, Monte Carlo tables, diagnostics.

Subcommands write plain CSV and JSON artifacts into an output directory,
along with a manifest describing the run. Outputs carry no timestamps and
all randomness is derived from the base seed, so rerunning a command with
identical flags reproduces identical bytes. Replication r of a Monte Carlo
run draws from a seed derived from (base seed, r); the worker count only
changes wall time, never results.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .diagnostics import classify, format_report
from .distributions import bivariate_normal_cdf
from .lattice import (
    Dataset,
    IndexModel,
    LatticeSpec,
    dump_json,
    load_json,
    read_csv,
    write_csv,
)
from .metrics import (
    aggregate_metrics,
    evaluate,
    read_metrics_csv,
    write_metrics_csv,
    write_metrics_summary_csv,
)
from .parametric import FitOptions, ParamVector, fit
from .semiparametric import (
    GridInversionConfig,
    KernelConfig,
    SieveConfig,
    grid_inversion_fit,
    kernel_smoothing_fit,
    read_grid_json,
    sieve_mle_fit,
    write_grid_csv,
    write_grid_json,
)
from .simulation import BUILTIN_DGP_IDS, DgpSpec, builtin_dgp_spec, generate, replication_seed

__all__ = ["ConvergenceError", "DataError", "UsageError", "main"]

_ESTIMATORS = ("parametric", "grid-inversion", "kernel", "sieve")
_EVAL_LO, _EVAL_HI, _EVAL_NODES = -2.5, 2.5, 80


class UsageError(Exception):
    """Bad flags or flag combinations; exit code 1."""


class DataError(Exception):
    """Unreadable or schema-violating inputs; exit code 2."""


class ConvergenceError(Exception):
    """An optimizer failed to converge; exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _eval_axis() -> np.ndarray:
    return np.linspace(_EVAL_LO, _EVAL_HI, _EVAL_NODES)


def _ensure_out(out) -> Path:
    path = Path(out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_json_file(path) -> dict:
    try:
        return load_json(path)
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except ValueError as err:
        raise DataError(f"{path}: invalid JSON: {err}") from None


def _tuplize(value):
    if isinstance(value, list):
        return tuple(_tuplize(v) for v in value)
    return value


def _config_from_dict(cls, values: dict):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(
            f"unknown {cls.__name__} settings: {', '.join(unknown)}; "
            f"known: {', '.join(sorted(known))}"
        )
    try:
        return cls(**{k: _tuplize(v) for k, v in values.items()})
    except (TypeError, ValueError) as err:
        raise UsageError(f"bad {cls.__name__} settings: {err}") from None


def _resolve_spec(args) -> DgpSpec:
    if getattr(args, "dgp", None):
        try:
            return builtin_dgp_spec(args.dgp)
        except ValueError:
            raise UsageError(
                f"unknown DGP id {args.dgp!r}; choose from {', '.join(BUILTIN_DGP_IDS)}"
            ) from None
    if getattr(args, "config", None):
        raw = _load_json_file(args.config)
        try:
            return DgpSpec.from_dict(raw)
        except (KeyError, TypeError, ValueError) as err:
            raise DataError(f"{args.config}: bad DGP spec: {err}") from None
    raise UsageError("need --dgp <id> or --config <spec.json>")


def _read_application_csv(path, sidecar: dict) -> Dataset:
    """Generic CSV: y1..yD outcome columns plus named covariate columns.

    The sidecar maps covariate columns to dimensions:
    {"dimensions": {"1": ["age", "income"], "2": ["educ"]}}.
    """
    dim_map = sidecar.get("dimensions")
    if not isinstance(dim_map, dict) or not dim_map:
        raise DataError("sidecar needs a nonempty 'dimensions' mapping")
    try:
        dims = sorted(int(k) for k in dim_map)
    except ValueError as err:
        raise DataError(f"sidecar dimension keys must be integers: {err}") from None
    if dims != list(range(1, len(dims) + 1)):
        raise DataError(f"sidecar dimensions must be 1..D, got {dims}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    if not rows:
        raise DataError(f"{path}: no data rows")
    needed = [f"y{d}" for d in dims]
    for d in dims:
        for col in dim_map[str(d)]:
            needed.append(col)
    for col in needed:
        if col not in header:
            raise DataError(f"{path}: missing column {col!r} required by the sidecar")
    try:
        outcomes = np.array(
            [[int(row[f"y{d}"]) for d in dims] for row in rows], dtype=np.int64
        )
        covs = tuple(
            np.array([[float(row[c]) for c in dim_map[str(d)]] for row in rows])
            for d in dims
        )
    except ValueError as err:
        raise DataError(f"{path}: non-numeric cell: {err}") from None
    names = tuple(tuple(dim_map[str(d)]) for d in dims)
    try:
        return Dataset(outcomes, covs, names)
    except ValueError as err:
        raise DataError(f"{path}: {err}") from None


def _load_dataset(path, sidecar_path) -> Dataset:
    if not path:
        raise UsageError("--data <csv> is required")
    if sidecar_path:
        return _read_application_csv(path, _load_json_file(sidecar_path))
    try:
        return read_csv(path)
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except ValueError as err:
        raise DataError(f"{path}: {err}") from None


def _load_first_stage(path):
    """First-stage parameters: {"beta": [[...]], "thresholds": [[...]], "rho": r?}."""
    if not path:
        raise UsageError("this operation requires --first-stage <json>")
    raw = _load_json_file(path)
    try:
        model = IndexModel(_tuplize(raw["beta"]))
        lattice = LatticeSpec(_tuplize(raw["thresholds"]))
    except (KeyError, TypeError, ValueError) as err:
        raise DataError(f"{path}: bad first-stage parameters: {err}") from None
    rho = raw.get("rho")
    return model, lattice, (float(rho) if rho is not None else None)


def _category_counts(args, data: Dataset) -> tuple[int, ...]:
    spec_path = getattr(args, "spec", None)
    if spec_path:
        raw = _load_json_file(spec_path)
        body = raw.get("lattice", raw)
        try:
            return LatticeSpec.from_dict(body).category_counts
        except (KeyError, TypeError, ValueError) as err:
            raise DataError(f"{spec_path}: bad lattice spec: {err}") from None
    return tuple(int(data.outcomes[:, d].max()) for d in range(data.dims))


def _exclusive_from_sidecar(sidecar_path):
    if not sidecar_path:
        return None
    raw = _load_json_file(sidecar_path)
    excl = raw.get("exclusive")
    if excl is None:
        return None
    try:
        return {int(k): tuple(v) if isinstance(v, list) else (v,) for k, v in excl.items()}
    except (TypeError, ValueError) as err:
        raise DataError(f"{sidecar_path}: bad 'exclusive' mapping: {err}") from None


def _write_manifest(out: Path, command: str, parameters: dict, files, extra=None) -> None:
    body = {"command": command, "parameters": parameters, "files": sorted(files)}
    if extra:
        body.update(extra)
    dump_json(body, out / "manifest.json")


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args) -> int:
    spec = _resolve_spec(args)
    if args.n is None or args.n < 1:
        raise UsageError("simulate requires --n >= 1")
    out = _ensure_out(args.out)
    data = generate(spec, args.n, seed=replication_seed(args.seed, 0))
    write_csv(data, out / "dataset.csv")
    dump_json(spec.to_dict(), out / "spec.json")
    _write_manifest(
        out,
        "simulate",
        {"dgp": args.dgp or "config", "n": args.n, "seed": args.seed},
        ["dataset.csv", "spec.json"],
    )
    print(f"wrote {out / 'dataset.csv'} ({data.n} rows, {data.dims} dimensions)")
    return 0


# ---------------------------------------------------------------------------
# fit


def _write_coefficients(result, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "estimate", "se"])
        for name, est, se in result.se_table():
            w.writerow([name, repr(est), "" if np.isnan(se) else repr(se)])


def _fit_parametric(args, data, out: Path, cfg: dict):
    options = _config_from_dict(FitOptions, cfg)
    try:
        result = fit(data, m_counts=_category_counts(args, data), options=options)
    except ValueError as err:
        raise DataError(str(err)) from None
    dump_json(result.to_dict(), out / "fit.json")
    _write_coefficients(result, out / "coefficients.csv")
    files = ["fit.json", "coefficients.csv"]
    summary = f"loglik {result.loglik:.6f} after {result.iterations} iterations"
    return result.converged, result.message, files, summary


def _fit_cdf_two_step(args, data, out: Path, cfg: dict):
    model, lattice, rho = _load_first_stage(args.first_stage)
    try:
        data.validate_against(lattice)
    except ValueError as err:
        raise DataError(str(err)) from None
    axis = _eval_axis()
    if args.estimator == "grid-inversion":
        config = _config_from_dict(GridInversionConfig, cfg)
        res = grid_inversion_fit(data, lattice, model, config)
        grid, converged = res.grid, res.converged
        info = {
            "estimator": "grid-inversion",
            "converged": res.converged,
            "iterations": res.iterations,
            "residual": res.residual,
        }
        message = f"residual {res.residual:.6e} after {res.iterations} iterations"
    else:
        config = _config_from_dict(KernelConfig, cfg)
        grid = kernel_smoothing_fit(data, lattice, model, config, axis, axis)
        converged = True
        info = {
            "estimator": "kernel",
            "converged": True,
            "draws_per_obs": config.draws_per_obs,
        }
        message = f"pooled {data.n * config.draws_per_obs} draws"
    write_grid_csv(grid, out / "grid.csv")
    write_grid_json(grid, out / "grid.json")
    dump_json(info, out / "fit.json")
    files = ["fit.json", "grid.csv", "grid.json"]
    ref_rho = args.reference_rho if args.reference_rho is not None else rho
    if ref_rho is not None:
        report = evaluate(
            grid,
            lambda a, b: bivariate_normal_cdf(a, b, ref_rho),
            axis,
            axis,
            method=args.estimator,
        )
        dump_json(report.to_dict(), out / "metrics.json")
        files.append("metrics.json")
    return converged, message, files, message


def _fit_sieve(args, data, out: Path, cfg: dict):
    config = _config_from_dict(SieveConfig, cfg)
    counts = _category_counts(args, data)
    if len(counts) != 2:
        raise DataError("sieve fitting handles two-dimensional lattices")
    try:
        res = sieve_mle_fit(data, counts, config)
    except ValueError as err:
        raise DataError(str(err)) from None
    info = {
        "estimator": "sieve",
        "beta": [list(b) for b in res.beta],
        "thresholds": [list(t) for t in res.thresholds],
        "loglik": res.loglik,
        "loglik_initial": res.loglik_initial,
        "converged": res.converged,
        "iterations": res.iterations,
        "constraint_slack_min": res.constraint_slack_min,
        "message": res.message,
    }
    dump_json(info, out / "fit.json")
    write_grid_csv(res.grid, out / "grid.csv")
    write_grid_json(res.grid, out / "grid.json")
    files = ["fit.json", "grid.csv", "grid.json"]
    summary = f"loglik {res.loglik:.6f} after {res.iterations} iterations"
    return res.converged, res.message, files, summary


def _cmd_fit(args) -> int:
    out = _ensure_out(args.out)
    data = _load_dataset(args.data, args.sidecar)
    cfg = _load_json_file(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise UsageError(f"{args.config}: estimator config must be a JSON object")
    if args.estimator == "parametric":
        converged, message, files, summary = _fit_parametric(args, data, out, cfg)
    elif args.estimator in ("grid-inversion", "kernel"):
        converged, message, files, summary = _fit_cdf_two_step(args, data, out, cfg)
    else:
        converged, message, files, summary = _fit_sieve(args, data, out, cfg)
    _write_manifest(
        out,
        "fit",
        {"data": str(args.data), "estimator": args.estimator},
        files,
    )
    print(f"{args.estimator}: {summary}")
    if not converged:
        raise ConvergenceError(message or "optimizer did not converge")
    return 0


# ---------------------------------------------------------------------------
# montecarlo


def _truth_vector(spec: DgpSpec) -> ParamVector:
    return ParamVector(spec.model.beta, spec.lattice.thresholds, spec.errors.rho)


def _covariate_names(spec: DgpSpec) -> tuple[tuple[str, ...], ...]:
    return tuple(
        tuple(c.name for c in spec.dimension_covariates(d))
        for d in range(1, spec.lattice.dims + 1)
    )


def _param_replication(payload):
    """One parametric Monte Carlo replication; returns (r, estimates-or-None, error)."""
    dgp_id, n, base_seed, r, options = payload
    spec = builtin_dgp_spec(dgp_id)
    data = generate(spec, n, seed=replication_seed(base_seed, r))
    try:
        result = fit(
            data,
            m_counts=spec.lattice.category_counts,
            options=FitOptions(**options),
        )
    except Exception as err:  # recorded per replication; the run continues
        return r, None, False, f"{type(err).__name__}: {err}"
    values = [float(v) for v in result.estimate.pack_original()]
    return r, values, result.converged, None


def _derived_kernel_seed(base_seed: int, r: int, user_seed: int) -> int:
    return int(
        np.random.SeedSequence([int(base_seed), int(r), int(user_seed)]).generate_state(1)[0]
    )


def _cdf_replication(payload):
    """One two-step replication; returns (r, reports, failures)."""
    dgp_id, n, base_seed, r, estimators, configs = payload
    spec = builtin_dgp_spec(dgp_id)
    data = generate(spec, n, seed=replication_seed(base_seed, r))
    axis = _eval_axis()
    rho = spec.errors.rho
    reference = lambda a, b: bivariate_normal_cdf(a, b, rho)
    reports, failures = [], []
    for estimator in estimators:
        cfg = dict(configs[estimator])
        try:
            if estimator == "grid-inversion":
                config = _config_from_dict(GridInversionConfig, cfg)
                grid = grid_inversion_fit(data, spec.lattice, spec.model, config).grid
            elif estimator == "kernel":
                cfg["seed"] = _derived_kernel_seed(base_seed, r, cfg.get("seed", 0))
                config = _config_from_dict(KernelConfig, cfg)
                grid = kernel_smoothing_fit(
                    data, spec.lattice, spec.model, config, axis, axis
                )
            else:
                config = _config_from_dict(SieveConfig, cfg)
                grid = sieve_mle_fit(data, spec.lattice.category_counts, config).grid
            reports.append(
                evaluate(grid, reference, axis, axis, replicate=r, method=estimator)
            )
        except Exception as err:  # recorded per replication; the run continues
            failures.append((estimator, r, f"{type(err).__name__}: {err}"))
    return r, reports, failures


def _run_replications(worker, payloads, workers: int):
    if workers <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, payloads))


def _write_estimates_csv(path, names, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "converged"] + list(names))
        for r, values, converged in rows:
            w.writerow([r, int(converged)] + [repr(v) for v in values])


def _param_summary_rows(names, truths, estimate_rows):
    table = np.array([values for _, values, _ in estimate_rows], dtype=float)
    rows = []
    for i, (name, truth) in enumerate(zip(names, truths)):
        col = table[:, i] if table.size else np.empty(0)
        mean = float(col.mean()) if col.size else None
        sd = float(col.std(ddof=1)) if col.size > 1 else None
        rows.append({"parameter": name, "truth": truth, "mean": mean, "sd": sd})
    return rows


def _write_param_summary(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "truth", "mean", "sd"])
        for row in rows:
            w.writerow(
                [row["parameter"], _fmt(row["truth"]), _fmt(row["mean"]), _fmt(row["sd"])]
            )


def _default_estimators(dgp_id: str) -> list[str]:
    if dgp_id.startswith("param-design-"):
        return ["parametric"]
    return ["grid-inversion", "kernel"]


def _estimator_configs(cfg: dict, estimators) -> dict:
    if not cfg:
        return {e: {} for e in estimators}
    if set(cfg) <= set(_ESTIMATORS):
        return {e: dict(cfg.get(e, {})) for e in estimators}
    if len(estimators) == 1:
        return {estimators[0]: dict(cfg)}
    raise UsageError(
        "a config for multiple estimators must key settings by estimator name"
    )


def _cmd_montecarlo(args) -> int:
    if not args.dgp:
        raise UsageError("montecarlo requires --dgp <id>")
    spec = _resolve_spec(args)
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    n = args.n if args.n is not None else 1000
    if n < 1:
        raise UsageError("--n must be at least 1")
    out = _ensure_out(args.out)
    estimators = [args.estimator] if args.estimator else _default_estimators(args.dgp)
    if "parametric" in estimators and len(estimators) > 1:
        raise UsageError("parametric runs cannot be mixed with CDF estimators")
    cfg = _load_json_file(args.config) if args.config else {}
    configs = _estimator_configs(cfg, estimators)
    parameters = {
        "dgp": args.dgp,
        "n": n,
        "reps": args.reps,
        "seed": args.seed,
        "estimators": estimators,
    }

    if estimators == ["parametric"]:
        payloads = [
            (args.dgp, n, args.seed, r, configs["parametric"]) for r in range(args.reps)
        ]
        results = _run_replications(_param_replication, payloads, args.workers)
        results.sort(key=lambda item: item[0])
        truth = _truth_vector(spec)
        names = truth.names(_covariate_names(spec))
        truths = [float(v) for v in truth.pack_original()]
        good = [(r, vals, conv) for r, vals, conv, _ in results if vals is not None]
        failed = [[r, msg] for r, vals, _, msg in results if vals is None]
        _write_estimates_csv(out / "estimates.csv", names, good)
        _write_param_summary(out / "summary.csv", _param_summary_rows(names, truths, good))
        files = ["estimates.csv", "summary.csv"]
    else:
        payloads = [
            (args.dgp, n, args.seed, r, tuple(estimators), configs)
            for r in range(args.reps)
        ]
        results = _run_replications(_cdf_replication, payloads, args.workers)
        results.sort(key=lambda item: item[0])
        reports, failed = [], []
        for estimator in estimators:
            for _, reps, _ in results:
                reports.extend(rep for rep in reps if rep.method == estimator)
        for _, _, fails in results:
            failed.extend([est, r, msg] for est, r, msg in fails)
        write_metrics_csv(reports, out / "metrics.csv")
        write_metrics_summary_csv(aggregate_metrics(reports), out / "summary.csv")
        files = ["metrics.csv", "summary.csv"]

    _write_manifest(
        out,
        "montecarlo",
        parameters,
        files,
        extra={"failures": len(failed), "failed": failed},
    )
    print(
        f"montecarlo {args.dgp}: {args.reps} replications, "
        f"{len(failed)} recorded failures -> {out / 'summary.csv'}"
    )
    return 0


# ---------------------------------------------------------------------------
# diagnose


def _cmd_diagnose(args) -> int:
    out = _ensure_out(args.out)
    if args.dgp or args.config:
        spec = _resolve_spec(args)
        report = classify(spec)
        source = args.dgp or str(args.config)
    else:
        data = _load_dataset(args.data, args.sidecar)
        model, lattice, rho = _load_first_stage(args.first_stage)
        exclusive = _exclusive_from_sidecar(args.sidecar)
        try:
            report = classify(
                data, model=model, lattice=lattice, exclusive=exclusive, rho=rho
            )
        except ValueError as err:
            raise DataError(str(err)) from None
        source = str(args.data)
    text = format_report(report)
    dump_json(report.to_dict(), out / "report.json")
    (out / "report.txt").write_text(text)
    _write_manifest(out, "diagnose", {"source": source}, ["report.json", "report.txt"])
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# metrics


def _cmd_metrics(args) -> int:
    if not args.estimate:
        raise UsageError("metrics requires --estimate <grid.json>")
    if args.reference_rho is None:
        raise UsageError("metrics requires --reference-rho")
    try:
        grid = read_grid_json(args.estimate)
    except FileNotFoundError:
        raise DataError(f"{args.estimate}: file not found") from None
    except (KeyError, TypeError, ValueError) as err:
        raise DataError(f"{args.estimate}: bad grid file: {err}") from None
    axis = _eval_axis()
    rho = args.reference_rho
    report = evaluate(
        grid,
        lambda a, b: bivariate_normal_cdf(a, b, rho),
        axis,
        axis,
        replicate=args.replicate,
        method=args.method or "",
    )
    out = _ensure_out(args.out)
    dump_json(report.to_dict(), out / "metrics.json")
    _write_manifest(
        out,
        "metrics",
        {"estimate": str(args.estimate), "reference_rho": rho},
        ["metrics.json"],
    )
    corr = "undefined" if report.correlation is None else f"{report.correlation:.6f}"
    print(
        f"rmse {report.rmse:.6f}  ks {report.ks:.6f}  "
        f"cvm {report.cvm:.8f}  corr {corr}"
    )
    return 0


# ---------------------------------------------------------------------------
# verify


def _regenerate_bytes(write_fn) -> bytes:
    with tempfile.NamedTemporaryFile(mode="w", suffix=".csv", delete=False) as fh:
        tmp = Path(fh.name)
    try:
        write_fn(tmp)
        return tmp.read_bytes()
    finally:
        tmp.unlink(missing_ok=True)


def _verify_metrics_dir(out: Path) -> bool:
    reports = read_metrics_csv(out / "metrics.csv")
    expected = _regenerate_bytes(
        lambda p: write_metrics_summary_csv(aggregate_metrics(reports), p)
    )
    return expected == (out / "summary.csv").read_bytes()


def _verify_estimates_dir(out: Path) -> bool:
    manifest = _load_json_file(out / "manifest.json")
    dgp_id = manifest.get("parameters", {}).get("dgp")
    if not dgp_id:
        raise DataError(f"{out / 'manifest.json'}: no DGP id recorded")
    spec = builtin_dgp_spec(dgp_id)
    truth = _truth_vector(spec)
    truths = [float(v) for v in truth.pack_original()]
    with open(out / "estimates.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][2:]
    estimate_rows = [
        (int(row[0]), [float(v) for v in row[2:]], bool(int(row[1]))) for row in rows[1:]
    ]
    expected = _regenerate_bytes(
        lambda p: _write_param_summary(p, _param_summary_rows(names, truths, estimate_rows))
    )
    return expected == (out / "summary.csv").read_bytes()


def _cmd_verify(args) -> int:
    out = Path(args.out or ".")
    try:
        if (out / "metrics.csv").exists():
            ok = _verify_metrics_dir(out)
        elif (out / "estimates.csv").exists():
            ok = _verify_estimates_dir(out)
        else:
            raise DataError(f"{out}: no per-replication files (metrics.csv or estimates.csv)")
    except FileNotFoundError as err:
        raise DataError(str(err)) from None
    if not ok:
        raise DataError(f"{out / 'summary.csv'} does not match the per-replication files")
    print(f"verified: {out / 'summary.csv'} matches the per-replication files")
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="latticemodels",
        description="Multivariate ordered response models: simulate, fit, replicate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a sample from a DGP and write CSV + spec")
    p.add_argument("--dgp", help=f"builtin DGP id ({', '.join(BUILTIN_DGP_IDS)})")
    p.add_argument("--config", help="path to a DGP spec JSON (alternative to --dgp)")
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("fit", help="fit one estimator to a dataset CSV")
    p.add_argument("--data", help="dataset CSV path")
    p.add_argument("--sidecar", help="JSON mapping columns to dimensions/exclusivity")
    p.add_argument(
        "--estimator", choices=_ESTIMATORS, default="parametric", help="estimator"
    )
    p.add_argument("--config", help="estimator settings JSON")
    p.add_argument("--spec", help="lattice or DGP spec JSON fixing category counts")
    p.add_argument("--first-stage", help="index/threshold JSON for two-step estimators")
    p.add_argument(
        "--reference-rho",
        type=float,
        help="evaluate the fitted grid against a gaussian reference CDF",
    )
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("montecarlo", help="replicate a design and tabulate results")
    p.add_argument("--dgp", help="builtin DGP id")
    p.add_argument("--estimator", choices=_ESTIMATORS, help="single estimator override")
    p.add_argument("--config", help="estimator settings JSON (keyed by estimator)")
    p.add_argument("--n", type=int, help="sample size per replication (default 1000)")
    p.add_argument("--reps", type=int, default=1, help="number of replications")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker count")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(handler=_cmd_montecarlo)

    p = sub.add_parser("diagnose", help="identification checks for a DGP or dataset")
    p.add_argument("--dgp", help="builtin DGP id")
    p.add_argument("--config", help="DGP spec JSON (alternative to --dgp)")
    p.add_argument("--data", help="dataset CSV (requires --first-stage)")
    p.add_argument("--sidecar", help="JSON with dimension/exclusivity mappings")
    p.add_argument("--first-stage", help="index/threshold JSON for data-based checks")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(handler=_cmd_diagnose)

    p = sub.add_parser("metrics", help="score a stored CDF grid against a reference")
    p.add_argument("--estimate", help="grid JSON produced by fit")
    p.add_argument("--reference-rho", type=float, help="gaussian reference correlation")
    p.add_argument("--method", help="method label for the report")
    p.add_argument("--replicate", type=int, help="replication id for the report")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(handler=_cmd_metrics)

    p = sub.add_parser("verify", help="recheck aggregate tables against per-rep files")
    p.add_argument("--out", default=".", help="directory holding a montecarlo run")
    p.set_defaults(handler=_cmd_verify)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.handler(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except ConvergenceError as err:
        print(f"convergence failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Distance measures between an estimated CDF grid and a reference CDF.

The reference is evaluated exactly at the grid points while the estimate is
interpolated bilinearly off-node, so the reported distances isolate
estimator error from evaluation error. Aggregation follows the usual
simulation-table layout: one row per method with means and standard
deviations in separate columns.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .semiparametric import CdfGrid

__all__ = [
    "MetricsReport",
    "aggregate_metrics",
    "evaluate",
    "read_metrics_csv",
    "write_metrics_csv",
    "write_metrics_summary_csv",
]


@dataclass(frozen=True)
class MetricsReport:
    """RMSE / KS / Cramer-von Mises / correlation against a reference CDF.

    ``correlation`` is None when the estimate (or the reference) has zero
    variance over the evaluation grid, where the Pearson coefficient is
    undefined. ``cvm`` is definitionally the squared ``rmse``.
    """

    rmse: float
    ks: float
    cvm: float
    correlation: float | None
    grid: str = ""
    replicate: int | None = None
    method: str = ""

    def __post_init__(self) -> None:
        for name in ("rmse", "ks", "cvm"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
        if abs(self.cvm - self.rmse**2) > 1e-12:
            raise ValueError(
                f"cvm {self.cvm} inconsistent with rmse^2 {self.rmse**2}"
            )
        if self.correlation is not None and not -1.0 <= self.correlation <= 1.0:
            raise ValueError(f"correlation must lie in [-1, 1], got {self.correlation}")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "replicate": self.replicate,
            "rmse": self.rmse,
            "ks": self.ks,
            "cvm": self.cvm,
            "corr": self.correlation,
            "grid": self.grid,
        }


def _grid_descriptor(axis1: np.ndarray, axis2: np.ndarray) -> str:
    return (
        f"{axis1.size}x{axis2.size}"
        f"[{axis1[0]:g},{axis1[-1]:g}]x[{axis2[0]:g},{axis2[-1]:g}]"
    )


def evaluate(
    estimate: CdfGrid,
    reference,
    axis1,
    axis2,
    *,
    replicate: int | None = None,
    method: str = "",
) -> MetricsReport:
    """Compare an estimated grid against a reference CDF on given axes.

    ``reference`` is a vectorized callable of two coordinate arrays. RMSE is
    the root mean squared deviation over all axis1 x axis2 points, KS the
    maximum absolute deviation, CvM the mean squared deviation, and the
    correlation is Pearson's over the paired values.
    """
    a1 = np.asarray(axis1, dtype=float)
    a2 = np.asarray(axis2, dtype=float)
    if a1.ndim != 1 or a2.ndim != 1 or a1.size < 1 or a2.size < 1:
        raise ValueError("evaluation axes must be nonempty 1-d arrays")
    e1 = np.repeat(a1, a2.size)
    e2 = np.tile(a2, a1.size)
    est = np.asarray(estimate.interpolate(e1, e2), dtype=float)
    ref = np.asarray(reference(e1, e2), dtype=float)
    if est.shape != ref.shape:
        raise ValueError("reference must evaluate elementwise on coordinate arrays")
    dev = est - ref
    cvm = float(np.mean(dev**2))
    rmse = math.sqrt(cvm)
    ks = float(np.max(np.abs(dev)))
    se = est - est.mean()
    sr = ref - ref.mean()
    # CDF values live in [0, 1]; spreads at rounding scale are constants
    if np.max(np.abs(se)) <= 1e-12 or np.max(np.abs(sr)) <= 1e-12:
        corr = None
    else:
        denom = math.sqrt(float(np.sum(se**2)) * float(np.sum(sr**2)))
        corr = float(np.clip(np.sum(se * sr) / denom, -1.0, 1.0))
    return MetricsReport(
        rmse, ks, cvm, corr, _grid_descriptor(a1, a2), replicate, method
    )


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_metrics_csv(reports, path) -> None:
    """Per-replication rows: method,replicate,rmse,ks,cvm,corr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "replicate", "rmse", "ks", "cvm", "corr"])
        for r in reports:
            w.writerow(
                [
                    r.method,
                    "" if r.replicate is None else r.replicate,
                    _fmt(r.rmse),
                    _fmt(r.ks),
                    _fmt(r.cvm),
                    _fmt(r.correlation),
                ]
            )


def read_metrics_csv(path) -> list[MetricsReport]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["method", "replicate", "rmse", "ks", "cvm", "corr"]:
        raise ValueError(f"{path}: not a metrics CSV (bad header)")
    out = []
    for row in rows[1:]:
        method, rep, rmse, ks, cvm, corr = row
        out.append(
            MetricsReport(
                float(rmse),
                float(ks),
                float(cvm),
                float(corr) if corr else None,
                replicate=int(rep) if rep else None,
                method=method,
            )
        )
    return out


def _mean_sd(values) -> tuple[float | None, float | None]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    mean = float(np.mean(vals))
    sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
    return mean, sd


def aggregate_metrics(reports) -> list[dict]:
    """One summary row per method, in first-appearance order."""
    order: list[str] = []
    groups: dict[str, list[MetricsReport]] = {}
    for r in reports:
        if r.method not in groups:
            order.append(r.method)
            groups[r.method] = []
        groups[r.method].append(r)
    rows = []
    for method in order:
        grp = groups[method]
        row: dict = {"method": method, "replications": len(grp)}
        for name, attr in (
            ("rmse", "rmse"),
            ("ks", "ks"),
            ("cvm", "cvm"),
            ("corr", "correlation"),
        ):
            mean, sd = _mean_sd([getattr(r, attr) for r in grp])
            row[f"{name}_mean"] = mean
            row[f"{name}_sd"] = sd
        rows.append(row)
    return rows


def write_metrics_summary_csv(rows, path) -> None:
    """Aggregate table: per-method means with SDs in separate columns."""
    header = ["method", "replications"]
    for name in ("rmse", "ks", "cvm", "corr"):
        header.extend([f"{name}_mean", f"{name}_sd"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            out = [row["method"], row["replications"]]
            for name in ("rmse", "ks", "cvm", "corr"):
                out.extend([_fmt(row[f"{name}_mean"]), _fmt(row[f"{name}_sd"])])
            w.writerow(out)

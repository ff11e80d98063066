"""Core lattice model types: thresholds, linear indices, datasets, rectangles.

A D-dimensional lattice model discretizes each latent variable
``Y*_d = x_d' beta_d + eps_d`` through a strictly increasing threshold vector
``alpha^(d)``: the observed category is j iff the latent value falls in
``(alpha_{j-1}, alpha_j]``, with sentinels ``alpha_0 = -inf`` and
``alpha_{M_d} = +inf``. Every observed cell therefore corresponds to a
half-open rectangle for the error vector, and the probability of a cell is
the 2^D-corner signed inclusion-exclusion sum of the joint error CDF at the
rectangle corners.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "IndexModel",
    "LatticeSpec",
    "Rectangle",
    "categorize",
    "cell_probability",
    "implied_rectangle",
    "rectangle_bounds",
    "read_csv",
    "write_csv",
]

_F_TOL = 1e-9


def _as_float_tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class LatticeSpec:
    """Per-dimension strictly increasing threshold vectors.

    Dimension d has ``M_d = len(thresholds[d]) + 1`` categories; an empty
    threshold vector (a single-category dimension) is permitted as a
    degenerate case.
    """

    thresholds: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.thresholds) < 1:
            raise ValueError("lattice needs at least one dimension")
        cleaned = []
        for d, t in enumerate(self.thresholds, start=1):
            tt = _as_float_tuple(t)
            if any(not math.isfinite(v) for v in tt):
                raise ValueError(f"dimension {d}: thresholds must be finite, got {tt}")
            if any(b <= a for a, b in zip(tt, tt[1:])):
                raise ValueError(
                    f"dimension {d}: thresholds must be strictly increasing, got {tt}"
                )
            cleaned.append(tt)
        object.__setattr__(self, "thresholds", tuple(cleaned))

    @property
    def dims(self) -> int:
        return len(self.thresholds)

    @property
    def category_counts(self) -> tuple[int, ...]:
        return tuple(len(t) + 1 for t in self.thresholds)

    def extended(self, d: int) -> np.ndarray:
        """Thresholds of dimension d (1-based) with -inf/+inf sentinels."""
        return np.concatenate(([-np.inf], self.thresholds[d - 1], [np.inf]))

    def to_dict(self) -> dict:
        return {"thresholds": [list(t) for t in self.thresholds]}

    @staticmethod
    def from_dict(d: dict) -> "LatticeSpec":
        return LatticeSpec(tuple(tuple(t) for t in d["thresholds"]))


@dataclass(frozen=True)
class IndexModel:
    """Linear index coefficients, one vector per lattice dimension."""

    beta: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        cleaned = []
        for d, b in enumerate(self.beta, start=1):
            bb = _as_float_tuple(b)
            if len(bb) < 1:
                raise ValueError(f"dimension {d}: needs at least one coefficient")
            if any(not math.isfinite(v) for v in bb):
                raise ValueError(f"dimension {d}: coefficients must be finite, got {bb}")
            cleaned.append(bb)
        object.__setattr__(self, "beta", tuple(cleaned))

    @property
    def dims(self) -> int:
        return len(self.beta)

    def to_dict(self) -> dict:
        return {"beta": [list(b) for b in self.beta]}

    @staticmethod
    def from_dict(d: dict) -> "IndexModel":
        return IndexModel(tuple(tuple(b) for b in d["beta"]))


@dataclass(frozen=True)
class Rectangle:
    """Half-open error rectangle ``prod_d (lower_d, upper_d]``, +-inf allowed."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        lo = _as_float_tuple(self.lower)
        hi = _as_float_tuple(self.upper)
        if len(lo) != len(hi):
            raise ValueError("rectangle bound lengths differ")
        for d, (a, b) in enumerate(zip(lo, hi), start=1):
            if math.isnan(a) or math.isnan(b):
                raise ValueError(f"dimension {d}: rectangle bound is NaN")
            if not a < b:
                raise ValueError(f"dimension {d}: requires lower < upper, got ({a}, {b})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(
            np.all(np.asarray(self.lower) < p) and np.all(p <= np.asarray(self.upper))
        )


@dataclass
class Dataset:
    """Observed cells and per-dimension covariate matrices.

    ``outcomes`` is (n, D) of 1-based category indices; ``covariates[d]`` is
    the (n, k_d) design matrix of dimension d+1; ``names[d]`` labels its
    columns.
    """

    outcomes: np.ndarray
    covariates: tuple[np.ndarray, ...]
    names: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        out = np.asarray(self.outcomes)
        if out.ndim != 2:
            raise ValueError("outcomes must be a 2-d array of category indices")
        if not np.issubdtype(out.dtype, np.integer):
            fl = np.asarray(out, dtype=float)
            if np.isnan(fl).any() or np.any(fl != np.round(fl)):
                raise ValueError("outcomes must be integer category indices")
            out = fl.astype(np.int64)
        self.outcomes = out
        n, dims = out.shape
        covs = []
        for d, x in enumerate(self.covariates, start=1):
            xa = np.atleast_2d(np.asarray(x, dtype=float))
            if xa.shape[0] != n:
                raise ValueError(
                    f"dimension {d}: covariate rows {xa.shape[0]} != outcomes rows {n}"
                )
            if np.isnan(xa).any():
                raise ValueError(f"dimension {d}: covariates contain NaN")
            covs.append(xa)
        if len(covs) != dims:
            raise ValueError(
                f"{len(covs)} covariate blocks for {dims} outcome dimensions"
            )
        self.covariates = tuple(covs)
        if not self.names:
            self.names = tuple(
                tuple(f"c{j}" for j in range(1, x.shape[1] + 1)) for x in self.covariates
            )
        else:
            self.names = tuple(tuple(nm) for nm in self.names)
            for d, (nm, x) in enumerate(zip(self.names, self.covariates), start=1):
                if len(nm) != x.shape[1]:
                    raise ValueError(f"dimension {d}: {len(nm)} names for {x.shape[1]} columns")

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    @property
    def dims(self) -> int:
        return self.outcomes.shape[1]

    def validate_against(self, spec: LatticeSpec) -> None:
        if spec.dims != self.dims:
            raise ValueError(f"dataset has {self.dims} dimensions, spec {spec.dims}")
        for d, m in enumerate(spec.category_counts, start=1):
            col = self.outcomes[:, d - 1]
            bad = (col < 1) | (col > m)
            if bad.any():
                raise ValueError(
                    f"dimension {d}: categories must lie in 1..{m}, "
                    f"found {sorted(set(col[bad].tolist()))}"
                )

    def category_counts(self, spec: LatticeSpec) -> tuple[np.ndarray, ...]:
        """Observed count of each marginal category, per dimension."""
        self.validate_against(spec)
        return tuple(
            np.bincount(self.outcomes[:, d], minlength=m + 1)[1:]
            for d, m in enumerate(spec.category_counts)
        )

    def missing_categories(self, spec: LatticeSpec) -> list[tuple[int, int]]:
        """(dimension, category) pairs never observed."""
        out = []
        for d, counts in enumerate(self.category_counts(spec), start=1):
            for j in np.nonzero(counts == 0)[0]:
                out.append((d, int(j) + 1))
        return out


def categorize(latent, spec: LatticeSpec):
    """Map latent values to 1-based cell indices.

    A latent value equal to a threshold belongs to the lower category, i.e.
    category j covers ``(alpha_{j-1}, alpha_j]``. Accepts one point of shape
    (D,) (returns a tuple) or a batch of shape (n, D) (returns an int array).
    """
    arr = np.asarray(latent, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if np.isnan(pts).any():
        raise ValueError("categorize received NaN latent values")
    if pts.shape[1] != spec.dims:
        raise ValueError(f"latent has {pts.shape[1]} columns, spec has {spec.dims} dims")
    cells = np.empty(pts.shape, dtype=np.int64)
    for d in range(spec.dims):
        t = np.asarray(spec.thresholds[d])
        cells[:, d] = np.searchsorted(t, pts[:, d], side="left") + 1
    if single:
        return tuple(int(c) for c in cells[0])
    return cells


def _cell_edges(cell, x, spec: LatticeSpec, model: IndexModel):
    if len(cell) != spec.dims or len(x) != spec.dims:
        raise ValueError(
            f"cell/covariates must have {spec.dims} dimensions, "
            f"got {len(cell)} and {len(x)}"
        )
    lower, upper = [], []
    for d in range(spec.dims):
        j = int(cell[d])
        m = spec.category_counts[d]
        if not 1 <= j <= m:
            raise ValueError(f"dimension {d + 1}: category {j} outside 1..{m}")
        ext = spec.extended(d + 1)
        idx = float(np.dot(np.asarray(x[d], dtype=float), model.beta[d]))
        lower.append(ext[j - 1] - idx)
        upper.append(ext[j] - idx)
    return lower, upper


def implied_rectangle(
    cell, x, spec: LatticeSpec, model: IndexModel
) -> Rectangle:
    """Error rectangle implied by an observed cell at covariates x.

    ``x`` is a sequence of per-dimension covariate vectors. Boundary
    categories produce -inf / +inf sides.
    """
    lower, upper = _cell_edges(cell, x, spec, model)
    return Rectangle(tuple(lower), tuple(upper))


def rectangle_bounds(
    outcomes: np.ndarray,
    covariates,
    spec: LatticeSpec,
    model: IndexModel,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized implied-rectangle bounds for a whole sample.

    Returns (lower, upper), each (n, D), with +-inf on boundary cells.
    """
    out = np.asarray(outcomes)
    n, dims = out.shape
    lower = np.empty((n, dims))
    upper = np.empty((n, dims))
    for d in range(dims):
        ext = spec.extended(d + 1)
        j = out[:, d]
        m = spec.category_counts[d]
        if np.any((j < 1) | (j > m)):
            raise ValueError(f"dimension {d + 1}: category outside 1..{m}")
        idx = np.asarray(covariates[d], dtype=float) @ np.asarray(model.beta[d])
        lower[:, d] = ext[j - 1] - idx
        upper[:, d] = ext[j] - idx
    return lower, upper


def cell_probability(cell, x, spec: LatticeSpec, model: IndexModel, F) -> float:
    """Probability of a cell under joint error CDF ``F``.

    ``F`` is called with D scalar arguments (rectangle corner coordinates,
    possibly +inf) and must return values in [0, 1]. Corners with any -inf
    coordinate contribute exactly zero and are skipped. The result is the
    signed inclusion-exclusion sum over the 2^D corners, clipped of
    sub-tolerance rounding noise.
    """
    lower, upper = _cell_edges(cell, x, spec, model)
    total = 0.0
    for signs in itertools.product((0, 1), repeat=spec.dims):
        corner = [lower[d] if s else upper[d] for d, s in enumerate(signs)]
        if any(c == -math.inf for c in corner):
            continue
        val = float(F(*corner))
        if not -_F_TOL <= val <= 1.0 + _F_TOL:
            raise ValueError(
                f"joint CDF returned {val} outside [0, 1] at corner {tuple(corner)}"
            )
        total += (-1.0) ** sum(signs) * min(max(val, 0.0), 1.0)
    if total < -_F_TOL or total > 1.0 + _F_TOL:
        raise ValueError(f"cell probability {total} outside [0, 1] for cell {tuple(cell)}")
    return min(max(total, 0.0), 1.0)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset as CSV: columns y1..yD then x<d>_<name>, header first."""
    header = [f"y{d}" for d in range(1, dataset.dims + 1)]
    for d, nm in enumerate(dataset.names, start=1):
        header.extend(f"x{d}_{name}" for name in nm)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [str(int(v)) for v in dataset.outcomes[i]]
            for x in dataset.covariates:
                row.extend(_fmt(v) for v in x[i])
            writer.writerow(row)


_COV_COL = re.compile(r"^x(\d+)_(.+)$")


def read_csv(path) -> Dataset:
    """Read a dataset written by :func:`write_csv`. The header is mandatory."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    ycols, covcols = [], {}
    for pos, name in enumerate(header):
        if re.fullmatch(r"y\d+", name):
            ycols.append((int(name[1:]), pos))
        else:
            m = _COV_COL.fullmatch(name)
            if m is None:
                raise ValueError(
                    f"{path}: column {name!r} matches neither y<d> nor x<d>_<name>; "
                    "is the header missing?"
                )
            covcols.setdefault(int(m.group(1)), []).append((m.group(2), pos))
    if not ycols:
        raise ValueError(f"{path}: no outcome columns y1..yD found; header required")
    ycols.sort()
    dims = len(ycols)
    if [d for d, _ in ycols] != list(range(1, dims + 1)):
        raise ValueError(f"{path}: outcome columns must be y1..y{dims} with no gaps")
    for d in covcols:
        if not 1 <= d <= dims:
            raise ValueError(f"{path}: covariate block x{d}_* has no outcome y{d}")
    body = rows[1:]
    n = len(body)
    outcomes = np.empty((n, dims), dtype=np.int64)
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(row)} fields, header has {len(header)}")
        for d, pos in ycols:
            raw = row[pos]
            try:
                v = int(raw)
            except ValueError:
                raise ValueError(
                    f"{path}: row {i + 2}: outcome y{d} must be an integer, got {raw!r}"
                ) from None
            outcomes[i, d - 1] = v
    covs, names = [], []
    for d in range(1, dims + 1):
        cols = covcols.get(d, [])
        mat = np.empty((n, len(cols)))
        for j, (_, pos) in enumerate(cols):
            for i, row in enumerate(body):
                try:
                    mat[i, j] = float(row[pos])
                except ValueError:
                    raise ValueError(
                        f"{path}: row {i + 2}: covariate {header[pos]} must be numeric, "
                        f"got {row[pos]!r}"
                    ) from None
        if np.isnan(mat).any():
            raise ValueError(f"{path}: covariate block x{d}_* contains NaN")
        covs.append(mat)
        names.append(tuple(nm for nm, _ in cols))
    return Dataset(outcomes, tuple(covs), tuple(names))


def dump_json(obj: dict, path) -> None:
    """Canonical JSON writer: sorted keys, stable layout, trailing newline."""
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)

"""Joint error-CDF estimators for the bivariate lattice model.

Two-step estimators take the index coefficients and thresholds as given
and recover the latent error CDF. Grid inversion collects the unknown CDF
values on a grid and solves a constrained least squares problem whose
design matrix encodes the four-corner inclusion-exclusion of each
observation's implied rectangle; the feasible set enforces monotonicity
and [0, 1] bounds (Dykstra's alternating projections inside a projected
gradient loop). Rectangle-kernel smoothing pools uniform draws from every
implied rectangle and evaluates the Gaussian product-kernel CDF of the
pooled sample in closed form. The one-step sieve estimator fits index
coefficients, thresholds, and a tensor-product B-spline CDF jointly under
linear monotonicity and box constraints on the spline coefficients.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.interpolate import BSpline
from scipy.optimize import isotonic_regression, minimize
from scipy.special import ndtr, ndtri

from .lattice import Dataset, IndexModel, LatticeSpec, rectangle_bounds
from .parametric import auto_init

__all__ = [
    "CdfGrid",
    "GridInversionConfig",
    "GridInversionResult",
    "KernelConfig",
    "SieveConfig",
    "SieveResult",
    "build_design_system",
    "grid_inversion_fit",
    "interpolate",
    "kernel_smoothing_fit",
    "read_grid_csv",
    "read_grid_json",
    "sieve_mle_fit",
    "write_grid_csv",
    "write_grid_json",
]

_MONOTONE_TOL = 1e-9


def _validated_axis(values, label: str) -> np.ndarray:
    axis = np.asarray(values, dtype=np.float64)
    if axis.ndim != 1 or axis.size < 2:
        raise ValueError(f"{label} must be a 1-D array with at least two nodes")
    if not np.all(np.isfinite(axis)):
        raise ValueError(f"{label} must be finite")
    if not np.all(np.diff(axis) > 0):
        raise ValueError(f"{label} must be strictly increasing")
    return axis


@dataclass(frozen=True)
class CdfGrid:
    """CDF values on a rectangular grid, nondecreasing along both axes."""

    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        axis1 = _validated_axis(self.axis1, "axis1")
        axis2 = _validated_axis(self.axis2, "axis2")
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (axis1.size, axis2.size):
            raise ValueError(
                f"values shape {values.shape} does not match axes "
                f"({axis1.size}, {axis2.size})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if values.min() < -_MONOTONE_TOL or values.max() > 1.0 + _MONOTONE_TOL:
            raise ValueError("values must lie in [0, 1]")
        if np.diff(values, axis=0).min(initial=0.0) < -_MONOTONE_TOL:
            raise ValueError("values must be nondecreasing along axis1")
        if np.diff(values, axis=1).min(initial=0.0) < -_MONOTONE_TOL:
            raise ValueError("values must be nondecreasing along axis2")
        for name, arr in (("axis1", axis1), ("axis2", axis2), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def interpolate(self, e1, e2) -> np.ndarray:
        return interpolate(self, e1, e2)

    def to_dict(self) -> dict:
        return {
            "axis1": [float(v) for v in self.axis1],
            "axis2": [float(v) for v in self.axis2],
            "values": [float(v) for v in self.values.ravel()],
        }

    @staticmethod
    def from_dict(payload: dict) -> "CdfGrid":
        axis1 = np.asarray(payload["axis1"], dtype=np.float64)
        axis2 = np.asarray(payload["axis2"], dtype=np.float64)
        values = np.asarray(payload["values"], dtype=np.float64)
        return CdfGrid(axis1, axis2, values.reshape(axis1.size, axis2.size))


def interpolate(grid: CdfGrid, e1, e2) -> np.ndarray:
    """Bilinear interpolation of the grid surface.

    Points below the hull in either coordinate evaluate to 0 (the CDF limit
    at -infinity); points beyond the upper hull clamp to the nearest edge.
    """
    p1, p2 = np.broadcast_arrays(np.asarray(e1, dtype=np.float64), np.asarray(e2, dtype=np.float64))
    scalar = p1.ndim == 0
    p1 = np.atleast_1d(p1)
    p2 = np.atleast_1d(p2)
    below = (p1 < grid.axis1[0]) | (p2 < grid.axis2[0])
    q1 = np.minimum(p1, grid.axis1[-1])
    q2 = np.minimum(p2, grid.axis2[-1])
    i = np.clip(np.searchsorted(grid.axis1, q1, side="right") - 1, 0, grid.axis1.size - 2)
    j = np.clip(np.searchsorted(grid.axis2, q2, side="right") - 1, 0, grid.axis2.size - 2)
    t1 = np.clip((q1 - grid.axis1[i]) / (grid.axis1[i + 1] - grid.axis1[i]), 0.0, 1.0)
    t2 = np.clip((q2 - grid.axis2[j]) / (grid.axis2[j + 1] - grid.axis2[j]), 0.0, 1.0)
    v = grid.values
    out = (
        (1 - t1) * (1 - t2) * v[i, j]
        + t1 * (1 - t2) * v[i + 1, j]
        + (1 - t1) * t2 * v[i, j + 1]
        + t1 * t2 * v[i + 1, j + 1]
    )
    out[below] = 0.0
    return float(out[0]) if scalar else out


def write_grid_csv(grid: CdfGrid, path) -> None:
    """Long-form export: one row per node with columns e1, e2, value."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["e1", "e2", "value"])
        for k, a in enumerate(grid.axis1):
            for l, b in enumerate(grid.axis2):
                writer.writerow([repr(float(a)), repr(float(b)), repr(float(grid.values[k, l]))])


def read_grid_csv(path) -> CdfGrid:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["e1", "e2", "value"]:
            raise ValueError(f"expected header e1,e2,value, got {header}")
        rows = [(float(a), float(b), float(v)) for a, b, v in reader]
    axis1 = np.unique([r[0] for r in rows])
    axis2 = np.unique([r[1] for r in rows])
    if len(rows) != axis1.size * axis2.size:
        raise ValueError("grid csv does not cover a full rectangular grid")
    values = np.full((axis1.size, axis2.size), np.nan)
    for a, b, v in rows:
        values[np.searchsorted(axis1, a), np.searchsorted(axis2, b)] = v
    return CdfGrid(axis1, axis2, values)


def write_grid_json(grid: CdfGrid, path) -> None:
    with open(path, "w") as handle:
        json.dump(grid.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_grid_json(path) -> CdfGrid:
    with open(path) as handle:
        return CdfGrid.from_dict(json.load(handle))


def _repaired(values: np.ndarray) -> np.ndarray:
    """Round float dust off a theoretically monotone [0, 1] surface."""
    out = np.clip(values, 0.0, 1.0)
    out = np.maximum.accumulate(out, axis=0)
    out = np.maximum.accumulate(out, axis=1)
    return np.minimum(out, 1.0)


def _snap_to_axis(axis: np.ndarray, bounds: np.ndarray, dim: int) -> np.ndarray:
    """Nearest grid node for each finite implied bound, hull-checked."""
    flat = bounds.ravel()
    lo, hi = axis[0], axis[-1]
    slack = 1e-9 * max(1.0, abs(lo), abs(hi))
    if flat.min() < lo - slack or flat.max() > hi + slack:
        bad = float(flat[np.argmax(np.abs(flat - np.clip(flat, lo, hi)))])
        raise ValueError(
            f"implied bound {bad!r} for dimension {dim} lies outside the "
            f"grid hull [{float(lo)!r}, {float(hi)!r}]"
        )
    right = np.clip(np.searchsorted(axis, flat), 1, axis.size - 1)
    nearer_left = np.abs(flat - axis[right - 1]) <= np.abs(axis[right] - flat)
    idx = np.where(nearer_left, right - 1, right)
    return idx.reshape(bounds.shape)


def build_design_system(
    data: Dataset,
    spec: LatticeSpec,
    model: IndexModel,
    axis1,
    axis2,
    group_patterns: bool = False,
):
    """Signed corner-sum design matrix and empirical cell targets.

    One row per (observation, cell) with entries +1/-1 at the four corner
    node indices of the cell's implied rectangle; the target is the binary
    indicator of the observed cell, so least squares recovers conditional
    cell probabilities in expectation. Corners at -infinity contribute
    nothing; corners at +infinity resolve to the last node of the axis,
    which therefore stands in for the marginal CDF. With ``group_patterns``
    observations sharing a covariate pattern collapse to one row per
    (pattern, cell) with share targets, rescaled by sqrt of the pattern
    count so the normal equations are unchanged.
    """
    data.validate_against(spec)
    axes = (_validated_axis(axis1, "axis1"), _validated_axis(axis2, "axis2"))
    if spec.dims != 2 or len(data.covariates) != 2:
        raise ValueError("design system requires a two-dimensional lattice")
    pooled = np.hstack([np.asarray(x, dtype=np.float64) for x in data.covariates])
    if group_patterns:
        pattern, inverse, counts = np.unique(
            pooled, axis=0, return_inverse=True, return_counts=True
        )
        split = [np.asarray(x).shape[1] for x in data.covariates]
        xs = (pattern[:, : split[0]], pattern[:, split[0] :])
        weights = np.sqrt(counts.astype(np.float64))
    else:
        xs = tuple(np.asarray(x, dtype=np.float64) for x in data.covariates)
        inverse = np.arange(data.outcomes.shape[0])
        weights = np.ones(xs[0].shape[0])

    n = xs[0].shape[0]
    m_counts = spec.category_counts
    # node index of alpha_j - x'beta for every unit and finite threshold
    snapped = []
    for d in range(2):
        idx = xs[d] @ np.asarray(model.beta[d])
        cuts = np.asarray(spec.thresholds[d])[None, :] - idx[:, None]
        snapped.append(_snap_to_axis(axes[d], cuts, d + 1))

    shares = np.zeros((n, m_counts[0], m_counts[1]))
    np.add.at(shares, (inverse, data.outcomes[:, 0] - 1, data.outcomes[:, 1] - 1), 1.0)
    if group_patterns:
        shares /= np.maximum(weights[:, None, None] ** 2, 1.0)

    k2 = axes[1].size
    rows, cols, vals, target = [], [], [], []
    row_base = 0
    for j1 in range(1, m_counts[0] + 1):
        up1 = snapped[0][:, j1 - 1] if j1 < m_counts[0] else np.full(n, axes[0].size - 1)
        lo1 = snapped[0][:, j1 - 2] if j1 > 1 else None
        for j2 in range(1, m_counts[1] + 1):
            up2 = snapped[1][:, j2 - 1] if j2 < m_counts[1] else np.full(n, k2 - 1)
            lo2 = snapped[1][:, j2 - 2] if j2 > 1 else None
            r = row_base + np.arange(n)
            corners = [(up1, up2, 1.0)]
            if lo1 is not None:
                corners.append((lo1, up2, -1.0))
            if lo2 is not None:
                corners.append((up1, lo2, -1.0))
            if lo1 is not None and lo2 is not None:
                corners.append((lo1, lo2, 1.0))
            for c1, c2, sign in corners:
                rows.append(r)
                cols.append(c1 * k2 + c2)
                vals.append(np.full(n, sign) * weights)
            target.append(shares[:, j1 - 1, j2 - 1] * weights)
            row_base += n
    matrix = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(row_base, axes[0].size * k2),
    ).tocsr()
    matrix.sum_duplicates()
    return matrix, np.concatenate(target)


@dataclass(frozen=True)
class GridInversionConfig:
    """Constrained least squares settings for grid inversion.

    ``grid_source`` is either "implied-bounds" (nodes at the distinct
    implied bounds, exact corners) or "fixed-grid" with axis specs given as
    a node count, a (lo, hi, count) triple, or explicit node arrays. A
    sentinel node is appended beyond each axis to carry the +infinity
    corners. ``feasible_set`` "monotone-box" projects onto nondecreasing
    values in [0, 1]; "proper-cdf" reparameterizes as cumulative sums of
    nonnegative cell masses, which additionally enforces the rectangle
    inequality.
    """

    grid_source: str = "fixed-grid"
    axis1: object = 30
    axis2: object = 30
    smoothness_lambda: float = 0.0
    tol: float = 1e-9
    max_iter: int = 600
    feasible_set: str = "monotone-box"
    sentinel_pad: float = 0.5
    group_patterns: bool = False

    def __post_init__(self) -> None:
        if self.grid_source not in ("fixed-grid", "implied-bounds"):
            raise ValueError(f"unknown grid_source {self.grid_source!r}")
        if self.feasible_set not in ("monotone-box", "proper-cdf"):
            raise ValueError(f"unknown feasible_set {self.feasible_set!r}")
        if not self.smoothness_lambda >= 0:
            raise ValueError("smoothness_lambda must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass(frozen=True)
class GridInversionResult:
    grid: CdfGrid
    converged: bool
    iterations: int
    residual: float
    objective_path: tuple[float, ...]

    @property
    def objective(self) -> float:
        return self.objective_path[-1]


def _implied_cut_values(data: Dataset, spec: LatticeSpec, model: IndexModel, d: int) -> np.ndarray:
    idx = np.asarray(data.covariates[d], dtype=np.float64) @ np.asarray(model.beta[d])
    return (np.asarray(spec.thresholds[d])[None, :] - idx[:, None]).ravel()


def _resolve_axis(spec_value, cuts: np.ndarray, pad: float) -> np.ndarray:
    if isinstance(spec_value, (int, np.integer)):
        lo, hi = cuts.min(), cuts.max()
        slack = 1e-6 * max(1.0, abs(lo), abs(hi))
        axis = np.linspace(lo - slack, hi + slack, int(spec_value))
    elif isinstance(spec_value, tuple) and len(spec_value) == 3:
        axis = np.linspace(float(spec_value[0]), float(spec_value[1]), int(spec_value[2]))
    else:
        axis = np.asarray(spec_value, dtype=np.float64)
    axis = _validated_axis(axis, "grid axis")
    return np.append(axis, axis[-1] + pad)


def _second_difference(k1: int, k2: int) -> sparse.csr_matrix:
    """Second differences along both axes, excluding the sentinel nodes."""
    blocks = []

    def diff_matrix(k):
        # rows stop short of the sentinel node at index k-1
        body = k - 1
        if body < 3:
            return None
        d = sparse.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(body - 2, k))
        return d

    d1 = diff_matrix(k1)
    if d1 is not None:
        blocks.append(sparse.kron(d1, sparse.identity(k2)))
    d2 = diff_matrix(k2)
    if d2 is not None:
        blocks.append(sparse.kron(sparse.identity(k1), d2))
    if not blocks:
        return sparse.csr_matrix((0, k1 * k2))
    return sparse.vstack(blocks).tocsr()


def _isotonic_columns(values: np.ndarray, axis: int) -> np.ndarray:
    mat = values if axis == 0 else values.T
    out = np.empty_like(mat)
    for j in range(mat.shape[1]):
        out[:, j] = isotonic_regression(mat[:, j], increasing=True).x
    return out if axis == 0 else out.T


def _project_monotone_box(values: np.ndarray, cycles: int = 12, tol: float = 1e-12) -> np.ndarray:
    """Dykstra projection onto {nondecreasing rows} ∩ {cols} ∩ {[0,1] box}."""
    x = values.copy()
    p = [np.zeros_like(x) for _ in range(3)]
    for _ in range(cycles):
        previous = x
        y = _isotonic_columns(x + p[0], axis=0)
        p[0] = x + p[0] - y
        z = _isotonic_columns(y + p[1], axis=1)
        p[1] = y + p[1] - z
        x = np.clip(z + p[2], 0.0, 1.0)
        p[2] = z + p[2] - x
        if np.max(np.abs(x - previous)) < tol:
            break
    return x


def _project_mass_simplex(mass: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {m >= 0, sum(m) <= 1}."""
    clipped = np.maximum(mass, 0.0)
    if clipped.sum() <= 1.0:
        return clipped
    flat = np.sort(mass.ravel())[::-1]
    cumulative = np.cumsum(flat) - 1.0
    ranks = np.arange(1, flat.size + 1)
    valid = flat - cumulative / ranks > 0
    tau = cumulative[valid][-1] / ranks[valid][-1]
    return np.maximum(mass - tau, 0.0)


def _power_iteration_norm(matrix: np.ndarray, iterations: int = 80, seed: int = 7) -> float:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(matrix.shape[0])
    v /= np.linalg.norm(v)
    value = 1.0
    for _ in range(iterations):
        w = matrix @ v
        value = np.linalg.norm(w)
        if value == 0.0:
            return 1.0
        v = w / value
    return value


def grid_inversion_fit(
    data: Dataset,
    spec: LatticeSpec,
    model: IndexModel,
    config: GridInversionConfig = GridInversionConfig(),
) -> GridInversionResult:
    """Constrained least squares recovery of the error CDF on a grid.

    Minimizes the mean squared residual of the signed corner sums against
    the empirical cell indicators, plus an optional second-difference
    smoothness penalty, by projected gradient descent with a Dykstra
    projection onto the feasible set. The objective never increases: steps
    that would raise it are rejected and the step size halved.
    """
    cuts1 = _implied_cut_values(data, spec, model, 0)
    cuts2 = _implied_cut_values(data, spec, model, 1)
    if config.grid_source == "implied-bounds":
        axis1 = np.append(u1 := np.unique(cuts1), u1[-1] + config.sentinel_pad)
        axis2 = np.append(u2 := np.unique(cuts2), u2[-1] + config.sentinel_pad)
    else:
        axis1 = _resolve_axis(config.axis1, cuts1, config.sentinel_pad)
        axis2 = _resolve_axis(config.axis2, cuts2, config.sentinel_pad)
    matrix, target = build_design_system(
        data, spec, model, axis1, axis2, group_patterns=config.group_patterns
    )
    k1, k2 = axis1.size, axis2.size
    n_rows = matrix.shape[0]

    lam = config.smoothness_lambda
    gram = (matrix.T @ matrix).toarray()
    if lam > 0:
        dmat = _second_difference(k1, k2)
        gram = gram + lam * (dmat.T @ dmat).toarray()
    lin = matrix.T @ target
    scale = 2.0 / n_rows
    step = 1.0 / (_power_iteration_norm(scale * gram) * 1.05)

    def objective(phi_flat: np.ndarray) -> float:
        r = matrix @ phi_flat - target
        value = (r @ r) / n_rows
        if lam > 0:
            d = dmat @ phi_flat
            value += lam * (d @ d) / n_rows
        return value

    if config.feasible_set == "proper-cdf":
        shape = (k1, k2)
        mass = np.full(shape, 1.0 / (k1 * k2))

        def to_phi(m):
            return np.cumsum(np.cumsum(m, axis=0), axis=1)

        def to_phi_adjoint(g):
            return np.cumsum(np.cumsum(g[::-1, ::-1], axis=0), axis=1)[::-1, ::-1]

        f = objective(to_phi(mass).ravel())
        path = [f]
        # power iteration on the mass-space Hessian (cumsum-conjugated gram)
        rng = np.random.default_rng(7)
        v = rng.standard_normal(shape)
        v /= np.linalg.norm(v)
        lip = 1.0
        for _ in range(80):
            w = to_phi_adjoint((scale * (gram @ to_phi(v).ravel())).reshape(shape))
            lip = np.linalg.norm(w)
            if lip == 0.0:
                lip = 1.0
                break
            v = w / lip
        step_m = 1.0 / (lip * 1.05)
        stalls = 0
        it = 0
        for it in range(1, config.max_iter + 1):
            phi = to_phi(mass)
            grad_phi = (scale * (gram @ phi.ravel() - lin)).reshape(shape)
            candidate = _project_mass_simplex(mass - step_m * to_phi_adjoint(grad_phi))
            f_new = objective(to_phi(candidate).ravel())
            if f_new > f + 1e-15:
                step_m *= 0.5
                path.append(f)
                if step_m < 1e-18:
                    break
                continue
            stalls = stalls + 1 if f - f_new <= config.tol * max(f, 1e-12) else 0
            mass, f = candidate, f_new
            path.append(f)
            if stalls >= 5:
                break
        phi = to_phi(mass)
    else:
        phi = np.outer(np.linspace(0.0, 1.0, k1), np.linspace(0.0, 1.0, k2))
        f = objective(phi.ravel())
        path = [f]
        stalls = 0
        it = 0
        for it in range(1, config.max_iter + 1):
            grad = (scale * (gram @ phi.ravel() - lin)).reshape(k1, k2)
            candidate = _project_monotone_box(phi - step * grad)
            f_new = objective(candidate.ravel())
            if f_new > f + 1e-15:
                step *= 0.5
                path.append(f)
                if step < 1e-18:
                    break
                continue
            stalls = stalls + 1 if f - f_new <= config.tol * max(f, 1e-12) else 0
            phi, f = candidate, f_new
            path.append(f)
            if stalls >= 5:
                break

    values = _repaired(phi)
    residual_vec = matrix @ values.ravel() - target
    residual = float(residual_vec @ residual_vec / n_rows)
    converged = stalls >= 5
    return GridInversionResult(
        grid=CdfGrid(axis1, axis2, values),
        converged=converged,
        iterations=it,
        residual=residual,
        objective_path=tuple(path),
    )


@dataclass(frozen=True)
class KernelConfig:
    """Rectangle-kernel smoothing settings.

    ``draws_per_obs`` points are drawn from each observation's implied
    rectangle. The default draw rule "normal-reference" samples each
    coordinate uniformly on the rectangle's standard-normal probability
    range and maps back through the normal quantile, which handles
    infinite sides natively and avoids the flat-smearing bias of raw
    uniforms. The rule "uniform" draws coordinates uniformly in levels;
    its infinite sides are truncated at the range of the finite implied
    bounds padded by ``truncation_pad`` error-scale units, or at an
    explicit ``truncation_box`` ((lo1, hi1), (lo2, hi2)). ``bandwidth``
    is "silverman" (per-coordinate rule on the pooled sample) or a fixed
    (h1, h2) pair.
    """

    draws_per_obs: int = 10
    bandwidth: object = "silverman"
    draw_rule: str = "normal-reference"
    truncation_box: object = None
    truncation_pad: float = 4.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.draws_per_obs < 1:
            raise ValueError("draws_per_obs must be at least 1")
        if self.draw_rule not in ("normal-reference", "uniform"):
            raise ValueError(f"unknown draw_rule {self.draw_rule!r}")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "silverman":
                raise ValueError(f"unknown bandwidth rule {self.bandwidth!r}")
        else:
            try:
                h1, h2 = self.bandwidth
            except TypeError:
                raise ValueError(
                    "bandwidth must be 'silverman' or a pair (h1, h2)"
                ) from None
            if not (h1 > 0 and h2 > 0):
                raise ValueError("fixed bandwidths must be positive")


def _silverman_bandwidth(points: np.ndarray) -> float:
    # bivariate normal-reference rule; the (4/(d+2))^(1/(d+4)) factor is 1 at d=2
    sd = float(np.std(points, ddof=1))
    return max(sd, 1e-12) * points.size ** (-1.0 / 6.0)


def kernel_smoothing_fit(
    data: Dataset,
    spec: LatticeSpec,
    model: IndexModel,
    config: KernelConfig,
    eval_axis1,
    eval_axis2,
) -> CdfGrid:
    """Gaussian product-kernel CDF of points pooled from implied rectangles.

    The estimate at a grid point is the average over pooled draws of the
    product of univariate Gaussian kernel CDFs, computed in closed form.
    Observations are processed in canonical rectangle order, so the result
    does not depend on how the dataset rows are arranged.
    """
    data.validate_against(spec)
    n = data.outcomes.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    axis1 = _validated_axis(eval_axis1, "eval_axis1")
    axis2 = _validated_axis(eval_axis2, "eval_axis2")
    lower, upper = rectangle_bounds(data.outcomes, data.covariates, spec, model)

    if config.draw_rule == "normal-reference":
        lo, hi = ndtr(lower), ndtr(upper)
    else:
        if config.truncation_box is not None:
            (b1lo, b1hi), (b2lo, b2hi) = config.truncation_box
            box_lo = np.array([b1lo, b2lo], dtype=np.float64)
            box_hi = np.array([b1hi, b2hi], dtype=np.float64)
        else:
            box_lo, box_hi = np.empty(2), np.empty(2)
            for d in range(2):
                finite = np.concatenate(
                    [lower[np.isfinite(lower[:, d]), d], upper[np.isfinite(upper[:, d]), d]]
                )
                box_lo[d] = finite.min() - config.truncation_pad
                box_hi[d] = finite.max() + config.truncation_pad
        lo = np.maximum(lower, box_lo)
        hi = np.minimum(upper, box_hi)
    if np.any(hi <= lo):
        raise ValueError("truncation box leaves an empty rectangle")

    order = np.lexsort((hi[:, 1], lo[:, 1], hi[:, 0], lo[:, 0]))
    lo, hi = lo[order], hi[order]
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    draws = rng.random((n, config.draws_per_obs, 2))
    points = (lo[:, None, :] + draws * (hi - lo)[:, None, :]).reshape(-1, 2)
    if config.draw_rule == "normal-reference":
        points = ndtri(np.clip(points, 1e-15, 1.0 - 1e-15))

    if isinstance(config.bandwidth, str):
        h1 = _silverman_bandwidth(points[:, 0])
        h2 = _silverman_bandwidth(points[:, 1])
    else:
        h1, h2 = (float(v) for v in config.bandwidth)
    c1 = ndtr((axis1[:, None] - points[None, :, 0]) / h1)
    c2 = ndtr((axis2[:, None] - points[None, :, 1]) / h2)
    values = _repaired(c1 @ c2.T / points.shape[0])
    return CdfGrid(axis1, axis2, values)


@dataclass(frozen=True)
class SieveConfig:
    """Tensor-product B-spline sieve settings.

    ``pinned_thresholds`` gives, per dimension, the 1-based index of the
    threshold normalized to a known value and that value; the first index
    coefficient of each dimension is normalized to 1. The spline
    coefficients h are constrained to be nondecreasing in each index and to
    lie in [0, 1], which makes the fitted surface a CDF on the knot range.
    """

    degree: tuple[int, int] = (2, 2)
    interior_knots: tuple[int, int] = (3, 3)
    knot_range: tuple[float, float] = (-4.0, 4.0)
    pinned_thresholds: tuple[tuple[int, float], ...] = ((1, -1.0), (1, -1.0))
    max_iter: int = 200
    tol: float = 1e-9
    eval_nodes: int = 33
    mass_smoothing: float = 1e-10

    def __post_init__(self) -> None:
        if any(q < 1 for q in self.degree):
            raise ValueError("spline degree must be at least 1 in each dimension")
        if any(s < 0 for s in self.interior_knots):
            raise ValueError("interior knot counts must be nonnegative")
        if not self.knot_range[0] < self.knot_range[1]:
            raise ValueError("knot range must be an increasing interval")
        if len(self.pinned_thresholds) != 2:
            raise ValueError("pinned_thresholds must name one threshold per dimension")


@dataclass(frozen=True)
class SieveResult:
    beta: tuple[tuple[float, ...], ...]
    thresholds: tuple[tuple[float, ...], ...]
    coefficients: np.ndarray
    grid: CdfGrid
    loglik: float
    loglik_initial: float
    converged: bool
    iterations: int
    constraint_slack_min: float
    message: str


def _clamped_knots(lo: float, hi: float, interior: int, degree: int) -> np.ndarray:
    inner = np.linspace(lo, hi, interior + 2)[1:-1]
    return np.concatenate([np.full(degree + 1, lo), inner, np.full(degree + 1, hi)])


def _greville(knots: np.ndarray, degree: int) -> np.ndarray:
    n_basis = knots.size - degree - 1
    return np.array([knots[a + 1 : a + degree + 1].mean() for a in range(n_basis)])


def _basis_rows(values: np.ndarray, knots: np.ndarray, degree: int) -> np.ndarray:
    """Dense basis rows; -inf rows are zero, +inf rows clamp to the top."""
    lo, hi = knots[degree], knots[-degree - 1]
    out = np.zeros((values.size, knots.size - degree - 1))
    finite = np.isfinite(values) | (values == np.inf)
    clamped = np.clip(values[finite], lo, hi)
    out[finite] = BSpline.design_matrix(clamped, knots, degree).toarray()
    return out


def _monotone_constraints(k1: int, k2: int) -> np.ndarray:
    rows = []
    for a in range(k1 - 1):
        for b in range(k2):
            row = np.zeros(k1 * k2)
            row[(a + 1) * k2 + b] = 1.0
            row[a * k2 + b] = -1.0
            rows.append(row)
    for a in range(k1):
        for b in range(k2 - 1):
            row = np.zeros(k1 * k2)
            row[a * k2 + b + 1] = 1.0
            row[a * k2 + b] = -1.0
            rows.append(row)
    return np.array(rows)


def sieve_mle_fit(
    data: Dataset,
    category_counts: tuple[int, int],
    config: SieveConfig = SieveConfig(),
) -> SieveResult:
    """One-step sieve MLE of indices, thresholds, and the error CDF.

    The error CDF is a tensor-product B-spline whose coefficient matrix is
    nondecreasing in each index with entries in [0, 1]. Cell probabilities
    are four-corner signed sums of the spline surface, linear in the
    coefficients, so the coefficient block of the gradient is analytic;
    the few structural parameters use central differences. Optimization is
    sequential quadratic programming under the linear order constraints.
    """
    m1, m2 = category_counts
    if data.outcomes.shape[1] != 2:
        raise ValueError("sieve estimator requires two outcome dimensions")
    k_counts = tuple(np.asarray(x).shape[1] for x in data.covariates)
    for d, (pin_idx, _) in enumerate(config.pinned_thresholds, start=1):
        if not 1 <= pin_idx <= (m1, m2)[d - 1] - 1:
            raise ValueError(
                f"dimension {d}: pinned threshold index {pin_idx} outside "
                f"1..{(m1, m2)[d - 1] - 1}"
            )

    lo, hi = config.knot_range
    knots = tuple(
        _clamped_knots(lo, hi, config.interior_knots[d], config.degree[d]) for d in range(2)
    )
    nb = tuple(knots[d].size - config.degree[d] - 1 for d in range(2))
    xs = tuple(np.asarray(x, dtype=np.float64) for x in data.covariates)

    init = auto_init(data, (m1, m2))
    scales = []
    for d in range(2):
        s = init.beta[d][0]
        if abs(s) < 1e-8:
            raise ValueError(
                f"dimension {d + 1}: scale normalization needs a nonzero first coefficient"
            )
        scales.append(s)

    def structural_sizes():
        return [(k_counts[d] - 1, (m1, m2)[d] - 2) for d in range(2)]

    def unpack(z: np.ndarray):
        pos = 0
        beta, alpha = [], []
        for d in range(2):
            nb_free, ng = structural_sizes()[d]
            b = np.concatenate([[1.0], z[pos : pos + nb_free]])
            pos += nb_free
            gaps = z[pos : pos + ng] ** 2
            pos += ng
            pin_idx, pin_val = config.pinned_thresholds[d]
            m_d = (m1, m2)[d]
            alpha_d = np.empty(m_d - 1)
            alpha_d[pin_idx - 1] = pin_val
            g = 0
            for j in range(pin_idx, m_d - 1):
                alpha_d[j] = alpha_d[j - 1] + gaps[g]
                g += 1
            for j in range(pin_idx - 2, -1, -1):
                alpha_d[j] = alpha_d[j + 1] - gaps[g]
                g += 1
            beta.append(b)
            alpha.append(alpha_d)
        h = z[pos:].reshape(nb)
        return beta, alpha, h

    def corner_blocks(beta, alpha):
        blocks = []
        for d in range(2):
            idx = xs[d] @ beta[d]
            ext = np.concatenate([[-np.inf], alpha[d], [np.inf]])
            j = data.outcomes[:, d]
            low = ext[j - 1] - idx
            up = ext[j] - idx
            b_low = _basis_rows(low, knots[d], config.degree[d])
            b_up = _basis_rows(up, knots[d], config.degree[d])
            blocks.append(b_up - b_low)
        return blocks

    delta = config.mass_smoothing

    def masses(blocks, h):
        return np.einsum("ni,ij,nj->n", blocks[0], h, blocks[1])

    def negloglik_parts(z: np.ndarray):
        beta, alpha, h = unpack(z)
        blocks = corner_blocks(beta, alpha)
        p = masses(blocks, h)
        p_safe = 0.5 * (p + np.sqrt(p * p + delta * delta))
        p_safe = np.maximum(p_safe, 1e-300)
        return beta, alpha, h, blocks, p, p_safe

    def fun(z: np.ndarray) -> float:
        *_, p_safe = negloglik_parts(z)
        return -float(np.mean(np.log(p_safe)))

    n_struct = sum(a + b for a, b in structural_sizes())

    def jac(z: np.ndarray) -> np.ndarray:
        beta, alpha, h, blocks, p, p_safe = negloglik_parts(z)
        grad = np.empty(z.size)
        step = 1e-6
        for i in range(n_struct):
            zp, zm = z.copy(), z.copy()
            zp[i] += step
            zm[i] -= step
            grad[i] = (fun(zp) - fun(zm)) / (2 * step)
        weight = 0.5 * (1.0 + p / np.sqrt(p * p + delta * delta)) / p_safe
        gh = -np.einsum("n,ni,nj->ij", weight, blocks[0], blocks[1]) / p.size
        grad[n_struct:] = gh.ravel()
        return grad

    # start from univariate fits rescaled to the normalization, and from the
    # independence product CDF matching the implied error location
    z0_parts = []
    shifts = []
    for d in range(2):
        b = np.asarray(init.beta[d]) / scales[d]
        a = np.asarray(init.thresholds[d]) / scales[d]
        pin_idx, pin_val = config.pinned_thresholds[d]
        shifts.append(pin_val - a[pin_idx - 1])
        a = a + shifts[-1]
        z0_parts.append(b[1:])
        gaps = np.sqrt(np.maximum(np.diff(a), 1e-6))
        z0_parts.append(gaps)
    xi = tuple(_greville(knots[d], config.degree[d]) for d in range(2))
    h0 = ndtr(abs(scales[0]) * (xi[0][:, None] - shifts[0])) * ndtr(
        abs(scales[1]) * (xi[1][None, :] - shifts[1])
    )
    z0 = np.concatenate([np.concatenate(z0_parts), h0.ravel()])

    cons_matrix = _monotone_constraints(*nb)
    full_cons = np.hstack([np.zeros((cons_matrix.shape[0], n_struct)), cons_matrix])
    constraints = [
        {
            "type": "ineq",
            "fun": lambda z: full_cons @ z,
            "jac": lambda z: full_cons,
        }
    ]
    bounds = [(None, None)] * n_struct + [(0.0, 1.0)] * (nb[0] * nb[1])
    f0 = fun(z0)
    res = minimize(
        fun,
        z0,
        jac=jac,
        method="SLSQP",
        bounds=bounds,
        constraints=constraints,
        options={"maxiter": config.max_iter, "ftol": config.tol},
    )
    z_final, message = res.x, res.message
    converged = bool(res.success)
    if not np.isfinite(res.fun) or res.fun > f0 + 1e-12:
        z_final, converged = z0, False
        message = "no improvement over feasible start; keeping start"

    beta, alpha, h = unpack(z_final)
    raw_slack = float(min((cons_matrix @ h.ravel()).min(initial=np.inf), h.min(), 1.0 - h.max()))
    h = _repaired(h)
    z_final = np.concatenate([z_final[:n_struct], h.ravel()])
    final_loglik = -fun(z_final)

    eval_axis = np.linspace(lo, hi, config.eval_nodes)
    b1 = _basis_rows(eval_axis, knots[0], config.degree[0])
    b2 = _basis_rows(eval_axis, knots[1], config.degree[1])
    grid = CdfGrid(eval_axis, eval_axis, _repaired(b1 @ h @ b2.T))
    return SieveResult(
        beta=tuple(tuple(float(v) for v in b) for b in beta),
        thresholds=tuple(tuple(float(v) for v in a) for a in alpha),
        coefficients=h,
        grid=grid,
        loglik=float(final_loglik),
        loglik_initial=float(-f0),
        converged=converged,
        iterations=int(res.nit),
        constraint_slack_min=raw_slack,
        message=str(message),
    )

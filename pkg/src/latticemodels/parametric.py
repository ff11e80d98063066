"""Parametric maximum likelihood for the bivariate ordered lattice model.

The average log likelihood of an observed cell is the log of its rectangle
probability, a four-corner signed sum of the bivariate normal CDF. The
optimizer works in an unconstrained parameterization: coefficients are free,
each threshold vector is (first value, sqrt of consecutive gaps), and the
correlation is atanh-transformed. Gradients are numerical (central
differences with batched likelihood evaluation); standard errors come from
the outer product of per-observation scores or the sandwich form, mapped
back to the original coordinates by a numerical delta method.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr

from .distributions import bivariate_normal_cdf, std_normal_quantile
from .lattice import Dataset, IndexModel, LatticeSpec

__all__ = [
    "FitOptions",
    "FitResult",
    "ParamVector",
    "auto_init",
    "fit",
    "log_likelihood",
    "loglik_gradient",
    "per_obs_loglik",
    "standard_errors",
    "transform",
    "untransform",
]

_MASS_FLOOR = 1e-300


@dataclass(frozen=True)
class ParamVector:
    """Bivariate lattice model parameters in natural coordinates."""

    beta: tuple[tuple[float, ...], ...]
    thresholds: tuple[tuple[float, ...], ...]
    rho: float

    def __post_init__(self) -> None:
        model = IndexModel(self.beta)
        for d, t in enumerate(self.thresholds, start=1):
            tt = tuple(float(v) for v in t)
            if any(not math.isfinite(v) for v in tt):
                raise ValueError(f"dimension {d}: thresholds must be finite")
            if any(b <= a for a, b in zip(tt, tt[1:])):
                raise ValueError(f"dimension {d}: thresholds must be strictly increasing")
        object.__setattr__(self, "beta", model.beta)
        object.__setattr__(
            self, "thresholds", tuple(tuple(float(v) for v in t) for t in self.thresholds)
        )
        r = float(self.rho)
        if not (math.isfinite(r) and -1.0 < r < 1.0):
            raise ValueError(f"rho must lie strictly inside (-1, 1), got {self.rho}")
        object.__setattr__(self, "rho", r)
        if len(self.beta) != len(self.thresholds):
            raise ValueError("beta and thresholds must cover the same dimensions")

    @property
    def dims(self) -> int:
        return len(self.beta)

    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.thresholds)

    def model(self) -> IndexModel:
        return IndexModel(self.beta)

    def shape(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """(covariate counts per dim, category counts per dim)."""
        return (
            tuple(len(b) for b in self.beta),
            tuple(len(t) + 1 for t in self.thresholds),
        )

    def names(self, covariate_names=None) -> tuple[str, ...]:
        """Parameter names in packing order (betas, thresholds, rho)."""
        out = []
        for d, b in enumerate(self.beta, start=1):
            cn = None if covariate_names is None else covariate_names[d - 1]
            for j in range(len(b)):
                label = cn[j] if cn is not None else f"{j + 1}"
                out.append(f"beta{d}_{label}")
        for d, t in enumerate(self.thresholds, start=1):
            out.extend(f"alpha{d}_{j + 1}" for j in range(len(t)))
        out.append("rho")
        return tuple(out)

    def pack_original(self) -> np.ndarray:
        """Flat vector in natural coordinates, aligned with :meth:`names`."""
        parts = [v for b in self.beta for v in b]
        parts += [v for t in self.thresholds for v in t]
        parts.append(self.rho)
        return np.asarray(parts, dtype=float)

    def to_dict(self) -> dict:
        return {
            "beta": [list(b) for b in self.beta],
            "thresholds": [list(t) for t in self.thresholds],
            "rho": self.rho,
        }

    @staticmethod
    def from_dict(d: dict) -> "ParamVector":
        return ParamVector(
            tuple(tuple(b) for b in d["beta"]),
            tuple(tuple(t) for t in d["thresholds"]),
            float(d["rho"]),
        )


def transform(theta: ParamVector) -> np.ndarray:
    """Map to unconstrained coordinates: betas, (first, sqrt gaps), atanh rho."""
    parts = [v for b in theta.beta for v in b]
    for t in theta.thresholds:
        if t:
            parts.append(t[0])
            parts.extend(math.sqrt(b - a) for a, b in zip(t, t[1:]))
    parts.append(math.atanh(theta.rho))
    return np.asarray(parts, dtype=float)


def untransform(vec: np.ndarray, shape) -> ParamVector:
    """Inverse of :func:`transform`; ``shape`` is a ParamVector or (k, m) tuple."""
    if isinstance(shape, ParamVector):
        k_counts, m_counts = shape.shape()
    else:
        k_counts, m_counts = (tuple(int(v) for v in s) for s in shape)
    vec = np.asarray(vec, dtype=float)
    expected = sum(k_counts) + sum(m - 1 for m in m_counts) + 1
    if vec.shape != (expected,):
        raise ValueError(f"expected vector of length {expected}, got shape {vec.shape}")
    pos = 0
    beta = []
    for k in k_counts:
        beta.append(tuple(vec[pos : pos + k]))
        pos += k
    thresholds = []
    for m in m_counts:
        block = vec[pos : pos + m - 1]
        pos += m - 1
        if m == 1:
            thresholds.append(())
        else:
            t = [float(block[0])]
            for v in block[1:]:
                t.append(t[-1] + float(v) ** 2)
            thresholds.append(tuple(t))
    rho = math.tanh(float(vec[pos]))
    return ParamVector(tuple(beta), tuple(thresholds), rho)


@dataclass
class _Cache:
    """Per-fit precomputation: covariates and outcome index tables."""

    x: tuple[np.ndarray, ...]
    j: tuple[np.ndarray, ...]
    n: int

    @staticmethod
    def build(data: Dataset) -> "_Cache":
        return _Cache(
            x=tuple(np.ascontiguousarray(c) for c in data.covariates),
            j=tuple(data.outcomes[:, d] for d in range(data.dims)),
            n=data.n,
        )


def _rect_corners(cache: _Cache, theta: ParamVector):
    """Upper/lower rectangle corner coordinates per dimension."""
    corners = []
    for d in range(2):
        ext = np.concatenate(([-np.inf], theta.thresholds[d], [np.inf]))
        idx = cache.x[d] @ np.asarray(theta.beta[d])
        corners.append((ext[cache.j[d]] - idx, ext[cache.j[d] - 1] - idx))
    return corners


def _cell_masses(cache: _Cache, theta: ParamVector) -> np.ndarray:
    (u1, l1), (u2, l2) = _rect_corners(cache, theta)
    n = cache.n
    a = np.concatenate((u1, l1, u1, l1))
    b = np.concatenate((u2, u2, l2, l2))
    f = bivariate_normal_cdf(a, b, theta.rho)
    return f[:n] - f[n : 2 * n] - f[2 * n : 3 * n] + f[3 * n :]


def _check_data(data: Dataset, theta: ParamVector) -> None:
    if data.dims != 2 or theta.dims != 2:
        raise ValueError("parametric likelihood is defined for two dimensions")
    data.validate_against(theta.lattice())
    for d in range(2):
        if data.covariates[d].shape[1] != len(theta.beta[d]):
            raise ValueError(
                f"dimension {d + 1}: {data.covariates[d].shape[1]} covariates "
                f"but {len(theta.beta[d])} coefficients"
            )


def per_obs_loglik(data: Dataset, theta: ParamVector) -> np.ndarray:
    """Per-observation log cell probabilities; errors on vanishing mass."""
    _check_data(data, theta)
    cache = _Cache.build(data)
    mass = _cell_masses(cache, theta)
    bad = ~(mass >= _MASS_FLOOR)
    if bad.any():
        i = int(np.argmax(bad))
        cell = tuple(int(v) for v in data.outcomes[i])
        raise ValueError(
            f"observation {i} in cell {cell} has cell probability {mass[i]:.3e} "
            f"below the floor {_MASS_FLOOR:g}; the model is separating or degenerate"
        )
    return np.log(mass)


def log_likelihood(data: Dataset, theta: ParamVector) -> float:
    """Average log likelihood of the sample at theta."""
    return float(np.mean(per_obs_loglik(data, theta)))


def _neg_loglik_factory(cache: _Cache, shape):
    def neg_loglik(vec: np.ndarray) -> float:
        try:
            theta = untransform(vec, shape)
        except ValueError:
            return np.inf
        mass = _cell_masses(cache, theta)
        if not np.all(mass > 0.0):
            return np.inf
        return -float(np.mean(np.log(np.maximum(mass, _MASS_FLOOR))))

    return neg_loglik


def _fd_gradient(fun, vec: np.ndarray, step: float) -> np.ndarray:
    p = vec.size
    grad = np.empty(p)
    for i in range(p):
        e = np.zeros(p)
        e[i] = step
        grad[i] = (fun(vec + e) - fun(vec - e)) / (2.0 * step)
    return grad


def loglik_gradient(
    data: Dataset, vec: np.ndarray, shape, step: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient of the average log likelihood in
    transformed coordinates."""
    cache = _Cache.build(data)
    neg = _neg_loglik_factory(cache, shape)
    return -_fd_gradient(neg, np.asarray(vec, dtype=float), step)


@dataclass(frozen=True)
class FitOptions:
    gtol: float = 1e-6
    maxiter: int = 500
    fd_step: float = 1e-6
    se_kind: str | None = "outer-product"

    def to_dict(self) -> dict:
        return {
            "gtol": self.gtol,
            "maxiter": self.maxiter,
            "fd_step": self.fd_step,
            "se_kind": self.se_kind,
        }


@dataclass
class FitResult:
    estimate: ParamVector
    names: tuple[str, ...]
    loglik: float
    converged: bool
    iterations: int
    gradient_norm: float
    n: int
    init: ParamVector
    fingerprint: str
    path: tuple[float, ...]
    se: np.ndarray | None = None
    se_kind: str | None = None
    cov: np.ndarray | None = None
    message: str = ""

    def se_table(self) -> list[tuple[str, float, float]]:
        """(name, estimate, se) rows in packing order."""
        est = self.estimate.pack_original()
        ses = self.se if self.se is not None else np.full(est.size, np.nan)
        return [(nm, float(e), float(s)) for nm, e, s in zip(self.names, est, ses)]

    def to_dict(self) -> dict:
        d = {
            "estimate": self.estimate.to_dict(),
            "names": list(self.names),
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "gradient_norm": self.gradient_norm,
            "n": self.n,
            "init": self.init.to_dict(),
            "fingerprint": self.fingerprint,
            "se_kind": self.se_kind,
            "message": self.message,
        }
        if self.se is not None:
            d["se"] = [float(v) for v in self.se]
        return d


def _fit_univariate(y: np.ndarray, x: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Ordered probit for one dimension; returns (beta, thresholds)."""
    n, k = x.shape
    freqs = np.bincount(y, minlength=m + 1)[1:] / n
    cum = np.cumsum(freqs)[:-1]
    thr0 = std_normal_quantile(np.clip(cum, 1e-6, 1 - 1e-6))
    thr0 = np.atleast_1d(thr0)
    # transformed start: beta 0, first threshold, sqrt gaps
    vec0 = np.concatenate((np.zeros(k), [thr0[0]], np.sqrt(np.diff(thr0))))
    ju = y
    jl = y - 1

    def unpack(vec):
        beta = vec[:k]
        t = [vec[k]]
        for v in vec[k + 1 :]:
            t.append(t[-1] + v * v)
        return beta, np.asarray(t)

    def neg(vec):
        beta, t = unpack(vec)
        ext = np.concatenate(([-np.inf], t, [np.inf]))
        idx = x @ beta
        mass = ndtr(ext[ju] - idx) - ndtr(ext[jl] - idx)
        if not np.all(mass > 0.0):
            return np.inf
        return -float(np.mean(np.log(np.maximum(mass, _MASS_FLOOR))))

    res = minimize(
        neg,
        vec0,
        jac=lambda v: _fd_gradient(neg, v, 1e-6),
        method="BFGS",
        options={"gtol": 1e-6, "maxiter": 200},
    )
    beta, t = unpack(res.x)
    return beta, t


def auto_init(data: Dataset, m_counts) -> ParamVector:
    """Starting values: univariate ordered probits per dimension plus a
    normal-scores correlation of interval-midpoint quantiles."""
    m_counts = tuple(int(m) for m in m_counts)
    betas, thrs, zscores = [], [], []
    for d in range(2):
        y = data.outcomes[:, d]
        beta, t = _fit_univariate(y, data.covariates[d], m_counts[d])
        betas.append(tuple(beta))
        thrs.append(tuple(t))
        ext = np.concatenate(([-np.inf], t, [np.inf]))
        idx = data.covariates[d] @ beta
        pmid = 0.5 * (ndtr(ext[y] - idx) + ndtr(ext[y - 1] - idx))
        zscores.append(std_normal_quantile(np.clip(pmid, 1e-10, 1 - 1e-10)))
    r = float(np.corrcoef(zscores[0], zscores[1])[0, 1])
    if not math.isfinite(r):
        r = 0.0
    r = min(max(r, -0.9), 0.9)
    return ParamVector(tuple(betas), tuple(thrs), r)


def _fingerprint(options: FitOptions, n: int, shape, x0: np.ndarray) -> str:
    payload = json.dumps(
        {
            "options": options.to_dict(),
            "n": n,
            "shape": [list(s) for s in shape],
            "x0": [round(float(v), 12) for v in x0],
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def fit(
    data: Dataset,
    init: ParamVector | None = None,
    options: FitOptions | None = None,
    m_counts=None,
) -> FitResult:
    """Maximum likelihood fit of the bivariate ordered lattice model.

    The data must be nondegenerate: every marginal category observed at
    least once. Category counts default to the largest observed category
    per dimension when ``m_counts`` is not given and no init is supplied.
    """
    options = options or FitOptions()
    if data.dims != 2:
        raise ValueError("parametric fit handles two-dimensional lattices")
    if init is not None:
        m_counts = init.shape()[1]
    elif m_counts is None:
        m_counts = tuple(int(data.outcomes[:, d].max()) for d in range(2))
    # degeneracy check against the target category counts (threshold values
    # are placeholders; only the counts matter here)
    spec = LatticeSpec(tuple(tuple(float(j) for j in range(m - 1)) for m in m_counts))
    missing = data.missing_categories(spec)
    if missing:
        raise ValueError(
            "degenerate data, cannot fit: unobserved (dimension, category) pairs "
            + ", ".join(f"({d},{c})" for d, c in missing)
        )
    if init is None:
        init = auto_init(data, m_counts)
    _check_data(data, init)

    cache = _Cache.build(data)
    shape = init.shape()
    neg = _neg_loglik_factory(cache, shape)
    x0 = transform(init)
    path = [-neg(x0)]

    def jac(vec):
        return _fd_gradient(neg, vec, options.fd_step)

    res = minimize(
        neg,
        x0,
        jac=jac,
        method="BFGS",
        callback=lambda xk: path.append(-neg(xk)),
        options={"gtol": options.gtol, "maxiter": options.maxiter},
    )
    gnorm = float(np.max(np.abs(res.jac))) if res.jac is not None else np.inf
    converged = bool(gnorm <= options.gtol * 10 or res.success)
    estimate = untransform(res.x, shape)
    loglik = log_likelihood(data, estimate)

    result = FitResult(
        estimate=estimate,
        names=estimate.names(tuple(data.names)),
        loglik=loglik,
        converged=converged,
        iterations=int(res.nit),
        gradient_norm=gnorm,
        n=data.n,
        init=init,
        fingerprint=_fingerprint(options, data.n, shape, x0),
        path=tuple(path),
        message=str(res.message),
    )
    if options.se_kind is not None:
        se, cov = standard_errors(data, estimate, options.se_kind)
        result.se = se
        result.cov = cov
        result.se_kind = options.se_kind
    return result


def _per_obs_scores(cache: _Cache, vec: np.ndarray, shape, step: float) -> np.ndarray:
    """(n, p) matrix of per-observation score contributions, central FD."""
    p = vec.size

    def per_obs(v):
        theta = untransform(v, shape)
        mass = _cell_masses(cache, theta)
        if not np.all(mass > 0.0):
            raise ValueError("vanishing cell mass while differencing scores")
        return np.log(np.maximum(mass, _MASS_FLOOR))

    scores = np.empty((cache.n, p))
    for i in range(p):
        e = np.zeros(p)
        e[i] = step
        scores[:, i] = (per_obs(vec + e) - per_obs(vec - e)) / (2.0 * step)
    return scores


def standard_errors(
    data: Dataset, theta: ParamVector, kind: str = "outer-product"
) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic standard errors at theta in natural coordinates.

    ``kind`` is "outer-product" (inverse mean score outer product over n) or
    "sandwich" (numeric Hessian bread around the score outer product). The
    covariance is delta-method transported from the unconstrained
    coordinates. Returns (se, covariance).
    """
    if kind not in ("outer-product", "sandwich"):
        raise ValueError(f"unknown standard error kind {kind!r}")
    _check_data(data, theta)
    gaps = [np.diff(t) for t in theta.thresholds if len(t) > 1]
    if any(g.min() < 1e-8 for g in gaps if g.size) or abs(theta.rho) > 1 - 1e-8:
        raise ValueError("theta is on the parameter space boundary; cannot compute SEs")

    cache = _Cache.build(data)
    shape = theta.shape()
    vec = transform(theta)
    step = 1e-5
    n = cache.n

    scores = _per_obs_scores(cache, vec, shape, step)
    v_mat = scores.T @ scores / n
    p = vec.size
    cond = np.linalg.cond(v_mat)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(
            "information matrix is numerically singular; run the identification "
            "diagnostics on this specification"
        )
    if kind == "outer-product":
        cov_trans = np.linalg.inv(v_mat) / n
    else:
        neg = _neg_loglik_factory(cache, shape)
        hess = np.empty((p, p))
        for i in range(p):
            e = np.zeros(p)
            e[i] = step
            gp = _fd_gradient(neg, vec + e, step)
            gm = _fd_gradient(neg, vec - e, step)
            hess[i] = (gp - gm) / (2.0 * step)
        hess = 0.5 * (hess + hess.T)  # of the negative mean loglik
        a_inv = np.linalg.inv(hess)
        cov_trans = a_inv @ v_mat @ a_inv / n

    # numerical delta method onto natural coordinates
    q = theta.pack_original().size
    jac = np.empty((q, p))
    h = 1e-6
    for i in range(p):
        e = np.zeros(p)
        e[i] = h
        hi = untransform(vec + e, shape).pack_original()
        lo = untransform(vec - e, shape).pack_original()
        jac[:, i] = (hi - lo) / (2.0 * h)
    cov = jac @ cov_trans @ jac.T
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return se, cov

"""Identification diagnostics for lattice models.

Executable counterparts of the model's identification conditions: a rank
check on each dimension's augmented design, overlap of adjacent threshold
shift intervals, coverage of (0, 1) by the marginal cut probabilities,
exclusive-covariate sup/inf attainment for the joint CDF, and the three
correlation conditions (pivot, sign flip, exclusion) for the gaussian
parametric model. :func:`classify` rolls the checks into one of the nested
levels ``params-only < plus-threshold-gaps < plus-marginals <
plus-joint-cdf``.

Every check runs in two modes. Given a :class:`~.simulation.DgpSpec` it is
analytic: index ranges come from interval arithmetic over the declared
covariate supports and the error law is used exactly. Given a
:class:`~.lattice.Dataset` plus first-stage index and threshold parameters
it is empirical: index ranges use 0.5% trimmed sample quantiles, margins
are the fitted gaussian first stage, and exclusivity must be declared
explicitly since it is not derivable from a design matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import bivariate_normal_cdf, std_normal_cdf
from .lattice import Dataset, IndexModel, LatticeSpec
from .simulation import DgpSpec, generate

__all__ = [
    "LEVELS",
    "IdentificationReport",
    "RhoConditionFlags",
    "ShiftAttainment",
    "check_coverage",
    "check_exclusive_shift",
    "check_rank",
    "check_rho_conditions",
    "check_threshold_gap_overlap",
    "classify",
    "format_report",
]

LEVELS = (
    "none",
    "params-only",
    "plus-threshold-gaps",
    "plus-marginals",
    "plus-joint-cdf",
)

_TOL = 1e-3
_TRIM = 0.005
_STRICT = 1e-12
_SPEC_SAMPLE = 4096
_SPEC_SEED = 321907
_MIN_INTERVAL_VALUES = 50


@dataclass(frozen=True)
class ShiftAttainment:
    """Sup/inf attainment of the joint CDF under an exclusive shift in one dimension."""

    dim: int
    inf_attained: bool
    sup_attained: bool

    @property
    def ok(self) -> bool:
        return self.inf_attained and self.sup_attained


@dataclass(frozen=True)
class RhoConditionFlags:
    """The three sufficient conditions for correlation identification.

    ``pivot``: some attainable index pins a cut probability at one half.
    ``sign_flip``: two support points flip one dimension's cut probability
    across one half while the other dimension stays on a fixed side.
    ``exclusion``: an excluded covariate with nonzero coefficient moves the
    joint cell probability while the other index is held fixed.
    """

    pivot: bool
    sign_flip: bool
    exclusion: bool

    def to_dict(self) -> dict:
        return {
            "pivot": self.pivot,
            "sign_flip": self.sign_flip,
            "exclusion": self.exclusion,
        }


@dataclass(frozen=True)
class _Exclusive:
    """One covariate entering a single dimension: coefficient, attainable
    value range, and the index contribution of the remaining covariates at
    their typical values."""

    name: str
    coef: float
    support: tuple[float, float]
    others: float


@dataclass(frozen=True)
class _Frame:
    """Uniform view of a spec or a dataset with first-stage parameters."""

    lattice: LatticeSpec
    model: IndexModel
    designs: tuple[np.ndarray, ...]
    index_ranges: tuple[tuple[float, float], ...]
    margin_cdfs: tuple
    typical_index: tuple[float, ...]
    exclusives: tuple[tuple[_Exclusive, ...], ...] | None
    rho: float | None
    independent: bool = False


def _law_typical(law) -> float:
    lo, hi = law.support()
    if np.isfinite(lo) and np.isfinite(hi):
        if law.kind == "choice":
            return float(np.median(np.asarray(law.values)))
        return 0.5 * (lo + hi)
    if law.kind in ("normal", "laplace", "logistic"):
        return law.params[0]
    return 0.0


def _typical_values(spec: DgpSpec) -> dict[str, float]:
    vals: dict[str, float] = {}
    for cov in spec.covariates:
        v = _law_typical(cov.law)
        for dep, coef in cov.linkage:
            v += coef * vals[dep]
        vals[cov.name] = v
    return vals


def _spec_frame(spec: DgpSpec) -> _Frame:
    sample = generate(spec, _SPEC_SAMPLE, seed=_SPEC_SEED)
    typ = _typical_values(spec)
    gaussian = spec.errors.kind == "gaussian"
    margins, typical_index, exclusives = [], [], []
    for d in range(1, spec.lattice.dims + 1):
        margins.append(std_normal_cdf if gaussian else spec.errors.margins[d - 1].cdf)
        covs = spec.dimension_covariates(d)
        beta = spec.model.beta[d - 1]
        t_index = sum(b * typ[c.name] for c, b in zip(covs, beta))
        typical_index.append(t_index)
        exc = []
        for pos, cov in enumerate(covs):
            if cov.dims == (d,):
                exc.append(
                    _Exclusive(
                        cov.name,
                        beta[pos],
                        spec.value_support(cov.name),
                        t_index - beta[pos] * typ[cov.name],
                    )
                )
        exclusives.append(tuple(exc))
    return _Frame(
        spec.lattice,
        spec.model,
        sample.covariates,
        tuple(spec.index_support(d) for d in range(1, spec.lattice.dims + 1)),
        tuple(margins),
        tuple(typical_index),
        tuple(exclusives),
        rho=spec.errors.rho if gaussian else None,
        independent=not gaussian,
    )


def _exclusive_names(exclusive, d: int) -> tuple[str, ...]:
    got = exclusive.get(d, ())
    if isinstance(got, str):
        return (got,)
    return tuple(got)


def _data_frame(data: Dataset, model, lattice, exclusive, rho) -> _Frame:
    if model is None or lattice is None:
        raise ValueError(
            "data-based checks need first-stage parameters: pass model= and lattice="
        )
    data.validate_against(lattice)
    if len(model.beta) != data.dims:
        raise ValueError(
            f"first-stage model has {len(model.beta)} dimensions, data {data.dims}"
        )
    ranges, typical_index, exclusives = [], [], []
    for d in range(1, data.dims + 1):
        x = data.covariates[d - 1]
        beta = np.asarray(model.beta[d - 1])
        if x.shape[1] != beta.size:
            raise ValueError(
                f"dimension {d}: {x.shape[1]} covariate columns "
                f"but {beta.size} first-stage coefficients"
            )
        idx = x @ beta
        qlo, qhi = np.quantile(idx, [_TRIM, 1.0 - _TRIM])
        ranges.append((float(qlo), float(qhi)))
        med = np.median(x, axis=0)
        typical_index.append(float(med @ beta))
        if exclusive is not None:
            exc = []
            for nm in _exclusive_names(exclusive, d):
                try:
                    pos = data.names[d - 1].index(nm)
                except ValueError:
                    raise ValueError(
                        f"dimension {d}: no covariate column named {nm!r}"
                    ) from None
                col = x[:, pos]
                slo, shi = np.quantile(col, [_TRIM, 1.0 - _TRIM])
                exc.append(
                    _Exclusive(
                        nm,
                        float(beta[pos]),
                        (float(slo), float(shi)),
                        typical_index[-1] - float(beta[pos]) * float(np.median(col)),
                    )
                )
            exclusives.append(tuple(exc))
    return _Frame(
        lattice,
        model,
        data.covariates,
        tuple(ranges),
        (std_normal_cdf,) * data.dims,
        tuple(typical_index),
        tuple(exclusives) if exclusive is not None else None,
        rho=float(rho) if rho is not None else None,
    )


def _frame(source, *, model=None, lattice=None, exclusive=None, rho=None) -> _Frame:
    if isinstance(source, DgpSpec):
        return _spec_frame(source)
    if isinstance(source, Dataset):
        return _data_frame(source, model, lattice, exclusive, rho)
    raise TypeError(f"expected DgpSpec or Dataset, got {type(source).__name__}")


def _check_dim(frame: _Frame, d: int) -> None:
    if not 1 <= d <= frame.lattice.dims:
        raise ValueError(f"dimension must lie in 1..{frame.lattice.dims}, got {d}")


def check_rank(source, d: int) -> bool:
    """True iff the augmented design [1, x_d] has full numerical column rank.

    Columns are rescaled to unit norm first so the verdict does not depend
    on covariate units; an all-zero column stays rank deficient.
    """
    if isinstance(source, DgpSpec):
        designs = generate(source, _SPEC_SAMPLE, seed=_SPEC_SEED).covariates
    elif isinstance(source, Dataset):
        designs = source.covariates
    else:
        raise TypeError(f"expected DgpSpec or Dataset, got {type(source).__name__}")
    if not 1 <= d <= len(designs):
        raise ValueError(f"dimension must lie in 1..{len(designs)}, got {d}")
    return _rank_ok(designs[d - 1])


def _rank_ok(x: np.ndarray) -> bool:
    a = np.column_stack([np.ones(x.shape[0]), x])
    norms = np.linalg.norm(a, axis=0)
    a = a / np.where(norms > 0, norms, 1.0)
    return int(np.linalg.matrix_rank(a)) == a.shape[1]


def _interval_support_ok(x: np.ndarray, beta) -> bool:
    """Some covariate takes many distinct values and carries a nonzero weight."""
    for pos, coef in enumerate(np.asarray(beta, dtype=float)):
        if coef == 0.0:
            continue
        if np.unique(x[:, pos]).size >= _MIN_INTERVAL_VALUES:
            return True
    return False


def check_threshold_gap_overlap(source, d: int, *, model=None, lattice=None):
    """Overlap interval for each adjacent threshold pair of dimension d.

    The attainable shift interval of threshold j is [alpha_j - max x'beta,
    alpha_j - min x'beta]; the gap between thresholds j and j+1 is
    identified only where consecutive intervals intersect. Returns
    ``((j, j+1), interval-or-None)`` tuples; a dimension with fewer than
    two thresholds has no gaps and returns an empty tuple.
    """
    frame = _frame(source, model=model, lattice=lattice)
    _check_dim(frame, d)
    return _overlaps(frame, d)


def _overlaps(frame: _Frame, d: int):
    lo, hi = frame.index_ranges[d - 1]
    cuts = frame.lattice.thresholds[d - 1]
    out = []
    for j in range(len(cuts) - 1):
        left = max(cuts[j] - hi, cuts[j + 1] - hi)
        right = min(cuts[j] - lo, cuts[j + 1] - lo)
        out.append(((j + 1, j + 2), (left, right) if left <= right else None))
    return tuple(out)


def check_coverage(source, d: int, *, model=None, lattice=None) -> float:
    """Fraction of (0, 1) attainable by the cut probabilities F_d(alpha_j - x'beta)."""
    frame = _frame(source, model=model, lattice=lattice)
    _check_dim(frame, d)
    return _coverage(frame, d)


def _coverage(frame: _Frame, d: int) -> float:
    lo, hi = frame.index_ranges[d - 1]
    cdf = frame.margin_cdfs[d - 1]
    intervals = [
        (float(cdf(alpha - hi)), float(cdf(alpha - lo)))
        for alpha in frame.lattice.thresholds[d - 1]
    ]
    return _union_measure(intervals)


def _union_measure(intervals) -> float:
    total = 0.0
    end = -np.inf
    for lo, hi in sorted(intervals):
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi <= end:
            continue
        total += hi - max(lo, end)
        end = hi
    return total


def _joint_prob(frame: _Frame, z1: float, z2: float) -> float:
    if frame.independent:
        return float(frame.margin_cdfs[0](z1)) * float(frame.margin_cdfs[1](z2))
    return float(bivariate_normal_cdf(z1, z2, frame.rho))


def _resolve_cells(frame: _Frame, cells):
    if cells is None:
        # most informative target per dimension: the threshold nearest the
        # typical index, where the cut probability is farthest from 0 and 1
        cells = tuple(
            1 + int(np.argmin(np.abs(np.asarray(cuts) - typ))) if cuts else 1
            for cuts, typ in zip(frame.lattice.thresholds, frame.typical_index)
        )
    cells = tuple(int(j) for j in cells)
    if len(cells) != frame.lattice.dims:
        raise ValueError(f"need {frame.lattice.dims} target cells, got {len(cells)}")
    for d, (j, m) in enumerate(zip(cells, frame.lattice.category_counts), start=1):
        if not 1 <= j <= m - 1:
            raise ValueError(
                f"dimension {d}: target cell must lie in 1..{m - 1}, got {j}"
            )
    return cells


def _shift_range(exc: _Exclusive, alpha: float) -> tuple[float, float]:
    """Range of alpha - x'beta as the exclusive covariate sweeps its support."""
    a = exc.coef * exc.support[0]
    b = exc.coef * exc.support[1]
    return alpha - (exc.others + max(a, b)), alpha - (exc.others + min(a, b))


def _attainment(frame: _Frame, m_dim: int, cells, exc: _Exclusive) -> tuple[bool, bool]:
    other = 1 if m_dim == 2 else 2
    alpha_m = frame.lattice.thresholds[m_dim - 1][cells[m_dim - 1] - 1]
    z_lo, z_hi = _shift_range(exc, alpha_m)
    if not z_lo < z_hi:
        return False, False
    cdf_m = frame.margin_cdfs[m_dim - 1]
    if frame.rho is None and not frame.independent:
        # correlation unknown: the marginal bounds joint <= F_m(z) and
        # marginal-other - joint <= 1 - F_m(z) give a conservative verdict
        return float(cdf_m(z_lo)) <= _TOL, float(cdf_m(z_hi)) >= 1.0 - _TOL
    z_other = (
        frame.lattice.thresholds[other - 1][cells[other - 1] - 1]
        - frame.typical_index[other - 1]
    )
    pair = (lambda z: (z_other, z)) if m_dim == 2 else (lambda z: (z, z_other))
    low = _joint_prob(frame, *pair(z_lo))
    high = _joint_prob(frame, *pair(z_hi))
    marg_other = float(frame.margin_cdfs[other - 1](z_other))
    return low <= _TOL, abs(high - marg_other) <= _TOL


def check_exclusive_shift(
    source,
    cells=None,
    *,
    model=None,
    lattice=None,
    exclusive=None,
    rho=None,
):
    """Sup/inf attainment of the joint CDF under exclusive shifts, dims 2..D.

    For each dimension m >= 2, true attainment means a single covariate
    entering only dimension m can drive P(Y_1 <= j_1, ..., Y_D <= j_D | x)
    to zero and to the marginal probability of the remaining dimensions
    (within 1e-3), holding every other covariate at a typical value.
    ``cells`` picks the target (j_1, ..., j_D); each j_d must be a proper
    category below the top one and defaults to 1.

    Specs derive exclusivity from covariate declarations; datasets need an
    explicit ``exclusive={dim: column-name}`` mapping.
    """
    frame = _frame(source, model=model, lattice=lattice, exclusive=exclusive, rho=rho)
    if frame.exclusives is None:
        raise ValueError(
            "exclusivity declaration required: pass exclusive={dim: column-name}"
        )
    if frame.lattice.dims != 2:
        raise ValueError("exclusive-shift evaluation supports bivariate lattices only")
    cells = _resolve_cells(frame, cells)
    return _shift_flags(frame, cells)


def _shift_flags(frame: _Frame, cells) -> tuple[ShiftAttainment, ...]:
    out = []
    for m_dim in range(2, frame.lattice.dims + 1):
        best = (False, False)
        for exc in frame.exclusives[m_dim - 1]:
            got = _attainment(frame, m_dim, cells, exc)
            if sum(got) > sum(best):
                best = got
            if all(best):
                break
        out.append(ShiftAttainment(m_dim, best[0], best[1]))
    return tuple(out)


def _two_points(exc: _Exclusive) -> tuple[float, float]:
    lo, hi = exc.support
    if np.isfinite(lo) and np.isfinite(hi):
        return lo, hi
    if np.isfinite(lo):
        return lo, lo + 2.0
    if np.isfinite(hi):
        return hi - 2.0, hi
    return -1.0, 1.0


def check_rho_conditions(
    source,
    *,
    model=None,
    lattice=None,
    exclusive=None,
    rho=None,
) -> RhoConditionFlags:
    """Evaluate the pivot, sign-flip, and exclusion conditions.

    The pivot condition holds when some threshold lies inside an attainable
    index range closely enough that its cut probability reaches one half
    within 1e-3. The sign-flip condition is searched over sampled (spec) or
    observed (data) covariate points, in both dimension orderings. The
    exclusion condition needs an exclusive covariate with a nonzero
    coefficient whose variation moves some joint cell probability, searched
    over all threshold pairs; with no declared exclusives it is false.
    """
    frame = _frame(source, model=model, lattice=lattice, exclusive=exclusive, rho=rho)
    if frame.lattice.dims != 2:
        raise ValueError("correlation conditions apply to bivariate lattices only")
    return RhoConditionFlags(
        _pivot_flag(frame), _sign_flip_flag(frame), _exclusion_flag(frame)
    )


def _pivot_flag(frame: _Frame) -> bool:
    for d in range(1, frame.lattice.dims + 1):
        lo, hi = frame.index_ranges[d - 1]
        cdf = frame.margin_cdfs[d - 1]
        for alpha in frame.lattice.thresholds[d - 1]:
            low = float(cdf(alpha - hi))
            high = float(cdf(alpha - lo))
            if max(low - 0.5, 0.5 - high, 0.0) <= _TOL:
                return True
    return False


def _cut_signs(frame: _Frame, d: int) -> np.ndarray:
    idx = frame.designs[d - 1] @ np.asarray(frame.model.beta[d - 1])
    cuts = np.asarray(frame.lattice.thresholds[d - 1])
    probs = np.asarray(frame.margin_cdfs[d - 1](cuts[None, :] - idx[:, None]))
    signs = np.zeros(probs.shape, dtype=int)
    signs[probs > 0.5 + _STRICT] = 1
    signs[probs < 0.5 - _STRICT] = -1
    return signs


def _sign_flip_flag(frame: _Frame) -> bool:
    s1, s2 = _cut_signs(frame, 1), _cut_signs(frame, 2)

    def flips(sa: np.ndarray, sb: np.ndarray) -> bool:
        for ja in range(sa.shape[1]):
            for jb in range(sb.shape[1]):
                for side in (1, -1):
                    grp = sa[sb[:, jb] == side, ja]
                    if (grp == 1).any() and (grp == -1).any():
                        return True
        return False

    return flips(s1, s2) or flips(s2, s1)


def _exclusion_flag(frame: _Frame) -> bool:
    if frame.exclusives is None:
        return False
    for m_dim in (1, 2):
        other = 1 if m_dim == 2 else 2
        for exc in frame.exclusives[m_dim - 1]:
            if exc.coef == 0.0:
                continue
            v1, v2 = _two_points(exc)
            for alpha_m in frame.lattice.thresholds[m_dim - 1]:
                z1 = alpha_m - (exc.others + exc.coef * v1)
                z2 = alpha_m - (exc.others + exc.coef * v2)
                if z1 == z2:
                    continue
                if frame.rho is None and not frame.independent:
                    cdf_m = frame.margin_cdfs[m_dim - 1]
                    if abs(float(cdf_m(z1)) - float(cdf_m(z2))) > 1e-9:
                        return True
                    continue
                for alpha_o in frame.lattice.thresholds[other - 1]:
                    z_other = alpha_o - frame.typical_index[other - 1]
                    if m_dim == 2:
                        moved = abs(
                            _joint_prob(frame, z_other, z1)
                            - _joint_prob(frame, z_other, z2)
                        )
                    else:
                        moved = abs(
                            _joint_prob(frame, z1, z_other)
                            - _joint_prob(frame, z2, z_other)
                        )
                    if moved > 1e-9:
                        return True
    return False


@dataclass(frozen=True)
class IdentificationReport:
    """Outcome of every identification check plus the nested level reached."""

    level: str
    rank: tuple[bool, ...]
    interval_support: tuple[bool, ...]
    overlaps: tuple
    coverage: tuple[float, ...]
    exclusive_shift: tuple[ShiftAttainment, ...]
    rho_conditions: RhoConditionFlags

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "rank": list(self.rank),
            "interval_support": list(self.interval_support),
            "threshold_gap_overlap": [
                [
                    {
                        "pair": list(pair),
                        "interval": list(iv) if iv is not None else None,
                    }
                    for pair, iv in dim_overlaps
                ]
                for dim_overlaps in self.overlaps
            ],
            "coverage": list(self.coverage),
            "exclusive_shift": [
                {"dim": s.dim, "inf": s.inf_attained, "sup": s.sup_attained}
                for s in self.exclusive_shift
            ],
            "rho_conditions": self.rho_conditions.to_dict(),
        }


def classify(
    source,
    cells=None,
    *,
    model=None,
    lattice=None,
    exclusive=None,
    rho=None,
) -> IdentificationReport:
    """Classify a spec or dataset by the strongest identification level.

    The levels are nested: full-rank designs with an interval-valued
    covariate identify the normalized index parameters; overlapping
    adjacent threshold shift intervals add the threshold gaps; coverage of
    (0, 1) by the cut probabilities adds the error margins; exclusive
    sup/inf attainment adds the joint error CDF. The reported level is the
    longest prefix of passing gates, so it never outruns a failed
    prerequisite. Correlation-condition flags ride along without affecting
    the level.

    A dataset without an ``exclusive`` declaration is treated as having no
    exclusive covariates rather than erroring.
    """
    frame = _frame(source, model=model, lattice=lattice, exclusive=exclusive, rho=rho)
    dims = frame.lattice.dims
    cells = _resolve_cells(frame, cells)
    rank = tuple(_rank_ok(frame.designs[d]) for d in range(dims))
    interval_support = tuple(
        _interval_support_ok(frame.designs[d], frame.model.beta[d]) for d in range(dims)
    )
    overlaps = tuple(_overlaps(frame, d) for d in range(1, dims + 1))
    coverage = tuple(_coverage(frame, d) for d in range(1, dims + 1))
    if dims == 2:
        declared = frame.exclusives is not None
        shift_frame = frame if declared else _Frame(
            frame.lattice,
            frame.model,
            frame.designs,
            frame.index_ranges,
            frame.margin_cdfs,
            frame.typical_index,
            ((),) * dims,
            rho=frame.rho,
            independent=frame.independent,
        )
        shifts = _shift_flags(shift_frame, cells)
        rho_flags = RhoConditionFlags(
            _pivot_flag(frame),
            _sign_flip_flag(frame),
            _exclusion_flag(shift_frame),
        )
    else:
        shifts = ()
        rho_flags = RhoConditionFlags(_pivot_flag(frame), False, False)
    gates = (
        all(rank) and all(interval_support),
        all(iv is not None for dim_overlaps in overlaps for _, iv in dim_overlaps),
        all(c >= 1.0 - _TOL for c in coverage),
        dims == 2 and all(s.ok for s in shifts) and len(shifts) == dims - 1,
    )
    level = LEVELS[0]
    for passed, name in zip(gates, LEVELS[1:]):
        if not passed:
            break
        level = name
    return IdentificationReport(
        level, rank, interval_support, overlaps, coverage, shifts, rho_flags
    )


def format_report(report: IdentificationReport) -> str:
    """Human-readable multi-line rendering of an identification report."""
    yn = lambda b: "yes" if b else "no"
    lines = [f"identification level: {report.level}"]
    lines.append(
        "rank of [1, x_d]: "
        + ", ".join(f"dim {d + 1} {yn(ok)}" for d, ok in enumerate(report.rank))
    )
    lines.append(
        "interval-valued covariate with nonzero coefficient: "
        + ", ".join(
            f"dim {d + 1} {yn(ok)}" for d, ok in enumerate(report.interval_support)
        )
    )
    lines.append("threshold gap overlap:")
    for d, dim_overlaps in enumerate(report.overlaps, start=1):
        if not dim_overlaps:
            lines.append(f"  dim {d}: no adjacent threshold pairs")
            continue
        parts = []
        for (j, jnext), iv in dim_overlaps:
            if iv is None:
                parts.append(f"({j},{jnext}) empty")
            else:
                parts.append(f"({j},{jnext}) [{iv[0]:.6g}, {iv[1]:.6g}]")
        lines.append(f"  dim {d}: " + ", ".join(parts))
    lines.append(
        "coverage of (0,1): "
        + ", ".join(f"dim {d + 1} {c:.6f}" for d, c in enumerate(report.coverage))
    )
    if report.exclusive_shift:
        for s in report.exclusive_shift:
            lines.append(
                f"exclusive shift (dim {s.dim}): inf {yn(s.inf_attained)}, "
                f"sup {yn(s.sup_attained)}"
            )
    else:
        lines.append("exclusive shift: not evaluated")
    flags = report.rho_conditions
    lines.append(
        f"correlation conditions: pivot {yn(flags.pivot)}, "
        f"sign-flip {yn(flags.sign_flip)}, exclusion {yn(flags.exclusion)}"
    )
    return "\n".join(lines) + "\n"

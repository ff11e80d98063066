"""Data-generating processes for lattice models.

A :class:`DgpSpec` couples a lattice, an index model, a list of covariate
declarations (each entering one or more dimensions, optionally linked to
previously declared covariates), and an error law. Generation is fully
deterministic in the seed; replication seeds should be derived through
:func:`replication_seed` so that workers never share streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Law
from .lattice import Dataset, IndexModel, LatticeSpec, categorize

__all__ = [
    "CovariateSpec",
    "DgpSpec",
    "ErrorLaw",
    "BUILTIN_DGP_IDS",
    "builtin_dgp",
    "builtin_dgp_spec",
    "generate",
    "replication_seed",
]


@dataclass(frozen=True)
class CovariateSpec:
    """One covariate: its law, the dimensions it enters, optional linkage.

    The realized value is ``law draw + sum(coef * value(other))`` over the
    linkage list; linked covariates must be declared earlier. A covariate
    entering a single dimension is exclusive to it.
    """

    name: str
    law: Law
    dims: tuple[int, ...]
    linkage: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("covariate needs a nonempty name")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1 or len(set(dims)) != len(dims) or min(dims) < 1:
            raise ValueError(f"covariate {self.name}: bad dimension list {self.dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(
            self, "linkage", tuple((str(nm), float(c)) for nm, c in self.linkage)
        )

    def to_dict(self) -> dict:
        d: dict = {"name": self.name, "law": self.law.to_dict(), "dims": list(self.dims)}
        if self.linkage:
            d["linkage"] = [[nm, c] for nm, c in self.linkage]
        return d

    @staticmethod
    def from_dict(d: dict) -> "CovariateSpec":
        return CovariateSpec(
            d["name"],
            Law.from_dict(d["law"]),
            tuple(d["dims"]),
            tuple((nm, c) for nm, c in d.get("linkage", ())),
        )


@dataclass(frozen=True)
class ErrorLaw:
    """Joint error law: bivariate gaussian with correlation, or independent margins."""

    kind: str
    rho: float = 0.0
    margins: tuple[Law, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "independent"):
            raise ValueError(f"unknown error law kind {self.kind!r}")
        if self.kind == "gaussian":
            if not -1.0 < float(self.rho) < 1.0:
                raise ValueError(f"gaussian error correlation must be in (-1, 1), got {self.rho}")
            object.__setattr__(self, "rho", float(self.rho))
        else:
            if len(self.margins) < 1:
                raise ValueError("independent error law needs margin laws")

    def draw(self, rng: np.random.Generator, n: int, dims: int) -> np.ndarray:
        if self.kind == "gaussian":
            if dims != 2:
                raise ValueError("gaussian error law with scalar rho requires 2 dimensions")
            z = rng.standard_normal((n, 2))
            eps = np.empty((n, 2))
            eps[:, 0] = z[:, 0]
            eps[:, 1] = self.rho * z[:, 0] + math.sqrt(1.0 - self.rho**2) * z[:, 1]
            return eps
        if len(self.margins) != dims:
            raise ValueError(f"{len(self.margins)} error margins for {dims} dimensions")
        return np.column_stack([law.draw(rng, n) for law in self.margins])

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "rho": self.rho}
        return {"kind": "independent", "margins": [m.to_dict() for m in self.margins]}

    @staticmethod
    def from_dict(d: dict) -> "ErrorLaw":
        if d["kind"] == "gaussian":
            return ErrorLaw("gaussian", rho=d["rho"])
        return ErrorLaw("independent", margins=tuple(Law.from_dict(m) for m in d["margins"]))


@dataclass(frozen=True)
class DgpSpec:
    """Complete generative specification for a lattice model sample."""

    lattice: LatticeSpec
    model: IndexModel
    covariates: tuple[CovariateSpec, ...]
    errors: ErrorLaw
    seed: int = 0

    def __post_init__(self) -> None:
        if self.model.dims != self.lattice.dims:
            raise ValueError(
                f"index model has {self.model.dims} dimensions, lattice {self.lattice.dims}"
            )
        seen: set[str] = set()
        for cov in self.covariates:
            if cov.name in seen:
                raise ValueError(f"duplicate covariate name {cov.name!r}")
            for dep, _ in cov.linkage:
                if dep not in seen:
                    raise ValueError(
                        f"covariate {cov.name!r} links to {dep!r} which is not declared earlier"
                    )
            if max(cov.dims) > self.lattice.dims:
                raise ValueError(
                    f"covariate {cov.name!r} enters dimension {max(cov.dims)} "
                    f"but the lattice has {self.lattice.dims}"
                )
            seen.add(cov.name)
        for d in range(1, self.lattice.dims + 1):
            k = len(self.dimension_covariates(d))
            if k != len(self.model.beta[d - 1]):
                raise ValueError(
                    f"dimension {d}: {k} covariates but {len(self.model.beta[d - 1])} coefficients"
                )

    def dimension_covariates(self, d: int) -> tuple[CovariateSpec, ...]:
        """Covariates entering dimension d, in declaration order."""
        return tuple(c for c in self.covariates if d in c.dims)

    def exclusive_covariates(self, d: int) -> tuple[CovariateSpec, ...]:
        return tuple(c for c in self.covariates if c.dims == (d,))

    def value_support(self, name: str) -> tuple[float, float]:
        """Support interval of a covariate's realized value (after linkage)."""
        supports: dict[str, tuple[float, float]] = {}
        for cov in self.covariates:
            lo, hi = cov.law.support()
            for dep, coef in cov.linkage:
                if coef == 0.0:
                    continue
                dlo, dhi = supports[dep]
                lo = lo + min(coef * dlo, coef * dhi)
                hi = hi + max(coef * dlo, coef * dhi)
            supports[cov.name] = (lo, hi)
            if cov.name == name:
                return supports[name]
        raise KeyError(f"no covariate named {name!r}")

    def index_support(self, d: int) -> tuple[float, float]:
        """Attainable interval of the linear index x_d' beta_d."""
        lo = hi = 0.0
        for cov, coef in zip(self.dimension_covariates(d), self.model.beta[d - 1]):
            if coef == 0.0:
                continue  # avoid 0 * inf on unbounded supports
            clo, chi = self.value_support(cov.name)
            lo += min(coef * clo, coef * chi)
            hi += max(coef * clo, coef * chi)
        return (lo, hi)

    def to_dict(self) -> dict:
        return {
            "lattice": self.lattice.to_dict(),
            "model": self.model.to_dict(),
            "covariates": [c.to_dict() for c in self.covariates],
            "errors": self.errors.to_dict(),
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "DgpSpec":
        return DgpSpec(
            LatticeSpec.from_dict(d["lattice"]),
            IndexModel.from_dict(d["model"]),
            tuple(CovariateSpec.from_dict(c) for c in d["covariates"]),
            ErrorLaw.from_dict(d["errors"]),
            int(d.get("seed", 0)),
        )


def replication_seed(base_seed: int, replicate: int) -> np.random.SeedSequence:
    """Derived seed for one replication; distinct replicates never collide."""
    return np.random.SeedSequence([int(base_seed), int(replicate)])


def generate(
    spec: DgpSpec,
    n: int,
    seed=None,
    return_errors: bool = False,
):
    """Draw a sample of size n from the DGP.

    ``seed`` may be an int or a numpy SeedSequence; when omitted the spec's
    own seed is used. With ``return_errors`` the latent error draws come back
    alongside the dataset for debugging and calibration checks.
    """
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    if seed is None:
        seed = spec.seed
    rng = np.random.default_rng(seed)

    values: dict[str, np.ndarray] = {}
    for cov in spec.covariates:
        v = cov.law.draw(rng, n)
        for dep, coef in cov.linkage:
            v = v + coef * values[dep]
        values[cov.name] = v

    dims = spec.lattice.dims
    xmats, names = [], []
    for d in range(1, dims + 1):
        covs = spec.dimension_covariates(d)
        xmats.append(np.column_stack([values[c.name] for c in covs]))
        names.append(tuple(c.name for c in covs))

    eps = spec.errors.draw(rng, n, dims)
    latent = np.empty((n, dims))
    for d in range(dims):
        latent[:, d] = xmats[d] @ np.asarray(spec.model.beta[d]) + eps[:, d]
    outcomes = categorize(latent, spec.lattice)
    data = Dataset(outcomes, tuple(xmats), tuple(names))
    if return_errors:
        return data, eps
    return data


def _semiparam_spec(variant: int, seed: int) -> DgpSpec:
    lattice = LatticeSpec(((-1.0, 1.0), (-1.0, 1.0)))
    model = IndexModel(((1.0, 0.5), (1.0, 0.5)))
    shared2 = CovariateSpec("x_common2", Law.uniform(-0.5, 0.5), (1, 2))
    if variant == 1:
        covs = (CovariateSpec("x_common1", Law.uniform(-0.5, 0.5), (1, 2)), shared2)
    elif variant == 2:
        covs = (CovariateSpec("x_common1", Law.uniform(-2.0, 2.0), (1, 2)), shared2)
    elif variant == 3:
        covs = (CovariateSpec("x_common1", Law.laplace(0.0, 1.0), (1, 2)), shared2)
    else:
        covs = (
            CovariateSpec("x_excl1", Law.laplace(0.0, 1.0), (1,)),
            CovariateSpec("x_excl2", Law.laplace(0.0, 1.0), (2,)),
            shared2,
        )
    return DgpSpec(lattice, model, covs, ErrorLaw("gaussian", rho=0.6), seed)


def _twostep_spec(seed: int) -> DgpSpec:
    lattice = LatticeSpec(((-1.0, 1.0), (-0.8, 0.8)))
    model = IndexModel(((0.8,), (-0.5,)))
    covs = (
        CovariateSpec("x1", Law.normal(0.0, 1.0), (1,)),
        CovariateSpec("x2", Law.normal(0.0, 0.5), (2,), (("x1", 0.3),)),
    )
    return DgpSpec(lattice, model, covs, ErrorLaw("gaussian", rho=0.6), seed)


def _param_design_spec(variant: int, seed: int) -> DgpSpec:
    if variant == 1:
        lattice = LatticeSpec(((1.0,), (1.25,)))
        model = IndexModel(((3.0,), (2.5,)))
        covs = (CovariateSpec("x", Law.uniform(-4.0, 4.0), (1, 2)),)
        rho = 0.33
    elif variant == 2:
        lattice = LatticeSpec(((-1.5, 0.6, 4.0), (-2.5, 2.0)))
        model = IndexModel(((2.0, -3.0), (3.0,)))
        covs = (
            CovariateSpec("x", Law.uniform(-2.0, 2.0), (1, 2)),
            CovariateSpec("w1", Law.choice((-2.5, -1.5, -0.5, 0.5)), (1,)),
        )
        rho = 0.25
    else:
        lattice = LatticeSpec(((-7.0, -5.0, -0.75, 2.5, 4.0), (-2.0,)))
        model = IndexModel(((1.75, -2.75), (2.5, -4.0, 2.0)))
        covs = (
            CovariateSpec("x", Law.uniform(-2.0, 2.0), (1, 2)),
            CovariateSpec("w1", Law.student_t(7.0), (1,)),
            CovariateSpec("w2", Law.student_t(7.0), (2,)),
            CovariateSpec("z2", Law.logistic(3.0, 2.0), (2,)),
        )
        rho = 0.5
    return DgpSpec(lattice, model, covs, ErrorLaw("gaussian", rho=rho), seed)


BUILTIN_DGP_IDS = (
    "semiparam-1",
    "semiparam-2",
    "semiparam-3",
    "semiparam-4",
    "twostep-5.1",
    "param-design-1",
    "param-design-2",
    "param-design-3",
)


def builtin_dgp_spec(dgp_id: str, seed: int = 0) -> DgpSpec:
    """The built-in DGP with the given identifier."""
    if dgp_id.startswith("semiparam-"):
        variant = int(dgp_id.rsplit("-", 1)[1])
        if 1 <= variant <= 4:
            return _semiparam_spec(variant, seed)
    if dgp_id == "twostep-5.1":
        return _twostep_spec(seed)
    if dgp_id.startswith("param-design-"):
        variant = int(dgp_id.rsplit("-", 1)[1])
        if 1 <= variant <= 3:
            return _param_design_spec(variant, seed)
    raise ValueError(f"unknown DGP id {dgp_id!r}; known ids: {', '.join(BUILTIN_DGP_IDS)}")


def builtin_dgp(dgp_id: str, n: int, seed: int) -> tuple[DgpSpec, Dataset]:
    """Instantiate a built-in DGP and draw a sample from it."""
    spec = builtin_dgp_spec(dgp_id, seed)
    return spec, generate(spec, n)

"""Dirichlet marginal-likelihood scores, their asymptotic forms, AIC and BIC.

Every function returns bits and follows the "larger is better" convention, so
``aic`` returns the negated information criterion. All quantities decompose
over families (a variable together with its parent set); the ``family_*``
helpers compute one family's contribution from its ``q x r`` count table and
matching hyperparameter table.

Asymptotic forms tolerate zero hyperparameters in cells that also have zero
counts (the data-ratio prior on unobserved cells): such cells contribute
nothing to the entropy and penalty terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .core import (
    LN2,
    CategoricalDataset,
    Dag,
    DimensionMismatchError,
    SufficientStats,
    count_stats,
    family_counts,
    family_log_likelihood,
    xlogy_ratio,
)
from .simulate import BayesNet

KINDS = ("exact-ml", "asymptotic-ml", "bdeu-asymptotic", "aic", "bic")
SCHEME_NAMES = ("bdeu", "bde", "k2", "data-ratio")


class IncompatibleScoreError(ValueError):
    """Score kind cannot be evaluated under the requested hyperparameter scheme."""


# ---------------------------------------------------------------------------
# hyperparameter schemes


@dataclass(frozen=True)
class BDeu:
    ess: float

    name = "bdeu"

    def __post_init__(self):
        if not self.ess > 0:
            raise ValueError(f"BDeu equivalent sample size must be > 0, got {self.ess}")

    def family_alpha(self, i, parents, counts, cardinalities):
        q, r = counts.shape
        return np.full((q, r), self.ess / (r * q))


@dataclass(frozen=True)
class BDe:
    """``alpha_ijk = ess * p(x_i = k, parents = j)`` under a prior network."""

    ess: float
    prior: BayesNet = field(compare=False)
    _joint: np.ndarray = field(init=False, repr=False, compare=False)

    name = "bde"

    def __post_init__(self):
        if not self.ess > 0:
            raise ValueError(f"BDe equivalent sample size must be > 0, got {self.ess}")
        object.__setattr__(self, "_joint", self.prior.joint_table())

    def family_alpha(self, i, parents, counts, cardinalities):
        if tuple(cardinalities) != self.prior.cardinalities:
            raise DimensionMismatchError(
                f"prior network cardinalities {self.prior.cardinalities} differ "
                f"from data cardinalities {tuple(cardinalities)}"
            )
        keep = sorted(set(parents) | {i})
        drop = tuple(ax for ax in range(self._joint.ndim) if ax not in keep)
        marg = self._joint.sum(axis=drop)
        # marg axes are in sorted order; move x_i last to get (parents..., x_i)
        marg = np.moveaxis(marg, keep.index(i), -1)
        return self.ess * marg.reshape(counts.shape)


@dataclass(frozen=True)
class K2:
    name = "k2"
    ess = None

    def family_alpha(self, i, parents, counts, cardinalities):
        return np.ones(counts.shape)


@dataclass(frozen=True)
class DataRatio:
    """Data-dependent prior ``alpha_ijk = c * n_ijk``."""

    c: float = 1.0 / 3.0

    name = "data-ratio"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"data-ratio factor must be > 0, got {self.c}")

    @property
    def ess(self):
        return self.c

    def family_alpha(self, i, parents, counts, cardinalities):
        return self.c * np.asarray(counts, dtype=float)


HyperScheme = BDeu | BDe | K2 | DataRatio


def make_scheme(name: str, ess: float | None = None, prior: BayesNet | None = None):
    """Build a scheme from its CLI name; ``ess`` doubles as the data-ratio factor."""
    name = name.lower()
    if name == "bdeu":
        return BDeu(1.0 if ess is None else ess)
    if name == "bde":
        if prior is None:
            raise ValueError("the bde scheme needs a prior network")
        return BDe(1.0 if ess is None else ess, prior)
    if name == "k2":
        return K2()
    if name == "data-ratio":
        return DataRatio(1.0 / 3.0 if ess is None else ess)
    raise ValueError(f"unknown scheme {name!r}; choose from {list(SCHEME_NAMES)}")


def hyperparameters(scheme, dag: Dag, stats: SufficientStats) -> list[np.ndarray]:
    if len(stats.tables) != dag.num_vars:
        raise DimensionMismatchError("statistics and structure disagree on variable count")
    return [
        scheme.family_alpha(i, dag.parents[i], stats.tables[i], stats.cardinalities)
        for i in range(dag.num_vars)
    ]


# ---------------------------------------------------------------------------
# per-family terms (bits)


def _check_alpha(counts, alpha, allow_empty_cells=False):
    alpha = np.asarray(alpha, dtype=float)
    if counts is not None and alpha.shape != counts.shape:
        raise DimensionMismatchError(
            f"hyperparameter table shape {alpha.shape} differs from counts {counts.shape}"
        )
    if allow_empty_cells:
        bad = alpha < 0
        if counts is not None:
            bad |= (alpha == 0) & (counts > 0)
    else:
        bad = ~(alpha > 0)
    if np.any(bad):
        raise ValueError("hyperparameters must be strictly positive")
    return alpha


def family_log_ml(counts: np.ndarray, alpha: np.ndarray) -> float:
    alpha = _check_alpha(counts, alpha)
    a_row = alpha.sum(axis=1)
    n_row = counts.sum(axis=1)
    nats = (
        np.sum(gammaln(a_row) - gammaln(a_row + n_row))
        + np.sum(gammaln(alpha + counts) - gammaln(alpha))
    )
    return float(nats) / LN2


def family_entropy_prior(alpha: np.ndarray) -> float:
    alpha = _check_alpha(None, alpha, allow_empty_cells=True)
    return -float(xlogy_ratio(alpha, alpha.sum(axis=1, keepdims=True)).sum()) / LN2


def family_entropy_posterior(counts: np.ndarray, alpha: np.ndarray) -> float:
    alpha = _check_alpha(counts, alpha, allow_empty_cells=True)
    post = alpha + counts
    return -float(xlogy_ratio(post, post.sum(axis=1, keepdims=True)).sum()) / LN2


def _penalty(counts: np.ndarray, ratio: np.ndarray, r: int) -> float:
    """``0.5 * (r-1)/r * sum log2(1 + ratio)``; non-finite ratios (0/0) count as 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.log1p(ratio)
    terms = np.where(counts > 0, terms, 0.0)
    return 0.5 * (r - 1) / r * float(terms.sum()) / LN2


def family_log_ml_asymptotic(counts: np.ndarray, alpha: np.ndarray) -> float:
    alpha = _check_alpha(counts, alpha, allow_empty_cells=True)
    r = counts.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = counts / alpha
    return (
        family_entropy_prior(alpha)
        - family_entropy_posterior(counts, alpha)
        - _penalty(counts, ratio, r)
    )


def family_bdeu_asymptotic(counts: np.ndarray, ess: float) -> float:
    if not ess > 0:
        raise ValueError(f"equivalent sample size must be > 0, got {ess}")
    q, r = counts.shape
    alpha = np.full((q, r), ess / (r * q))
    return (
        ess * math.log2(r)
        - family_entropy_posterior(counts, alpha)
        - _penalty(counts, r * q * counts / ess, r)
    )


def family_aic(counts: np.ndarray) -> float:
    q, r = counts.shape
    return family_log_likelihood(counts) - q * (r - 1)


def family_bic(counts: np.ndarray, n: int) -> float:
    if n < 1:
        raise ValueError("BIC needs a sample size n >= 1")
    q, r = counts.shape
    return family_log_likelihood(counts) - 0.5 * q * (r - 1) * math.log2(n)


# ---------------------------------------------------------------------------
# whole-structure scores


def log_ml_exact(stats: SufficientStats, hyper: Sequence[np.ndarray]) -> float:
    """Log marginal likelihood ``log2 p(X | g)`` under Dirichlet hyperparameters."""
    return sum(family_log_ml(c, a) for c, a in zip(stats.tables, hyper, strict=True))


def entropy_prior(dag: Dag, hyper: Sequence[np.ndarray]) -> float:
    if len(hyper) != dag.num_vars:
        raise DimensionMismatchError("need one hyperparameter table per variable")
    return sum(family_entropy_prior(a) for a in hyper)


def entropy_posterior(stats: SufficientStats, hyper: Sequence[np.ndarray]) -> float:
    return sum(
        family_entropy_posterior(c, a) for c, a in zip(stats.tables, hyper, strict=True)
    )


def log_ml_asymptotic(stats: SufficientStats, hyper: Sequence[np.ndarray]) -> float:
    """Large ``alpha + n`` approximation: prior entropy - posterior entropy - penalty."""
    return sum(
        family_log_ml_asymptotic(c, a) for c, a in zip(stats.tables, hyper, strict=True)
    )


def log_bdeu_asymptotic(stats: SufficientStats, dag: Dag, ess: float) -> float:
    if len(stats.tables) != dag.num_vars:
        raise DimensionMismatchError("statistics and structure disagree on variable count")
    return sum(family_bdeu_asymptotic(c, ess) for c in stats.tables)


def aic(stats: SufficientStats, dag: Dag) -> float:
    """Log-likelihood minus the free-parameter count (negated AIC, base-2)."""
    return sum(family_aic(c) for c in stats.tables)


def bic(stats: SufficientStats, dag: Dag, n: int) -> float:
    return sum(family_bic(c, n) for c in stats.tables)


# ---------------------------------------------------------------------------
# dispatch


def check_kind(kind: str, scheme) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown score kind {kind!r}; choose from {list(KINDS)}")
    if kind == "exact-ml" and isinstance(scheme, DataRatio):
        raise IncompatibleScoreError(
            "exact-ml is undefined under the data-ratio scheme (zero counts give Gamma(0))"
        )
    if kind == "bdeu-asymptotic" and not isinstance(scheme, BDeu):
        raise IncompatibleScoreError("bdeu-asymptotic requires the bdeu scheme")
    if kind in ("exact-ml", "asymptotic-ml") and scheme is None:
        raise IncompatibleScoreError(f"{kind} requires a hyperparameter scheme")


def family_score(
    kind: str,
    scheme,
    counts: np.ndarray,
    i: int,
    parents: Sequence[int],
    cardinalities: Sequence[int],
    n: int,
) -> float:
    """Contribution of one family to a score of the given kind."""
    if kind == "aic":
        return family_aic(counts)
    if kind == "bic":
        return family_bic(counts, n)
    if kind == "bdeu-asymptotic":
        return family_bdeu_asymptotic(counts, scheme.ess)
    alpha = scheme.family_alpha(i, parents, counts, cardinalities)
    if kind == "exact-ml":
        return family_log_ml(counts, alpha)
    return family_log_ml_asymptotic(counts, alpha)


@dataclass
class ScoreReport:
    kind: str
    scheme: str | None
    ess: float | None
    families: list[tuple[int, tuple[int, ...], float]]
    total: float

    def to_dict(self, variables=None) -> dict:
        def name(i):
            return variables[i].name if variables is not None else i

        return {
            "kind": self.kind,
            "scheme": self.scheme,
            "ess": self.ess,
            "total_bits": self.total,
            "families": [
                {"variable": name(i), "parents": [name(p) for p in ps], "value_bits": v}
                for i, ps, v in self.families
            ],
        }


def score(dataset: CategoricalDataset, dag: Dag, kind: str = "exact-ml", scheme=None) -> ScoreReport:
    """Score ``dag`` on ``dataset``; ``aic`` and ``bic`` ignore ``scheme``."""
    if kind in ("aic", "bic"):
        scheme = None
    check_kind(kind, scheme)
    stats = count_stats(dataset, dag)
    n = dataset.n
    if kind == "bic" and n < 1:
        raise ValueError("BIC needs a sample size n >= 1")
    families = []
    for i in range(dag.num_vars):
        v = family_score(kind, scheme, stats.tables[i], i, dag.parents[i], stats.cardinalities, n)
        families.append((i, dag.parents[i], v))
    return ScoreReport(
        kind=kind,
        scheme=None if scheme is None else scheme.name,
        ess=None if scheme is None else scheme.ess,
        families=families,
        total=sum(v for _, _, v in families),
    )


def local_score(dataset: CategoricalDataset, i: int, parents: Sequence[int], kind: str, scheme) -> float:
    """Family score straight from the records, without building a ``Dag``."""
    card = dataset.cardinalities
    counts = family_counts(dataset.records, card, i, tuple(sorted(parents)))
    return family_score(kind, scheme, counts, i, tuple(sorted(parents)), card, dataset.n)

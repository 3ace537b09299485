"""Parameterised discrete Bayesian networks and ancestral sampling.

Random numbers come from numpy's ``PCG64`` bit generator seeded with a 64-bit
integer. Sampling visits variables in ``Dag.topological_order()``, draws ``n``
uniforms for each variable in one call, and maps each uniform to a state by
inverse CDF over the CPT row with states in ascending order.
"""

from __future__ import annotations

import itertools
import json
from typing import Sequence

import numpy as np

from .core import (
    CategoricalDataset,
    Dag,
    DataFormatError,
    DimensionMismatchError,
    ParentConfigIndexer,
    Variable,
    dag_from_dict,
    dag_to_dict,
)

ROW_TOL = 1e-12


class BayesNet:
    """A ``Dag`` plus one ``q_i x r_i`` CPT per variable."""

    def __init__(self, variables: Sequence[Variable], dag: Dag, cpts: Sequence):
        self.variables = tuple(variables)
        self.dag = dag
        if dag.num_vars != len(self.variables):
            raise DimensionMismatchError("structure size differs from variable count")
        if len(cpts) != dag.num_vars:
            raise DimensionMismatchError("need one CPT per variable")
        card = self.cardinalities
        tables = []
        for i, cpt in enumerate(cpts):
            t = np.array(cpt, dtype=float)
            q = int(np.prod([card[p] for p in dag.parents[i]], dtype=np.int64))
            if t.shape != (q, card[i]):
                raise DimensionMismatchError(
                    f"CPT of {self.variables[i].name!r} has shape {t.shape}, "
                    f"expected {(q, card[i])}"
                )
            if np.any(t < 0) or np.any(t > 1):
                raise DataFormatError(f"CPT of {self.variables[i].name!r} has entries outside [0, 1]")
            if np.any(np.abs(t.sum(axis=1) - 1.0) > ROW_TOL):
                raise DataFormatError(f"CPT rows of {self.variables[i].name!r} must sum to 1")
            t.setflags(write=False)
            tables.append(t)
        self.cpts = tuple(tables)

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def joint_table(self, max_cells: int = 1 << 22) -> np.ndarray:
        """Full joint distribution as an array of shape ``cardinalities``."""
        card = self.cardinalities
        size = int(np.prod(card, dtype=np.int64))
        if size > max_cells:
            raise ValueError(f"joint table with {size} cells exceeds limit {max_cells}")
        joint = np.ones(card)
        for i in range(self.num_vars):
            pa = self.dag.parents[i]
            # CPT reshaped to (r_p1, ..., r_pm, r_i), then broadcast over all axes
            local = self.cpts[i].reshape([card[p] for p in pa] + [card[i]])
            axes = list(pa) + [i]
            order = np.argsort(axes)
            local = np.transpose(local, order)
            shape = [1] * self.num_vars
            for ax in sorted(axes):
                shape[ax] = card[ax]
            joint = joint * local.reshape(shape)
        return joint

    def to_dict(self) -> dict:
        d = dag_to_dict(self.dag, self.variables)
        d["cpts"] = {v.name: self.cpts[i].tolist() for i, v in enumerate(self.variables)}
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "BayesNet":
        dag, variables = dag_from_dict(obj)
        try:
            cpts = [obj["cpts"][v.name] for v in variables]
        except KeyError as exc:
            raise DataFormatError(f"missing CPT for variable {exc}") from None
        except TypeError:
            raise DataFormatError("'cpts' must map variable names to row lists") from None
        try:
            return cls(variables, dag, cpts)
        except ValueError as exc:
            if isinstance(exc, (DataFormatError, DimensionMismatchError)):
                raise
            raise DataFormatError(str(exc)) from None


def read_net(path) -> BayesNet:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"network JSON: {exc}") from None
    return BayesNet.from_dict(obj)


def joint_probability(net: BayesNet, assignment: Sequence[int]) -> float:
    if len(assignment) != net.num_vars:
        raise DimensionMismatchError("assignment length differs from variable count")
    card = net.cardinalities
    p = 1.0
    for i, pa in enumerate(net.dag.parents):
        j = ParentConfigIndexer([card[q] for q in pa]).index([assignment[q] for q in pa])
        p *= net.cpts[i][j, assignment[i]]
    return p


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFF_FFFF_FFFF_FFFF))


def forward_sample(net: BayesNet, n: int, seed: int) -> CategoricalDataset:
    if n < 0:
        raise ValueError("sample size must be non-negative")
    rng = make_rng(seed)
    card = net.cardinalities
    out = np.zeros((n, net.num_vars), dtype=np.int64)
    for i in net.dag.topological_order():
        pa = net.dag.parents[i]
        u = rng.random(n)
        j = ParentConfigIndexer([card[p] for p in pa]).index_array(out[:, list(pa)])
        cdf = np.cumsum(net.cpts[i], axis=1)[j]
        # first state whose cumulative probability exceeds u; clip guards float round-off
        out[:, i] = np.minimum((u[:, None] >= cdf).sum(axis=1), card[i] - 1)
    return CategoricalDataset(net.variables, out)


# ---------------------------------------------------------------------------
# presets

PRESET_ARCS = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]

# probability of state 0, per parent configuration in mixed-radix order
_PRESET_ROWS = {
    "structure1-skewed": {
        "root": 0.8,
        "one_parent": [0.9, 0.1],
        "two_parents": [0.9, 0.7, 0.3, 0.1],
    },
    "structure2-nonskewed": {
        "root": 0.55,
        "one_parent": [0.55, 0.45],
        "two_parents": [0.55, 0.525, 0.475, 0.45],
    },
}

PRESET_NAMES = tuple(_PRESET_ROWS)


def preset(name: str) -> BayesNet:
    """Four binary variables x1..x4 with arcs x1->x2, x1->x3, x2->x3, x2->x4, x3->x4.

    ``structure1-skewed`` has CPT rows that move the probability of state 0
    from 0.9 (all parents 0) to 0.1 (all parents 1); ``structure2-nonskewed``
    keeps every row within 0.45..0.55.
    """
    try:
        rows = _PRESET_ROWS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {list(PRESET_NAMES)}") from None
    variables = [Variable(f"x{i + 1}", 2) for i in range(4)]
    dag = Dag.from_arcs(4, PRESET_ARCS)
    cpts = []
    for ps in dag.parents:
        if not ps:
            p0 = [rows["root"]]
        elif len(ps) == 1:
            p0 = rows["one_parent"]
        else:
            p0 = rows["two_parents"]
        cpts.append([[p, 1.0 - p] for p in p0])
    return BayesNet(variables, dag, cpts)


def all_assignments(cardinalities: Sequence[int]):
    return itertools.product(*(range(c) for c in cardinalities))

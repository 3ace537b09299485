"""Variables, structures, datasets and sufficient statistics.

States of a variable with cardinality ``r`` are encoded ``0..r-1``. A parent
configuration is encoded mixed-radix with the first listed parent as the most
significant digit. Parents are always stored sorted by variable index, so the
first listed parent is the one with the lowest index.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

LN2 = math.log(2.0)


class DataFormatError(ValueError):
    """Input could not be parsed (bad CSV, JSON, or out-of-range values)."""


class DimensionMismatchError(ValueError):
    """Dataset, structure or network disagree on variables or cardinalities."""


@dataclass(frozen=True)
class Variable:
    name: str
    cardinality: int

    def __post_init__(self):
        if int(self.cardinality) != self.cardinality or self.cardinality < 2:
            raise DataFormatError(
                f"variable {self.name!r}: cardinality must be an integer >= 2, "
                f"got {self.cardinality!r}"
            )


def _check_unique_names(variables: Sequence[Variable]) -> None:
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise DataFormatError(f"duplicate variable names in {names}")


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over ``num_vars`` nodes, stored as parent sets."""

    num_vars: int
    parents: tuple[tuple[int, ...], ...]

    def __init__(self, num_vars: int, parents: Iterable[Iterable[int]] | None = None):
        if parents is None:
            parents = [()] * num_vars
        pa = tuple(tuple(sorted(int(p) for p in ps)) for ps in parents)
        if len(pa) != num_vars:
            raise DimensionMismatchError(
                f"expected {num_vars} parent sets, got {len(pa)}"
            )
        for i, ps in enumerate(pa):
            if len(set(ps)) != len(ps):
                raise DataFormatError(f"duplicate parent in parent set of node {i}")
            for p in ps:
                if p == i:
                    raise DataFormatError(f"self-loop on node {i}")
                if not 0 <= p < num_vars:
                    raise DataFormatError(f"parent index {p} out of range for node {i}")
        object.__setattr__(self, "num_vars", num_vars)
        object.__setattr__(self, "parents", pa)
        self.topological_order()  # raises on cycles

    @classmethod
    def from_arcs(cls, num_vars: int, arcs: Iterable[tuple[int, int]]) -> "Dag":
        pa: list[list[int]] = [[] for _ in range(num_vars)]
        for u, v in arcs:
            pa[v].append(u)
        return cls(num_vars, pa)

    @classmethod
    def from_masks(cls, masks: Sequence[int]) -> "Dag":
        n = len(masks)
        return cls(n, [[p for p in range(n) if (m >> p) & 1] for m in masks])

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return [(p, i) for i, ps in enumerate(self.parents) for p in ps]

    @property
    def num_arcs(self) -> int:
        return sum(len(ps) for ps in self.parents)

    @property
    def masks(self) -> tuple[int, ...]:
        """Parent sets as bitmasks (bit ``p`` set when ``p`` is a parent)."""
        return tuple(sum(1 << p for p in ps) for ps in self.parents)

    def topological_order(self) -> list[int]:
        """Kahn's algorithm, always releasing the smallest ready index first."""
        indeg = [len(ps) for ps in self.parents]
        children: list[list[int]] = [[] for _ in range(self.num_vars)]
        for i, ps in enumerate(self.parents):
            for p in ps:
                children[p].append(i)
        ready = sorted(i for i in range(self.num_vars) if indeg[i] == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
            ready.sort()
        if len(order) != self.num_vars:
            raise DataFormatError("graph contains a directed cycle")
        return order

    def with_parents(self, i: int, parents: Iterable[int]) -> "Dag":
        pa = list(self.parents)
        pa[i] = tuple(parents)
        return Dag(self.num_vars, pa)


class ParentConfigIndexer:
    """Mixed-radix map between parent state vectors and configuration index j."""

    def __init__(self, cardinalities: Sequence[int]):
        self.cardinalities = tuple(int(c) for c in cardinalities)
        strides = []
        s = 1
        for c in reversed(self.cardinalities):
            strides.append(s)
            s *= c
        self.strides = tuple(reversed(strides))
        self.q = s

    def index(self, states: Sequence[int]) -> int:
        if len(states) != len(self.cardinalities):
            raise DimensionMismatchError("parent state vector has wrong length")
        j = 0
        for v, c, st in zip(states, self.cardinalities, self.strides):
            if not 0 <= v < c:
                raise DataFormatError(f"state {v} out of range for cardinality {c}")
            j += int(v) * st
        return j

    def states(self, j: int) -> tuple[int, ...]:
        if not 0 <= j < self.q:
            raise DataFormatError(f"configuration index {j} out of range 0..{self.q - 1}")
        return tuple((j // st) % c for c, st in zip(self.cardinalities, self.strides))

    def index_array(self, columns: np.ndarray) -> np.ndarray:
        """Vectorised ``index`` over rows of an ``(n, len(parents))`` array."""
        j = np.zeros(columns.shape[0], dtype=np.int64)
        for col, st in enumerate(self.strides):
            j += columns[:, col].astype(np.int64) * st
        return j


class CategoricalDataset:
    """Complete records over discrete variables.

    ``records`` is stored as an ``(n, N)`` int64 array which is made read-only.
    """

    def __init__(self, variables: Sequence[Variable], records=None):
        self.variables = tuple(variables)
        _check_unique_names(self.variables)
        N = len(self.variables)
        if records is None:
            arr = np.zeros((0, N), dtype=np.int64)
        else:
            arr = np.asarray(records)
            if arr.size == 0:
                arr = np.zeros((0, N), dtype=np.int64)
            if arr.ndim != 2 or arr.shape[1] != N:
                raise DimensionMismatchError(
                    f"records must have shape (n, {N}), got {arr.shape}"
                )
            if arr.dtype.kind == "f":
                if np.isnan(arr).any():
                    raise DataFormatError("missing values are not supported")
                if not np.all(arr == np.round(arr)):
                    raise DataFormatError("records must hold integer state indices")
            elif arr.dtype.kind not in "iub":
                raise DataFormatError(f"records must be integers, got dtype {arr.dtype}")
            arr = arr.astype(np.int64)
        for i, v in enumerate(self.variables):
            col = arr[:, i]
            if col.size and (col.min() < 0 or col.max() >= v.cardinality):
                raise DataFormatError(
                    f"variable {v.name!r}: states must lie in 0..{v.cardinality - 1}"
                )
        arr.setflags(write=False)
        self.records = arr

    @property
    def n(self) -> int:
        return self.records.shape[0]

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"CategoricalDataset(n={self.n}, variables={self.names})"


@dataclass(frozen=True)
class SufficientStats:
    """Per-variable ``q_i x r_i`` count tables ``n_ijk``."""

    tables: tuple[np.ndarray, ...]
    n: int = 0
    cardinalities: tuple[int, ...] = field(default=())

    @property
    def row_sums(self) -> list[np.ndarray]:
        return [t.sum(axis=1) for t in self.tables]


def check_compatible(dataset: CategoricalDataset, dag: Dag) -> None:
    if dataset.num_vars != dag.num_vars:
        raise DimensionMismatchError(
            f"dataset has {dataset.num_vars} variables but structure has {dag.num_vars}"
        )


def family_counts(
    records: np.ndarray, cardinalities: Sequence[int], i: int, parents: Sequence[int]
) -> np.ndarray:
    """``q_i x r_i`` count table for variable ``i`` given ``parents``."""
    r = cardinalities[i]
    indexer = ParentConfigIndexer([cardinalities[p] for p in parents])
    j = indexer.index_array(records[:, list(parents)]) if parents else 0
    flat = np.bincount(j * r + records[:, i], minlength=indexer.q * r)
    return flat.reshape(indexer.q, r)


def count_stats(dataset: CategoricalDataset, dag: Dag) -> SufficientStats:
    check_compatible(dataset, dag)
    card = dataset.cardinalities
    tables = tuple(
        family_counts(dataset.records, card, i, dag.parents[i])
        for i in range(dag.num_vars)
    )
    return SufficientStats(tables, dataset.n, card)


def eap_estimate(stats: SufficientStats, hyper: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Posterior-mean CPTs ``(alpha_ijk + n_ijk) / (alpha_ij + n_ij)``."""
    out = []
    for counts, alpha in zip(stats.tables, hyper, strict=True):
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != counts.shape:
            raise DimensionMismatchError("hyperparameter table shape differs from counts")
        if np.any(alpha <= 0):
            raise ValueError("EAP estimation needs strictly positive hyperparameters")
        post = alpha + counts
        out.append(post / post.sum(axis=1, keepdims=True))
    return out


def xlogy_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise ``num * ln(num / den)`` with the ``0 ln 0 = 0`` convention."""
    num = np.asarray(num, dtype=float)
    den = np.broadcast_to(np.asarray(den, dtype=float), num.shape)
    out = np.zeros_like(num)
    pos = num > 0
    out[pos] = num[pos] * np.log(num[pos] / den[pos])
    return out


def family_log_likelihood(counts: np.ndarray) -> float:
    """Maximum-likelihood log-likelihood of one family, in bits."""
    rows = counts.sum(axis=1, keepdims=True)
    return float(xlogy_ratio(counts, rows).sum()) / LN2


def log_likelihood(stats: SufficientStats) -> float:
    """Maximum-likelihood plug-in log-likelihood in bits."""
    return sum(family_log_likelihood(t) for t in stats.tables)


# ---------------------------------------------------------------------------
# file formats


def read_csv(path_or_buf) -> CategoricalDataset:
    """Read names row, cardinalities row, then integer state rows."""
    if isinstance(path_or_buf, (str, Path)):
        with open(path_or_buf, newline="") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(path_or_buf))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataFormatError("CSV needs a names row and a cardinalities row")
    names = [c.strip() for c in rows[0]]
    try:
        cards = [int(c) for c in rows[1]]
    except ValueError as exc:
        raise DataFormatError(f"cardinalities row: {exc}") from None
    if len(cards) != len(names):
        raise DataFormatError("cardinalities row length differs from names row")
    variables = [Variable(nm, c) for nm, c in zip(names, cards)]
    data = []
    for lineno, row in enumerate(rows[2:], start=3):
        if len(row) != len(names):
            raise DataFormatError(f"line {lineno}: expected {len(names)} fields, got {len(row)}")
        try:
            data.append([int(c) for c in row])
        except ValueError:
            raise DataFormatError(f"line {lineno}: missing or non-integer value") from None
    return CategoricalDataset(variables, np.array(data, dtype=np.int64).reshape(-1, len(names)))


def dataset_to_csv(dataset: CategoricalDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(dataset.names)
    w.writerow(dataset.cardinalities)
    w.writerows(dataset.records.tolist())
    return buf.getvalue()


def dag_to_dict(dag: Dag, variables: Sequence[Variable]) -> dict:
    if len(variables) != dag.num_vars:
        raise DimensionMismatchError("variable list length differs from structure size")
    return {
        "variables": [{"name": v.name, "cardinality": v.cardinality} for v in variables],
        "arcs": [[variables[u].name, variables[v].name] for u, v in dag.arcs],
    }


def variables_from_dict(obj: dict) -> list[Variable]:
    try:
        variables = [Variable(str(v["name"]), int(v["cardinality"])) for v in obj["variables"]]
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"malformed 'variables' field: {exc}") from None
    _check_unique_names(variables)
    return variables


def dag_from_dict(obj: dict) -> tuple[Dag, list[Variable]]:
    variables = variables_from_dict(obj)
    index = {v.name: i for i, v in enumerate(variables)}
    arcs = []
    for arc in obj.get("arcs", []):
        try:
            u, v = arc
            arcs.append((index[u], index[v]))
        except (ValueError, TypeError):
            raise DataFormatError(f"malformed arc {arc!r}") from None
        except KeyError as exc:
            raise DataFormatError(f"arc {arc!r} names unknown variable {exc}") from None
    return Dag.from_arcs(len(variables), arcs), variables


def read_structure(path) -> tuple[Dag, list[Variable]]:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"structure JSON: {exc}") from None
    return dag_from_dict(obj)


def check_same_variables(a: Sequence[Variable], b: Sequence[Variable]) -> None:
    if len(a) != len(b):
        raise DimensionMismatchError(f"variable count {len(a)} != {len(b)}")
    for x, y in zip(a, b):
        if x.name != y.name:
            raise DimensionMismatchError(f"variable name {x.name!r} != {y.name!r}")
        if x.cardinality != y.cardinality:
            raise DimensionMismatchError(
                f"variable {x.name!r}: cardinality {x.cardinality} != {y.cardinality}"
            )

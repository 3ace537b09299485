"""Exact structure search.

Two routes find the highest-scoring DAG: scoring every labelled DAG
(``exhaustive_best``, N <= 5) and dynamic programming over variable subsets
(``exact_dp_best``, N <= 20). Both share a ``FamilyScoreCache`` and the same
tie-break: among structures whose score is within ``tol`` of the optimum,
prefer fewer arcs, then the lexicographically smallest tuple of per-variable
parent bitmasks.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterator

import numpy as np

from .core import CategoricalDataset, Dag, family_counts
from .scores import check_kind, family_score

EXHAUSTIVE_MAX_VARS = 5
DP_MAX_VARS = 20
REL_TIE_TOL = 1e-10


class SearchLimitError(ValueError):
    """Variable count exceeds what the chosen search method supports."""


@dataclass
class SearchResult:
    dag: Dag
    score: float
    n_candidates: int
    n_ties: int


# ---------------------------------------------------------------------------
# enumeration


def _subsets(items):
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)


def _layered(remaining: frozenset, placed: tuple, last_layer: tuple):
    """Yield parent-set dicts for DAGs decomposed into longest-path layers.

    Every node of a layer has at least one parent in the previous layer and
    may take any further parents from earlier layers, which makes the
    decomposition of each DAG unique.
    """
    if not remaining:
        yield {}
        return
    rem = sorted(remaining)
    for k in range(1, len(rem) + 1):
        for layer in itertools.combinations(rem, k):
            if last_layer:
                earlier = [p for p in placed if p not in last_layer]
                choices = [
                    [tuple(sorted(a + b)) for a in _subsets(last_layer) if a for b in _subsets(earlier)]
                ] * len(layer)
            else:
                choices = [[()]] * len(layer)
            rest = remaining - set(layer)
            for pa_combo in itertools.product(*choices):
                head = dict(zip(layer, pa_combo))
                for tail in _layered(rest, placed + layer, layer):
                    yield {**head, **tail}


@lru_cache(maxsize=None)
def _dag_masks(num_vars: int) -> np.ndarray:
    rows = []
    for pa in _layered(frozenset(range(num_vars)), (), ()):
        rows.append([sum(1 << p for p in pa[i]) for i in range(num_vars)])
    arr = np.array(rows, dtype=np.int64).reshape(-1, num_vars)
    arr.setflags(write=False)
    return arr


def enumerate_dags(num_vars: int) -> Iterator[Dag]:
    """Every labelled DAG on ``num_vars`` nodes, each exactly once."""
    if num_vars < 0:
        raise ValueError("number of variables must be non-negative")
    if num_vars > EXHAUSTIVE_MAX_VARS:
        raise SearchLimitError(
            f"DAG enumeration supports at most {EXHAUSTIVE_MAX_VARS} variables, got {num_vars}"
        )
    for row in _dag_masks(num_vars):
        yield Dag.from_masks([int(m) for m in row])


def count_dags(num_vars: int) -> int:
    """Robinson's recurrence for the number of labelled DAGs."""
    a = [1]
    for n in range(1, num_vars + 1):
        a.append(
            sum((-1) ** (k + 1) * comb(n, k) * 2 ** (k * (n - k)) * a[n - k] for k in range(1, n + 1))
        )
    return a[num_vars]


# ---------------------------------------------------------------------------
# family scores


class FamilyScoreCache:
    """Family scores keyed by ``(variable, parent bitmask)``, filled on demand."""

    def __init__(self, dataset: CategoricalDataset, kind: str, scheme=None):
        if kind in ("aic", "bic"):
            scheme = None
        check_kind(kind, scheme)
        if kind == "bic" and dataset.n < 1:
            raise ValueError("BIC needs a sample size n >= 1")
        self.dataset = dataset
        self.kind = kind
        self.scheme = scheme
        self.num_vars = dataset.num_vars
        self._cache: dict[tuple[int, int], float] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._cache)

    def get(self, i: int, mask: int) -> float:
        key = (i, mask)
        try:
            return self._cache[key]
        except KeyError:
            pass
        parents = tuple(p for p in range(self.num_vars) if (mask >> p) & 1)
        card = self.dataset.cardinalities
        counts = family_counts(self.dataset.records, card, i, parents)
        value = family_score(self.kind, self.scheme, counts, i, parents, card, self.dataset.n)
        with self._lock:
            self._cache[key] = value
        return value

    def table(self, i: int, max_parents: int | None = None) -> np.ndarray:
        """Scores of variable ``i`` for every full-width parent mask; invalid masks get -inf."""
        N = self.num_vars
        out = np.full(1 << N, -np.inf)
        others = [p for p in range(N) if p != i]
        limit = len(others) if max_parents is None else max_parents
        for k in range(min(limit, len(others)) + 1):
            for ps in itertools.combinations(others, k):
                m = sum(1 << p for p in ps)
                out[m] = self.get(i, m)
        return out

    def dag_score(self, dag: Dag) -> float:
        return sum(self.get(i, m) for i, m in enumerate(dag.masks))

    def tie_tol(self) -> float:
        scale = abs(sum(self.get(i, 0) for i in range(self.num_vars)))
        return REL_TIE_TOL * max(1.0, scale)


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.int64)
    c = np.zeros_like(a)
    while np.any(a):
        c += a & 1
        a = a >> 1
    return c


def _finish(cache: FamilyScoreCache, masks, n_candidates: int, n_ties: int) -> SearchResult:
    dag = Dag.from_masks([int(m) for m in masks])
    return SearchResult(dag, cache.dag_score(dag), n_candidates, n_ties)


def exhaustive_best(dataset: CategoricalDataset, kind: str = "exact-ml", scheme=None,
                    cache: FamilyScoreCache | None = None) -> SearchResult:
    N = dataset.num_vars
    if N > EXHAUSTIVE_MAX_VARS:
        raise SearchLimitError(
            f"exhaustive search supports at most {EXHAUSTIVE_MAX_VARS} variables, got {N}"
        )
    cache = cache or FamilyScoreCache(dataset, kind, scheme)
    dags = _dag_masks(N)
    scores = np.zeros(len(dags))
    for i in range(N):
        scores += cache.table(i)[dags[:, i]]
    best = scores.max()
    tied = np.flatnonzero(scores >= best - cache.tie_tol())
    arcs = _popcount(dags[tied]).sum(axis=1)
    # lexsort: last key is primary
    keys = [dags[tied, i] for i in reversed(range(N))] + [arcs]
    pick = tied[np.lexsort(keys)[0]]
    return _finish(cache, dags[pick], len(dags), len(tied))


def _squeeze(masks: np.ndarray, i: int) -> np.ndarray:
    """Drop bit ``i`` from full-width masks, giving indices into a 2^(N-1) table."""
    low = (1 << i) - 1
    return (masks & low) | ((masks >> (i + 1)) << i)


def _best_parent_sets(cache: FamilyScoreCache, i: int, max_parents: int | None, tol: float):
    """For every candidate set C (bit i removed): best parent subset of C and its score."""
    N = cache.num_vars
    full = cache.table(i, max_parents)
    cand = np.arange(1 << N)
    cand = cand[(cand >> i) & 1 == 0]
    score = full[cand].copy()
    mask = cand.copy()
    arcs = _popcount(mask)
    idx = np.arange(1 << (N - 1))
    for b in range(N - 1):
        has = (idx >> b) & 1 == 1
        src = idx[has] ^ (1 << b)
        dst = idx[has]
        s1, s2 = score[dst], score[src]
        a1, a2 = arcs[dst], arcs[src]
        m1, m2 = mask[dst], mask[src]
        with np.errstate(invalid="ignore"):  # -inf - -inf on capped sets; nan compares False
            close = np.abs(s2 - s1) <= tol
        better = (s2 > s1 + tol) | (close & ((a2 < a1) | ((a2 == a1) & (m2 < m1))))
        sel = dst[better]
        score[sel] = s2[better]
        arcs[sel] = a2[better]
        mask[sel] = m2[better]
    return score, arcs, mask


def _tuple_lt(a: np.ndarray, b: np.ndarray) -> bool:
    diff = np.flatnonzero(a != b)
    return bool(diff.size) and a[diff[0]] < b[diff[0]]


def exact_dp_best(dataset: CategoricalDataset, kind: str = "exact-ml", scheme=None,
                  max_parents: int | None = None,
                  cache: FamilyScoreCache | None = None) -> SearchResult:
    """Optimal DAG by dynamic programming over subsets of variables.

    ``best[S]`` holds the best network on subset ``S``; it is built from
    ``best[S - {s}]`` plus the best parents of sink ``s`` drawn from ``S - {s}``.
    """
    N = dataset.num_vars
    if N > DP_MAX_VARS:
        raise SearchLimitError(f"DP search supports at most {DP_MAX_VARS} variables, got {N}")
    cache = cache or FamilyScoreCache(dataset, kind, scheme)
    tol = cache.tie_tol()
    bps = [_best_parent_sets(cache, i, max_parents, tol) for i in range(N)]
    n_candidates = len(cache)

    size = 1 << N
    best = np.full(size, -np.inf)
    best[0] = 0.0
    nar = np.zeros(size, dtype=np.int64)
    pa = np.zeros((size, max(N, 1)), dtype=np.int64)
    subsets = np.arange(size)
    pop = _popcount(subsets)
    n_ties = 1
    for layer in range(1, N + 1):
        S = subsets[pop == layer]
        cand_score = np.full((len(S), N), -np.inf)
        cand_arcs = np.zeros((len(S), N), dtype=np.int64)
        for s in range(N):
            has = (S >> s) & 1 == 1
            rest = S[has] ^ (1 << s)
            j = _squeeze(rest, s)
            cand_score[has, s] = best[rest] + bps[s][0][j]
            cand_arcs[has, s] = nar[rest] + bps[s][1][j]
        top = cand_score.max(axis=1)
        near = cand_score >= top[:, None] - tol
        fewest = np.where(near, cand_arcs, np.iinfo(np.int64).max).min(axis=1)
        winners = near & (cand_arcs == fewest[:, None])
        for row, Sv in enumerate(S):
            sinks = np.flatnonzero(winners[row])
            chosen_tuple = None
            chosen = None
            for s in sinks:
                rest = Sv ^ (1 << s)
                t = pa[rest].copy()
                t[s] = bps[s][2][_squeeze(np.int64(rest), s)]
                if chosen_tuple is None or _tuple_lt(t, chosen_tuple):
                    chosen_tuple, chosen = t, s
            best[Sv] = cand_score[row, chosen]
            nar[Sv] = cand_arcs[row, chosen]
            pa[Sv] = chosen_tuple
            if layer == N:
                n_ties = len(sinks)
    if N == 0:
        return SearchResult(Dag(0), 0.0, 0, 1)
    return _finish(cache, pa[size - 1], n_candidates, n_ties)


# ---------------------------------------------------------------------------
# Markov equivalence


@dataclass(frozen=True)
class EquivalenceClass:
    """Skeleton plus v-structures; equal exactly for Markov-equivalent DAGs."""

    num_vars: int
    skeleton: frozenset[tuple[int, int]]
    v_structures: frozenset[tuple[int, int, int]]


def equivalence_class(dag: Dag) -> EquivalenceClass:
    skeleton = frozenset((min(u, v), max(u, v)) for u, v in dag.arcs)
    vs = set()
    for c, ps in enumerate(dag.parents):
        for a, b in itertools.combinations(ps, 2):
            if (a, b) not in skeleton:
                vs.add((a, c, b))
    return EquivalenceClass(dag.num_vars, skeleton, frozenset(vs))


def cpdag(dag: Dag) -> tuple[frozenset[tuple[int, int]], frozenset[tuple[int, int]]]:
    """Completed partially directed graph as (directed arcs, undirected edges).

    Starts from the v-structures and closes under Meek's orientation rules 1-3.
    """
    eq = equivalence_class(dag)
    directed = set()
    for a, c, b in eq.v_structures:
        directed |= {(a, c), (b, c)}
    undirected = {e for e in eq.skeleton if (e[0], e[1]) not in directed and (e[1], e[0]) not in directed}

    def adjacent(x, y):
        return (min(x, y), max(x, y)) in eq.skeleton

    changed = True
    while changed:
        changed = False
        for x, y in sorted(undirected):
            for u, v in ((x, y), (y, x)):
                orient = False
                # R1: a -> u - v with a, v non-adjacent
                if any(b == u and not adjacent(a, v) for a, b in directed):
                    orient = True
                # R2: u -> w -> v
                elif any((u, w) in directed and (w, v) in directed for w in range(eq.num_vars)):
                    orient = True
                # R3: u - w1 -> v, u - w2 -> v, w1 and w2 non-adjacent
                else:
                    ws = [
                        w for w in range(eq.num_vars)
                        if (min(u, w), max(u, w)) in undirected and (w, v) in directed
                    ]
                    orient = any(not adjacent(w1, w2) for w1, w2 in itertools.combinations(ws, 2))
                if orient:
                    undirected.discard((x, y))
                    directed.add((u, v))
                    changed = True
                    break
    return frozenset(directed), frozenset(undirected)

"""Monte-Carlo structure-recovery trials.

Each trial samples a dataset from a generating network, learns the optimal
structure, and compares it to the generating structure. Trial ``t`` at the
``s``-th sample size uses seed ``base_seed + t + SEED_PRIME * s``, so cells are
reproducible and independent of which scores or ESS values are evaluated.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .core import Dag, DimensionMismatchError
from .scores import BDeu
from .search import EXHAUSTIVE_MAX_VARS, cpdag, exact_dp_best, exhaustive_best
from .simulate import BayesNet, forward_sample

DEFAULT_SIZES = (100, 500, 1000, 5000, 10000)
SWEEP_ESS = (1e-6, 0.01, 0.1, 1.0, 10.0, 100.0, 1e6)
SEED_PRIME = 1_000_003
CSV_HEADER = ("scheme", "ess", "n", "correct", "extra", "missing", "trials")


@dataclass(frozen=True)
class ArcDiff:
    extra: int
    missing: int
    exact_match: bool


@dataclass(frozen=True)
class CellResult:
    n: int
    correct: int
    extra: int
    missing: int
    trials: int
    arcs: int = 0  # total learned arcs, for trend checks


@dataclass(frozen=True)
class TrialConfig:
    net: BayesNet
    sizes: Sequence[int] = DEFAULT_SIZES
    trials: int = 100
    kind: str = "exact-ml"
    scheme: object = field(default_factory=lambda: BDeu(1.0))
    base_seed: int = 0
    method: str = "auto"
    arc_compare: str = "directed"
    max_parents: int | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.sizes or any(n <= 0 for n in self.sizes):
            raise ValueError("sample sizes must be positive")
        if self.arc_compare not in ("directed", "cpdag"):
            raise ValueError(f"unknown arc comparison mode {self.arc_compare!r}")
        if self.method not in ("auto", "exhaustive", "dp"):
            raise ValueError(f"unknown search method {self.method!r}")


def _edge_set(dag: Dag, mode: str) -> set:
    if mode == "directed":
        return set(dag.arcs)
    directed, undirected = cpdag(dag)
    return {("->",) + a for a in directed} | {("--",) + e for e in undirected}


def arc_diff(true_dag: Dag, learned_dag: Dag, mode: str = "directed") -> ArcDiff:
    """Count extra and missing arcs; a reversed arc is one extra plus one missing.

    In ``cpdag`` mode both graphs are first reduced to their equivalence-class
    representation, and an edge only matches when its type and direction agree.
    """
    if true_dag.num_vars != learned_dag.num_vars:
        raise DimensionMismatchError("structures are over different variable sets")
    t = _edge_set(true_dag, mode)
    lr = _edge_set(learned_dag, mode)
    extra, missing = len(lr - t), len(t - lr)
    return ArcDiff(extra, missing, extra == 0 and missing == 0)


def trial_seed(base_seed: int, trial: int, size_index: int) -> int:
    return base_seed + trial + SEED_PRIME * size_index


def learn(dataset, kind, scheme, method="auto", max_parents=None):
    if method == "auto":
        method = "exhaustive" if dataset.num_vars <= EXHAUSTIVE_MAX_VARS else "dp"
    if method == "exhaustive":
        return exhaustive_best(dataset, kind, scheme)
    return exact_dp_best(dataset, kind, scheme, max_parents=max_parents)


def _one_trial(config: TrialConfig, n: int, seed: int) -> tuple[ArcDiff, int]:
    data = forward_sample(config.net, n, seed)
    result = learn(data, config.kind, config.scheme, config.method, config.max_parents)
    return arc_diff(config.net.dag, result.dag, config.arc_compare), result.dag.num_arcs


def run_cell(config: TrialConfig, n: int, size_index: int | None = None) -> CellResult:
    if size_index is None:
        size_index = list(config.sizes).index(n) if n in config.sizes else 0
    seeds = [trial_seed(config.base_seed, t, size_index) for t in range(config.trials)]
    if config.n_jobs > 1:
        with ThreadPoolExecutor(config.n_jobs) as pool:
            outcomes = list(pool.map(lambda s: _one_trial(config, n, s), seeds))
    else:
        outcomes = [_one_trial(config, n, s) for s in seeds]
    return CellResult(
        n=n,
        correct=sum(d.exact_match for d, _ in outcomes),
        extra=sum(d.extra for d, _ in outcomes),
        missing=sum(d.missing for d, _ in outcomes),
        trials=config.trials,
        arcs=sum(a for _, a in outcomes),
    )


def run_config(config: TrialConfig) -> list[CellResult]:
    return [run_cell(config, n, s) for s, n in enumerate(config.sizes)]


def ess_sweep(config: TrialConfig, ess_values: Sequence[float]) -> dict[tuple[float, int], CellResult]:
    """BDeu cells for every ``(ess, n)`` pair; datasets are shared across ESS values."""
    if any(not a > 0 for a in ess_values):
        raise ValueError("ESS values must be > 0")
    table = {}
    for a in ess_values:
        cfg = replace(config, scheme=BDeu(a))
        for s, n in enumerate(config.sizes):
            table[(a, n)] = run_cell(cfg, n, s)
    return table


def alpha_star(config: TrialConfig, candidates: Sequence[float]) -> dict[int, float]:
    """Best ESS per sample size: most exact recoveries, then fewest arc errors, then smallest ESS."""
    candidates = sorted(candidates)
    if not candidates:
        raise ValueError("need at least one candidate ESS")
    table = ess_sweep(config, candidates)
    best = {}
    for n in config.sizes:
        best[n] = min(
            candidates,
            key=lambda a: (-table[(a, n)].correct, table[(a, n)].extra + table[(a, n)].missing, a),
        )
    return best


# ---------------------------------------------------------------------------
# output tables


def fmt_num(x) -> str:
    return "" if x is None else f"{x:.6g}"


def table_rows(results: Sequence[tuple[str, float | None, CellResult]], alpha: dict | None = None):
    rows = []
    for scheme, ess, cell in results:
        row = {
            "scheme": scheme,
            "ess": ess,
            "n": cell.n,
            "correct": cell.correct,
            "extra": cell.extra,
            "missing": cell.missing,
            "trials": cell.trials,
        }
        if alpha is not None:
            row["alpha_star"] = alpha.get(cell.n)
        rows.append(row)
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    header = list(CSV_HEADER)
    if rows and "alpha_star" in rows[0]:
        header.append("alpha_star")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_num(r[h]) if h in ("ess", "alpha_star") else r[h] for h in header])
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2) + "\n"


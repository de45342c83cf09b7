"""Variable-order search: exact dynamic programming over predecessor sets.

Per-stratum scores depend only on (variable, predecessor set), so the best
order decomposes over subsets: best(S) = min over i in S of
best(S - {i}) + score(i, S - {i}).  The DP visits every such pair exactly
once (p * 2^(p-1) stratum evaluations) and still returns the global
optimum; exhaustive enumeration over all p! orders is kept as an oracle
and for reporting score ties.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Dataset, StagedTree
from .probability import fit_mle
from .staging import StagingResult, learn_stratum, staging_for_order

__all__ = [
    "ScoreCache",
    "DiscoveryResult",
    "stratum_score",
    "best_order_dp",
    "best_order_exhaustive",
]

DP_LIMIT = 20
EXHAUSTIVE_LIMIT = 7
TIE_REL_TOL = 1e-9


@dataclass
class ScoreCache:
    """Memoised stratum results keyed by (variable, predecessor bitmask)."""

    entries: dict[tuple[int, int], StagingResult] = field(default_factory=dict)
    evaluations: int = 0

    def get(
        self,
        data: Dataset,
        var: int,
        preds: Sequence[int],
        method: str,
        k: int,
        restarts: int,
        seed: int,
    ) -> StagingResult:
        mask = 0
        for c in preds:
            mask |= 1 << int(c)
        key = (int(var), mask)
        hit = self.entries.get(key)
        if hit is None:
            hit = learn_stratum(data, var, tuple(preds), method, k, restarts, seed)
            self.entries[key] = hit
            self.evaluations += 1
        return hit


@dataclass
class DiscoveryResult:
    """Outcome of an order search: best order, fitted tree, decomposed score."""

    order: tuple[int, ...]
    tree: StagedTree
    score: float
    cache: ScoreCache
    all_scores: list[tuple[tuple[int, ...], float]] | None = None
    tied_orders: list[tuple[int, ...]] | None = None


def stratum_score(
    data: Dataset,
    var: int,
    preds: Sequence[int],
    method: str = "bhc",
    k: int = 2,
    restarts: int = 10,
    seed: int = 0,
    cache: ScoreCache | None = None,
) -> tuple[float, np.ndarray]:
    """Memoised score contribution and staging for one (variable, set) pair."""
    if int(var) in {int(c) for c in preds}:
        raise ValueError("variable cannot appear in its own predecessor set")
    cache = cache if cache is not None else ScoreCache()
    res = cache.get(data, var, preds, method, k, restarts, seed)
    return res.score, res.labels


def _assemble(
    data: Dataset,
    order: tuple[int, ...],
    cache: ScoreCache,
    method: str,
    k: int,
    restarts: int,
    seed: int,
    smoothing: float,
    fit_params: bool,
) -> StagedTree:
    results = [
        cache.get(data, order[i], order[:i], method, k, restarts, seed)
        for i in range(len(order))
    ]
    staging = staging_for_order(data, order, results)
    tree = StagedTree(
        variables=tuple(data.variables[c] for c in order),
        order=order,
        staging=staging,
    )
    if fit_params:
        tree = fit_mle(tree, data, smoothing)
    return tree


def best_order_dp(
    data: Dataset,
    method: str = "bhc",
    k: int = 2,
    restarts: int = 10,
    seed: int = 0,
    smoothing: float = 0.0,
    fit_params: bool = True,
    cache: ScoreCache | None = None,
    limit: int = DP_LIMIT,
) -> DiscoveryResult:
    """Globally optimal variable order by dynamic programming over subsets.

    Ties at each DP step break toward the smallest variable index.  Memory
    and evaluation counts grow as 2^p; `limit` guards against accidents.
    """
    p = data.p
    if p > limit:
        raise ValueError(f"p={p} exceeds the DP limit {limit} (memory grows as 2^p)")
    cache = cache if cache is not None else ScoreCache()

    def s(var: int, mask: int) -> float:
        preds = tuple(c for c in range(p) if mask >> c & 1)
        return cache.get(data, var, preds, method, k, restarts, seed).score

    full = (1 << p) - 1
    best = np.empty(1 << p)
    choice = np.full(1 << p, -1, dtype=np.int64)
    best[0] = 0.0
    for mask in range(1, full + 1):
        b = math.inf
        ch = -1
        for i in range(p):
            if not mask >> i & 1:
                continue
            prev = mask & ~(1 << i)
            val = best[prev] + s(i, prev)
            if val < b:
                b = val
                ch = i
        best[mask] = b
        choice[mask] = ch

    rev = []
    mask = full
    while mask:
        i = int(choice[mask])
        rev.append(i)
        mask &= ~(1 << i)
    order = tuple(reversed(rev))
    tree = _assemble(data, order, cache, method, k, restarts, seed, smoothing, fit_params)
    return DiscoveryResult(order, tree, float(best[full]), cache)


def best_order_exhaustive(
    data: Dataset,
    method: str = "bhc",
    k: int = 2,
    restarts: int = 10,
    seed: int = 0,
    smoothing: float = 0.0,
    fit_params: bool = True,
    cache: ScoreCache | None = None,
    limit: int = EXHAUSTIVE_LIMIT,
) -> DiscoveryResult:
    """Score every permutation; returns the argmin plus all order scores.

    Shares the stratum cache with the DP search.  Orders whose score is
    within a 1e-9 relative band of the minimum are reported as ties.
    """
    p = data.p
    if p > limit:
        raise ValueError(f"p={p} exceeds the exhaustive limit {limit}")
    cache = cache if cache is not None else ScoreCache()
    all_scores: list[tuple[tuple[int, ...], float]] = []
    best_order: tuple[int, ...] | None = None
    best_score = math.inf
    for perm in itertools.permutations(range(p)):
        total = 0.0
        for i in range(p):
            total = total + cache.get(data, perm[i], perm[:i], method, k, restarts, seed).score
        all_scores.append((perm, total))
        if total < best_score:
            best_score = total
            best_order = perm
    tol = TIE_REL_TOL * max(1.0, abs(best_score))
    tied = [o for o, sc in all_scores if sc - best_score <= tol]
    tree = _assemble(
        data, best_order, cache, method, k, restarts, seed, smoothing, fit_params
    )
    return DiscoveryResult(best_order, tree, float(best_score), cache, all_scores, tied)

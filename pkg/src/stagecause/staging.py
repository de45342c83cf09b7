"""Stage-structure learning for one variable given its predecessors.

Two heuristics are provided, both operating on a single stratum's count
table and both scored by the penalised log-likelihood contribution
-2 * logL + m * (card - 1) * log N (lower is better):

* backward hill climbing: start saturated, greedily join the pair of
  stages whose merge decreases the score most, stop when no merge helps;
* k-means on the element-wise square roots of the (add-one smoothed)
  conditional probability vectors, with k-means++ seeding and restarts.

A full tree for a fixed variable order is assembled stratum by stratum;
each stratum is learned from the counts keyed by the unordered predecessor
set, so the result depends only on which variables precede, never on their
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .model import Dataset, StagedTree, permuted_context_indices
from .probability import fit_mle

__all__ = ["StagingResult", "bhc_stratum", "kmeans_stratum", "fit_order", "staging_score"]

LLOYD_MAX_ITER = 100


@dataclass
class StagingResult:
    """Learned staging of one stratum and its score contribution."""

    labels: np.ndarray
    score: float
    trace: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def n_stages(self) -> int:
        return int(self.labels.max()) + 1


def _stratum_loglik(counts: np.ndarray) -> np.ndarray:
    counts = np.atleast_2d(counts).astype(np.float64)
    safe = np.where(counts > 0, counts, 1.0)
    tot = counts.sum(axis=1)
    return (counts * np.log(safe)).sum(axis=1) - tot * np.log(np.where(tot > 0, tot, 1.0))


def staging_score(counts: np.ndarray, labels: np.ndarray, log_n: float | None = None) -> float:
    """Score of an arbitrary staging of a stratum (pooled pure-MLE fit)."""
    counts = np.asarray(counts)
    labels = np.asarray(labels)
    m = int(labels.max()) + 1
    pooled = np.zeros((m, counts.shape[1]), dtype=np.float64)
    np.add.at(pooled, labels, counts.astype(np.float64))
    if log_n is None:
        log_n = math.log(counts.sum())
    return float(-2.0 * _stratum_loglik(pooled).sum() + m * (counts.shape[1] - 1) * log_n)


def bhc_stratum(counts: np.ndarray, log_n: float | None = None) -> StagingResult:
    """Backward hill climbing over stage merges, starting saturated.

    Each iteration evaluates every unordered pair of current stages and
    applies the merge with the greatest score decrease; ties go to the
    lexicographically smallest pair.  `log_n` defaults to log of the total
    count (the sample size for complete data).
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2 or counts.shape[0] < 1:
        raise ValueError("counts must be a (contexts, levels) table")
    if log_n is None:
        log_n = math.log(counts.sum())
    labels, score, trace = _kernels.bhc_merge(counts, float(log_n))
    return StagingResult(labels, score, trace)


def _kmeanspp_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = points[idx]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _dense_labels(labels: np.ndarray) -> np.ndarray:
    remap: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, r in enumerate(labels):
        out[i] = remap.setdefault(int(r), len(remap))
    return out


def kmeans_stratum(
    counts: np.ndarray,
    k: int = 2,
    restarts: int = 10,
    seed=0,
    log_n: float | None = None,
) -> StagingResult:
    """Cluster contexts by the square roots of their smoothed conditionals.

    Add-one smoothing is applied before the square root, so unobserved
    contexts sit at the uniform vector.  Runs Lloyd's algorithm from
    k-means++ seeds, keeps the best of `restarts` runs by within-cluster
    sum of squares, drops empty clusters and relabels densely.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = np.asarray(counts, dtype=np.float64)
    c, card = counts.shape
    if log_n is None:
        log_n = math.log(counts.sum())
    if k >= c:
        labels = np.arange(c, dtype=np.int64)
        return StagingResult(labels, staging_score(counts, labels, log_n))
    probs = (counts + 1.0) / (counts.sum(axis=1) + card)[:, None]
    points = np.sqrt(probs)
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = base.spawn(restarts)
    best_labels = None
    best_wcss = math.inf
    for r in range(restarts):
        rng = np.random.default_rng(streams[r])
        centers = _kmeanspp_centers(points, k, rng)
        labels, _, wcss = _kernels.lloyd(points, centers, LLOYD_MAX_ITER)
        if wcss < best_wcss:
            best_wcss = wcss
            best_labels = labels
    labels = _dense_labels(best_labels)
    return StagingResult(labels, staging_score(counts, labels, log_n))


def learn_stratum(
    data: Dataset,
    var: int,
    preds: Sequence[int],
    method: str = "bhc",
    k: int = 2,
    restarts: int = 10,
    seed=0,
) -> StagingResult:
    """Learn one stratum from a dataset, in canonical predecessor order.

    The context enumeration follows the predecessors sorted by column id;
    callers fitting a tree re-index into their own order afterwards.  The
    k-means seed stream is derived from (seed, var, predecessor set), never
    from evaluation order, so concurrent evaluation is safe.
    """
    counts = data.stratum_counts(var, preds)
    log_n = math.log(data.n)
    if method == "bhc":
        return bhc_stratum(counts, log_n)
    if method == "kmeans":
        mask = sum(1 << int(c) for c in preds)
        sub = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(var), mask))
        return kmeans_stratum(counts, k, restarts, sub, log_n)
    raise ValueError(f"unknown staging method {method!r}")


def staging_for_order(
    data: Dataset,
    order: Sequence[int],
    results: Sequence[StagingResult],
) -> tuple[np.ndarray, ...]:
    """Re-index canonical stratum labels into tree context order."""
    cards = [data.variables[c].card for c in order]
    staging = []
    for i in range(len(order)):
        labels = results[i].labels
        if i == 0:
            staging.append(labels.copy())
            continue
        ranks = np.argsort(np.argsort(order[:i], kind="stable"), kind="stable")
        idx = permuted_context_indices(cards[:i], ranks)
        staging.append(labels[idx])
    return tuple(staging)


def fit_order(
    data: Dataset,
    order: Sequence[int],
    method: str = "bhc",
    k: int = 2,
    restarts: int = 10,
    seed=0,
    smoothing: float = 0.0,
    fit_params: bool = True,
) -> StagedTree:
    """Learn stagings for every stratum under a fixed variable order.

    Strata are learned independently of one another; the total score of the
    result is the sum of the per-stratum contributions.  Parameters are
    fitted by MLE with the given smoothing unless `fit_params` is false.
    """
    order = tuple(int(c) for c in order)
    if sorted(order) != list(range(data.p)):
        raise ValueError("order must be a permutation of the data columns")
    results = [
        learn_stratum(data, order[i], order[:i], method, k, restarts, seed)
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

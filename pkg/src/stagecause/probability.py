"""Parameter fitting, scoring, interventional semantics and sampling.

Every operation is a pure function of its arguments (sampling takes an
explicit seed), so all of them are safe to call concurrently.  Random
numbers come from numpy's PCG64 generator; experiment code derives
independent streams with ``np.random.SeedSequence`` so results are
bit-reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    Dataset,
    StagedTree,
    encode_digits,
    enumerate_digits,
    permuted_context_indices,
)

__all__ = [
    "Intervention",
    "EmptyStageError",
    "fit_mle",
    "joint_prob",
    "joint_table",
    "conditional",
    "interventional",
    "log_likelihood",
    "bic",
    "degrees_of_freedom",
    "sample",
]


class EmptyStageError(ValueError):
    """Raised when MLE is requested for a stage with no observations."""


@dataclass(frozen=True)
class Intervention:
    """An assignment of fixed levels to a set of tree positions."""

    targets: dict[int, int]

    def __post_init__(self):
        object.__setattr__(
            self, "targets", {int(k): int(v) for k, v in self.targets.items()}
        )


def _require_params(tree: StagedTree) -> None:
    if tree.params is None:
        raise ValueError("tree has no parameters; fit or attach them first")


def _tree_stratum_counts(tree: StagedTree, data: Dataset, depth: int) -> np.ndarray:
    """Counts for the tree's depth stratum, rows in tree context order."""
    cols = [data.column(v.name) for v in tree.variables]
    var_col = cols[depth]
    pred_cols = cols[:depth]
    for j in range(depth + 1):
        if data.variables[cols[j]].levels != tree.variables[j].levels:
            raise ValueError(
                f"levels of {tree.variables[j].name!r} differ between tree and data"
            )
    counts = data.stratum_counts(var_col, pred_cols)
    if depth == 0:
        return counts
    ranks = np.argsort(np.argsort(pred_cols, kind="stable"), kind="stable")
    idx = permuted_context_indices(tree.cards[:depth], ranks)
    return counts[idx]


def pooled_stage_counts(tree: StagedTree, data: Dataset, depth: int) -> np.ndarray:
    """(stages, levels) counts at a depth, pooled over each stage's contexts."""
    counts = _tree_stratum_counts(tree, data, depth)
    m = tree.n_stages(depth)
    pooled = np.zeros((m, tree.variables[depth].card), dtype=np.int64)
    np.add.at(pooled, tree.staging[depth], counts)
    return pooled


def fit_mle(tree: StagedTree, data: Dataset, smoothing: float = 0.0) -> StagedTree:
    """Maximum-likelihood stage parameters, optionally Laplace-smoothed.

    For stage s of variable i, probs[x] = (n_sx + a) / (n_s + a * card_i)
    with a = smoothing and counts pooled over the stage's contexts.  With
    smoothing 0 an unobserved stage has no MLE and raises EmptyStageError.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    params = []
    for i in range(tree.p):
        pooled = pooled_stage_counts(tree, data, i).astype(np.float64)
        totals = pooled.sum(axis=1)
        if smoothing == 0.0 and np.any(totals == 0):
            s = int(np.flatnonzero(totals == 0)[0])
            raise EmptyStageError(
                f"empty stage, smoothing required (depth {i + 1}, stage {s})"
            )
        card = tree.variables[i].card
        probs = (pooled + smoothing) / (totals + smoothing * card)[:, None]
        params.append(probs)
    interior = all(np.all((b > 0.0) & (b < 1.0)) for b in params)
    return tree.with_params(params, interior=interior)


def conditional(tree: StagedTree, i: int, context: Sequence[int]) -> np.ndarray:
    """Transition distribution of variable at tree position i given a context."""
    _require_params(tree)
    if len(context) != i:
        raise ValueError(f"context for position {i} must have depth {i}")
    sid = tree.staging[i][tree.context_index(context)]
    return tree.params[i][sid]


def joint_prob(tree: StagedTree, x: Sequence[int]) -> float:
    """Probability of a full assignment: product of stage parameters along
    the root-to-leaf path."""
    _require_params(tree)
    if len(x) != tree.p:
        raise ValueError("need a full assignment")
    prob = 1.0
    for i in range(tree.p):
        prob *= conditional(tree, i, x[:i])[x[i]]
    return float(prob)


def joint_table(tree: StagedTree) -> np.ndarray:
    """Full joint over the sample space, shaped by the tree-order cards."""
    _require_params(tree)
    cards = tree.cards
    digits = enumerate_digits(cards)
    prob = np.ones(digits.shape[0])
    for i in range(tree.p):
        idx = encode_digits(digits[:, :i], cards[:i])
        prob *= tree.params[i][tree.staging[i][idx], digits[:, i]]
    return prob.reshape(cards)


def interventional(tree: StagedTree, i: int, intervention: Intervention) -> np.ndarray:
    """Distribution of the variable at position i under do(targets).

    Targets must all precede i in the tree order.  Non-intervened
    predecessors are averaged out with their truncated-product weights, so
    intervening on the full prefix reduces to `conditional` and the empty
    intervention gives the observational marginal.
    """
    _require_params(tree)
    targets = intervention.targets
    if i in targets:
        raise ValueError("target variable cannot be intervened on")
    bad = [j for j in targets if not 0 <= j < i]
    if bad:
        raise ValueError(f"intervention positions {bad} do not precede position {i}")
    cards = tree.cards
    for j, z in targets.items():
        if not 0 <= z < cards[j]:
            raise ValueError(f"level {z} out of range for position {j}")
    digits = enumerate_digits(cards[:i])
    keep = np.ones(digits.shape[0], dtype=bool)
    for j, z in targets.items():
        keep &= digits[:, j] == z
    digits = digits[keep]
    weights = np.ones(digits.shape[0])
    for j in range(i):
        if j in targets:
            continue
        idx = encode_digits(digits[:, :j], cards[:j])
        weights *= tree.params[j][tree.staging[j][idx], digits[:, j]]
    idx_i = encode_digits(digits, cards[:i])
    vecs = tree.params[i][tree.staging[i][idx_i]]
    return weights @ vecs


def degrees_of_freedom(tree: StagedTree) -> int:
    """Free simplex parameters: sum over depths of stages * (card - 1)."""
    return sum(tree.n_stages(i) * (tree.variables[i].card - 1) for i in range(tree.p))


def log_likelihood(tree: StagedTree, data: Dataset) -> float:
    """Log-likelihood of the data; decomposes as a sum over depths.

    An observed cell with probability zero yields -inf rather than raising.
    """
    _require_params(tree)
    total = 0.0
    for i in range(tree.p):
        pooled = pooled_stage_counts(tree, data, i).astype(np.float64)
        theta = tree.params[i]
        observed = pooled > 0
        if np.any(observed & (theta == 0.0)):
            return -math.inf
        safe = np.where(observed, theta, 1.0)
        total += float(np.sum(pooled * np.log(safe)))
    return total


def bic(tree: StagedTree, data: Dataset) -> float:
    """-2 log-likelihood + df log N; lower is better."""
    ll = log_likelihood(tree, data)
    return -2.0 * ll + degrees_of_freedom(tree) * math.log(data.n)


def sample(tree: StagedTree, n: int, seed) -> Dataset:
    """Forward-sample n rows in tree order; deterministic given the seed."""
    _require_params(tree)
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    cards = tree.cards
    rows = np.zeros((n, tree.p), dtype=np.int64)
    ctx_idx = np.zeros(n, dtype=np.int64)
    for i in range(tree.p):
        vecs = tree.params[i][tree.staging[i][ctx_idx]]
        cum = np.cumsum(vecs, axis=1)
        u = rng.random(n)
        level = np.minimum((cum <= u[:, None]).sum(axis=1), cards[i] - 1)
        rows[:, i] = level
        ctx_idx = ctx_idx * cards[i] + level
    return Dataset(tree.variables, rows)

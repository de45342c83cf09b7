"""Random staged trees, uniform random DAGs, and column shuffling.

Staged trees are drawn with a fixed number of stages per stratum: the
stage assignment is uniform over surjective maps (rejection sampled) and
stage vectors are i.i.d. flat Dirichlet.  DAG sampling is exactly uniform
over all labeled DAGs up to p = 6, by enumeration for small p and by a
sink-count-weighted sequential construction otherwise; beyond that a
documented non-uniform fallback kicks in.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import Dag, Dataset, StagedTree, uniform_variables

__all__ = [
    "GenConfig",
    "random_staged_tree",
    "random_dag_uniform",
    "enumerate_dags",
    "count_dags",
    "shuffle_variables",
]

PARAM_FLOOR = 1e-12
EXACT_UNIFORM_LIMIT = 6
ENUMERATION_LIMIT = 4


@dataclass(frozen=True)
class GenConfig:
    """Shape of a randomly generated staged tree."""

    p: int
    levels: int
    stages_per_var: int
    seed: object = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        if self.stages_per_var < 1:
            raise ValueError("stages_per_var must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "levels": self.levels,
            "stages_per_var": self.stages_per_var,
            "seed": repr(self.seed),
            "staging_distribution": "uniform over surjective maps",
            "parameter_distribution": "Dirichlet(1,...,1) per stage",
        }


def _surjective_labels(n_ctx: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if m == n_ctx:
        return np.arange(n_ctx, dtype=np.int64)
    if m == 1:
        return np.zeros(n_ctx, dtype=np.int64)
    while True:
        labels = rng.integers(m, size=n_ctx)
        if np.unique(labels).size == m:
            return labels.astype(np.int64)


def random_staged_tree(cfg: GenConfig) -> StagedTree:
    """Random parameterised staged tree with min(k, contexts) stages per
    stratum; deterministic given cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    variables = uniform_variables(cfg.p, cfg.levels)
    staging = []
    params = []
    n_ctx = 1
    for i in range(cfg.p):
        m = min(cfg.stages_per_var, n_ctx)
        staging.append(_surjective_labels(n_ctx, m, rng))
        vecs = rng.dirichlet(np.ones(cfg.levels), size=m)
        vecs = np.clip(vecs, PARAM_FLOOR, None)
        vecs /= vecs.sum(axis=1, keepdims=True)
        params.append(vecs)
        n_ctx *= cfg.levels
    return StagedTree(
        variables, tuple(range(cfg.p)), tuple(staging), tuple(params), interior=True
    )


# ---------------------------------------------------------------------------
# Uniform random DAGs
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def enumerate_dags(p: int) -> tuple[frozenset, ...]:
    """Edge sets of all labeled DAGs on p vertices (p <= 4)."""
    if p > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration supports p <= {ENUMERATION_LIMIT}")
    slots = [(a, b) for a in range(p) for b in range(p) if a != b]
    out = []
    for bits in range(1 << len(slots)):
        edges = frozenset(slots[q] for q in range(len(slots)) if bits >> q & 1)
        try:
            Dag(p, edges)
        except ValueError:
            continue
        out.append(edges)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _dags_by_sink_count(n: int) -> tuple[int, ...]:
    """table[s] = number of labeled DAGs on n vertices with exactly s sinks.

    Removing the s out-degree-0 vertices leaves a DAG on n-s vertices with
    some t sinks; each of those t must point into the removed set (2^s - 1
    choices) and the remaining n-s-t vertices connect freely (2^s each).
    """
    if n == 0:
        return (1,)
    table = [0] * (n + 1)
    for s in range(1, n + 1):
        rest = _dags_by_sink_count(n - s)
        total = 0
        for t in range(len(rest)):
            if n - s > 0 and t == 0:
                continue
            total += (2**s - 1) ** t * 2 ** (s * (n - s - t)) * rest[t]
        table[s] = math.comb(n, s) * total
    return tuple(table)


def count_dags(p: int) -> int:
    """Number of labeled DAGs on p vertices."""
    return sum(_dags_by_sink_count(p))


def _weighted_pick(weights: list[int], rng: np.random.Generator) -> int:
    total = sum(weights)
    r = int(rng.integers(total))
    acc = 0
    for idx, w in enumerate(weights):
        acc += w
        if r < acc:
            return idx
    raise AssertionError("unreachable")


def _sample_uniform_dag_edges(
    vertices: list[int], rng: np.random.Generator
) -> set[tuple[int, int]]:
    """Uniform DAG on the given labels."""
    table = _dags_by_sink_count(len(vertices))
    s = 1 + _weighted_pick(list(table[1:]), rng)
    edges, _ = _sample_dag_with_sinks(vertices, s, rng)
    return edges


def _sample_dag_with_sinks(
    vertices: list[int], s: int, rng: np.random.Generator
) -> tuple[set[tuple[int, int]], list[int]]:
    """Uniform DAG on `vertices` conditioned on exactly s sinks; returns
    (edges, the sink vertices)."""
    n = len(vertices)
    sink_idx = sorted(int(q) for q in rng.choice(n, size=s, replace=False))
    sinks = [vertices[q] for q in sink_idx]
    rest = [v for v in vertices if v not in sinks]
    if not rest:
        return set(), sinks
    rest_table = _dags_by_sink_count(len(rest))
    weights = [0] * len(rest_table)
    for t in range(1, len(rest_table)):
        weights[t] = (2**s - 1) ** t * 2 ** (s * (len(rest) - t)) * rest_table[t]
    t = _weighted_pick(weights, rng)
    edges, rest_sinks = _sample_dag_with_sinks(rest, t, rng)
    rest_sinks = set(rest_sinks)
    for v in rest:
        if v in rest_sinks:
            bits = int(rng.integers(1, 2**s))
        else:
            bits = int(rng.integers(0, 2**s))
        for q in range(s):
            if bits >> q & 1:
                edges.add((v, sinks[q]))
    return edges, sinks


def random_dag_uniform(p: int, seed=0) -> Dag:
    """Uniform draw over all labeled DAGs for p <= 6; beyond that, edges are
    dropped into a random order with probability 1/2 (non-uniform, warned)."""
    rng = np.random.default_rng(seed)
    if p <= ENUMERATION_LIMIT:
        all_dags = enumerate_dags(p)
        return Dag(p, all_dags[int(rng.integers(len(all_dags)))])
    if p <= EXACT_UNIFORM_LIMIT:
        return Dag(p, frozenset(_sample_uniform_dag_edges(list(range(p)), rng)))
    warnings.warn(
        f"p={p} exceeds the exact-uniform limit {EXACT_UNIFORM_LIMIT}; "
        "falling back to Erdos-Renyi over a random order (not uniform)",
        stacklevel=2,
    )
    order = rng.permutation(p)
    edges = set()
    for qa in range(p):
        for qb in range(qa + 1, p):
            if rng.random() < 0.5:
                edges.add((int(order[qa]), int(order[qb])))
    return Dag(p, frozenset(edges))


def shuffle_variables(data: Dataset, seed=0) -> tuple[Dataset, tuple[int, ...]]:
    """Randomly permute columns; perm[q] is the original position of the
    column now at q, so mapping a learned order through perm recovers
    positions in the original data."""
    rng = np.random.default_rng(seed)
    perm = tuple(int(v) for v in rng.permutation(data.p))
    rows = data.rows[:, perm]
    variables = tuple(data.variables[c] for c in perm)
    return Dataset(variables, rows), perm

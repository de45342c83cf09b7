"""Bridges between DAG models and staged trees.

A DAG over categorical variables embeds as a staged tree along any of its
topological orders: contexts at each depth share a stage exactly when they
agree on the parent coordinates.  In the other direction a staged tree
collapses to its minimal DAG: an edge is kept only where some pair of
contexts differing in that single coordinate changes stage.  A list of
DAGs reduces to a consensus PDAG.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import (
    Dag,
    Pdag,
    StagedTree,
    VariableMeta,
    encode_digits,
    enumerate_digits,
)

__all__ = ["dag_to_staged_tree", "staged_tree_to_minimal_dag", "consensus_pdag"]


def dag_to_staged_tree(
    g: Dag,
    order: Sequence[int],
    levels: int | Sequence[int] = 2,
    names: Sequence[str] | None = None,
) -> StagedTree:
    """Embed a DAG as the staged tree of its parental stagings.

    `order` must be topological for g.  At depth i, the contexts are grouped
    by their restriction to the parents of the i-th variable, so the stratum
    has one stage per parent configuration.  Parameters are not attached.
    """
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(g.p)):
        raise ValueError("order must be a permutation of the DAG's vertices")
    if not g.is_topological(order):
        raise ValueError(f"order {order} is not topological for the DAG")
    if isinstance(levels, int):
        cards = [levels] * g.p
    else:
        cards = [int(c) for c in levels]
    if names is None:
        variables = tuple(
            VariableMeta(f"X{v + 1}", tuple(str(x) for x in range(cards[v])))
            for v in order
        )
    else:
        variables = tuple(
            VariableMeta(names[v], tuple(str(x) for x in range(cards[v]))) for v in order
        )
    tree_cards = [cards[v] for v in order]
    pos = {v: i for i, v in enumerate(order)}
    staging = []
    for i in range(g.p):
        digits = enumerate_digits(tree_cards[:i])
        pa_positions = sorted(pos[u] for u in g.parents(order[i]))
        codes = encode_digits(digits[:, pa_positions], [tree_cards[q] for q in pa_positions])
        _, labels = np.unique(codes, return_inverse=True)
        staging.append(labels.astype(np.int64))
    return StagedTree(variables, order, tuple(staging))


def staged_tree_to_minimal_dag(t: StagedTree) -> Dag:
    """Smallest DAG whose symmetric independences the staging supports.

    Keeps the edge from the j-th to the i-th variable of the tree order
    exactly when two depth-i contexts differing only in coordinate j fall
    in different stages.
    """
    edges = set()
    for i in range(1, t.p):
        grid = t.staging[i].reshape(t.cards[:i])
        for j in range(i):
            first = np.take(grid, [0], axis=j)
            if not np.array_equal(np.broadcast_to(first, grid.shape), grid):
                edges.add((t.order[j], t.order[i]))
    return Dag(t.p, frozenset(edges))


def consensus_pdag(dags: Sequence[Dag]) -> Pdag:
    """Consensus of several DAGs over the same vertices.

    A pair adjacent in every input keeps its arrow when all inputs agree on
    the direction and becomes undirected otherwise; pairs missing from any
    input are dropped.
    """
    if not dags:
        raise ValueError("need at least one DAG")
    p = dags[0].p
    if any(d.p != p for d in dags):
        raise ValueError("DAGs must share the vertex count")
    directed = set()
    undirected = set()
    for a in range(p):
        for b in range(a + 1, p):
            arrows = set()
            for d in dags:
                if (a, b) in d.edges:
                    arrows.add((a, b))
                elif (b, a) in d.edges:
                    arrows.add((b, a))
                else:
                    arrows = None
                    break
            if not arrows:
                continue
            if len(arrows) == 1:
                directed.add(next(iter(arrows)))
            else:
                undirected.add((a, b))
    return Pdag(p, frozenset(directed), frozenset(undirected))

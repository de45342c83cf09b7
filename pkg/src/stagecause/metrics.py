"""Model discrepancy metrics.

* cid: context-specific interventional discrepancy between two staged
  trees.  For every variable it counts the proportion of full-prefix
  intervention contexts whose interventional distribution the second tree
  infers wrongly, judging purely from the two stagings.
* cid_oracle: randomized numeric re-derivation of the same wrong sets from
  explicit joint tables; kept independent of the combinatorial path so the
  two can cross-check each other.
* sid: structural intervention distance between DAGs via parent-set
  adjustment validity.
* kendall: inversion distance between two variable orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Dag, StagedTree, encode_digits, enumerate_digits

__all__ = [
    "CidReport",
    "cid",
    "cid_oracle",
    "sid",
    "kendall",
    "cid_vs_sid_experiment",
]


@dataclass(frozen=True)
class CidVariable:
    """Per-variable breakdown: wrong contexts and index bookkeeping."""

    name: str
    wrong: tuple[tuple[int, ...], ...]
    n_contexts: int
    value: float
    preceding_shared: tuple[int, ...]
    following_shared: tuple[int, ...]


@dataclass(frozen=True)
class CidReport:
    per_variable: tuple[CidVariable, ...]
    total: float

    def wrong_contexts(self, i: int) -> set[tuple[int, ...]]:
        return set(self.per_variable[i].wrong)

    def values(self) -> tuple[float, ...]:
        return tuple(v.value for v in self.per_variable)

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "per_variable": [
                {
                    "name": v.name,
                    "value": v.value,
                    "n_contexts": v.n_contexts,
                    "wrong_contexts": [list(c) for c in sorted(v.wrong)],
                }
                for v in self.per_variable
            ],
        }


def _position_map(t: StagedTree, s: StagedTree) -> list[int]:
    """pos[j] = position in s of the variable at position j of t."""
    s_pos = s.name_positions()
    if set(s_pos) != {v.name for v in t.variables}:
        raise ValueError("trees are over different variable sets")
    pos = []
    for j, v in enumerate(t.variables):
        sj = s_pos[v.name]
        if s.variables[sj].levels != v.levels:
            raise ValueError(f"variable {v.name!r} has different levels in the two trees")
        pos.append(sj)
    return pos


def _shared_index_sets(pos: list[int], i: int) -> tuple[list[int], list[int]]:
    """Split the variables placed before position pos[i] in S into those
    preceding (I) and following (J) position i in T."""
    before = [j for j in range(len(pos)) if pos[j] < pos[i] and j != i]
    return [j for j in before if j < i], [j for j in before if j > i]


def cid(t: StagedTree, s: StagedTree) -> CidReport:
    """Context-specific interventional discrepancy of s with respect to t.

    Works on stagings only; parameters are not required.  For each variable
    and each stage of s at that variable's stratum, the stage's footprint on
    t's contexts (agreement on the shared preceding variables) must sit
    inside a single stage of t, otherwise every context in the footprint is
    wrongly inferred.  The per-variable value is the proportion of wrong
    contexts; the total is the sum over variables.
    """
    pos = _position_map(t, s)
    cards = t.cards
    out = []
    total = 0.0
    for i in range(t.p):
        k = pos[i]
        ii, jj = _shared_index_sets(pos, i)
        n_ctx = t.n_contexts(i)
        digits_t = enumerate_digits(cards[:i])
        cards_i = [cards[j] for j in ii]
        icode_t = encode_digits(digits_t[:, ii], cards_i)
        s_prefix_cards = tuple(s.variables[q].card for q in range(k))
        digits_s = enumerate_digits(s_prefix_cards)
        s_cols = [pos[j] for j in ii]
        icode_s = encode_digits(digits_s[:, s_cols], cards_i)
        s_labels = s.staging[k]
        t_labels = t.staging[i]
        wrong = np.zeros(n_ctx, dtype=bool)
        for a in range(int(s_labels.max()) + 1):
            proj = np.unique(icode_s[s_labels == a])
            footprint = np.isin(icode_t, proj)
            if np.unique(t_labels[footprint]).size > 1:
                wrong |= footprint
        value = float(wrong.sum()) / n_ctx
        total += value
        out.append(
            CidVariable(
                name=t.variables[i].name,
                wrong=tuple(tuple(int(x) for x in row) for row in digits_t[wrong]),
                n_contexts=n_ctx,
                value=value,
                preceding_shared=tuple(ii),
                following_shared=tuple(jj),
            )
        )
    return CidReport(tuple(out), total)


def cid_oracle(
    t: StagedTree,
    s: StagedTree,
    draws: int = 200,
    seed=0,
    tol: float = 1e-7,
) -> CidReport:
    """Numeric witness search for the wrong sets of `cid`.

    Draws random parameterisations of t (flat Dirichlet per stage), builds
    the joint table, and for every context compares the full-prefix
    conditional against the conditional given the event that the shared
    preceding variables fall in the matching stage footprint of s.  A
    context is wrong if any draw differs beyond `tol`.  Only feasible for
    small trees (the joint table is materialised).
    """
    pos = _position_map(t, s)
    rng = np.random.default_rng(seed)
    cards = t.cards
    p = t.p
    cells = enumerate_digits(cards)
    n_cells = cells.shape[0]

    theta = []
    for i in range(p):
        m = t.n_stages(i)
        theta.append(rng.dirichlet(np.ones(cards[i]), size=(draws, m)))
    joint = np.ones((draws, n_cells))
    for i in range(p):
        idx = encode_digits(cells[:, :i], cards[:i])
        joint *= theta[i][:, t.staging[i][idx], cells[:, i]]

    out = []
    total = 0.0
    for i in range(p):
        k = pos[i]
        ii, jj = _shared_index_sets(pos, i)
        n_ctx = t.n_contexts(i)
        digits_t = enumerate_digits(cards[:i])
        cards_i = [cards[j] for j in ii]
        icode_t = encode_digits(digits_t[:, ii], cards_i)
        icode_cells = encode_digits(cells[:, ii], cards_i)
        s_prefix_cards = tuple(s.variables[q].card for q in range(k))
        digits_s = enumerate_digits(s_prefix_cards)
        s_cols = [pos[j] for j in ii]
        icode_s = encode_digits(digits_s[:, s_cols], cards_i)
        s_labels = s.staging[k]

        ctx_idx = encode_digits(digits_t, cards[:i])
        lhs = theta[i][:, t.staging[i][ctx_idx], :]  # (draws, n_ctx, card_i)
        onehot = np.eye(cards[i])[cells[:, i]]  # (n_cells, card_i)
        wrong = np.zeros(n_ctx, dtype=bool)
        for a in range(int(s_labels.max()) + 1):
            proj = np.unique(icode_s[s_labels == a])
            if proj.size == 0:
                continue
            cell_mask = np.isin(icode_cells, proj)
            num = joint[:, cell_mask] @ onehot[cell_mask]  # (draws, card_i)
            rhs = num / num.sum(axis=1, keepdims=True)
            members = np.isin(icode_t, proj)
            diff = np.abs(lhs[:, members, :] - rhs[:, None, :]).max(axis=(0, 2))
            wrong[members] |= diff > tol
        value = float(wrong.sum()) / n_ctx
        total += value
        out.append(
            CidVariable(
                name=t.variables[i].name,
                wrong=tuple(tuple(int(x) for x in row) for row in digits_t[wrong]),
                n_contexts=n_ctx,
                value=value,
                preceding_shared=tuple(ii),
                following_shared=tuple(jj),
            )
        )
    return CidReport(tuple(out), total)


# ---------------------------------------------------------------------------
# Structural intervention distance
# ---------------------------------------------------------------------------


def _simple_paths(g: Dag, i: int, j: int):
    """All simple undirected paths from i to j as vertex tuples."""
    nbrs = [set() for _ in range(g.p)]
    for a, b in g.edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    stack = [(i, (i,))]
    while stack:
        v, path = stack.pop()
        for w in sorted(nbrs[v]):
            if w in path:
                continue
            if w == j:
                yield path + (w,)
            else:
                stack.append((w, path + (w,)))


def _path_is_causal(g: Dag, path: tuple[int, ...]) -> bool:
    return all((path[q], path[q + 1]) in g.edges for q in range(len(path) - 1))


def _path_blocked(g: Dag, path: tuple[int, ...], z: frozenset[int]) -> bool:
    anc_z: set[int] = set()
    for v in z:
        anc_z |= g.ancestors(v, include_self=True)
    for q in range(1, len(path) - 1):
        prev, v, nxt = path[q - 1], path[q], path[q + 1]
        collider = (prev, v) in g.edges and (nxt, v) in g.edges
        if collider:
            if v not in anc_z:
                return True
        elif v in z:
            return True
    return False


def _valid_adjustment(g: Dag, i: int, j: int, z: frozenset[int]) -> bool:
    """Parent-set adjustment validity for the effect of i on j in g.

    Covers the adjustment criterion for singleton interventions: the set
    must avoid descendants of nodes on causal i-to-j paths and block every
    non-causal path.  Conditioning on the target itself collapses the
    estimate to the observational marginal, which is right exactly when the
    true effect is null.
    """
    causal_nodes = (g.descendants(i) & g.ancestors(j, include_self=True)) - {i}
    has_effect = bool(causal_nodes)
    if j in z:
        return not has_effect
    forbidden: set[int] = set()
    for w in causal_nodes:
        forbidden |= g.descendants(w, include_self=True)
    if z & forbidden:
        return False
    for path in _simple_paths(g, i, j):
        if _path_is_causal(g, path):
            continue
        if not _path_blocked(g, path, z):
            return False
    return True


def sid(g: Dag, h: Dag) -> int:
    """Structural intervention distance: ordered pairs (i, j) whose
    interventional distribution is wrongly estimated when adjusting for
    i's parents in h while g is the truth."""
    if g.p != h.p:
        raise ValueError("DAGs must share the vertex count")
    wrong = 0
    for i in range(g.p):
        z = h.parents(i)
        for j in range(g.p):
            if i != j and not _valid_adjustment(g, i, j, z):
                wrong += 1
    return wrong


def kendall(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of discordant pairs between two permutations."""
    a = tuple(int(x) for x in a)
    b = tuple(int(x) for x in b)
    if len(a) != len(b):
        raise ValueError("orders have different lengths")
    n = len(a)
    if sorted(a) != list(range(n)) or sorted(b) != list(range(n)):
        raise ValueError("orders must both be permutations of 0..p-1")
    pos_b = [0] * n
    for idx, v in enumerate(b):
        pos_b[v] = idx
    seq = [pos_b[v] for v in a]
    return sum(
        1 for q in range(n) for r in range(q + 1, n) if seq[q] > seq[r]
    )


def cid_vs_sid_experiment(
    pairs: int, p: int = 5, seed=0, levels: int = 2
) -> tuple[list[tuple[int, int, float]], dict]:
    """Sample uniform DAG pairs, embed them as staged trees, report both
    metrics per pair plus Pearson and Spearman correlations."""
    from scipy import stats

    from .convert import dag_to_staged_tree
    from .randgen import random_dag_uniform

    rows = []
    for pid in range(pairs):
        g = random_dag_uniform(p, np.random.SeedSequence(entropy=seed, spawn_key=(pid, 0)))
        h = random_dag_uniform(p, np.random.SeedSequence(entropy=seed, spawn_key=(pid, 1)))
        t = dag_to_staged_tree(g, g.topological_order(), levels)
        s = dag_to_staged_tree(h, h.topological_order(), levels)
        rows.append((pid, sid(g, h), cid(t, s).total))
    sids = np.array([r[1] for r in rows], dtype=float)
    cids = np.array([r[2] for r in rows], dtype=float)
    summary: dict = {"pairs": pairs, "p": p, "levels": levels, "seed": seed}
    if pairs >= 2 and sids.std() > 0 and cids.std() > 0:
        summary["pearson"] = float(stats.pearsonr(sids, cids)[0])
        summary["spearman"] = float(stats.spearmanr(sids, cids)[0])
    else:
        summary["pearson"] = math.nan
        summary["spearman"] = math.nan
    return rows, summary

"""Core data types: staged event trees, categorical datasets, DAGs and PDAGs.

A staged tree over an ordered sequence of categorical variables partitions,
at every depth, the set of contexts (assignments to the preceding variables)
into stages; contexts in one stage share the transition distribution of the
next variable.  Vertices of the underlying event tree are never materialised:
a vertex at depth d is identified with its context prefix, and each stratum's
staging is a flat integer array over contexts in lexicographic order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "VariableMeta",
    "StagedTree",
    "Dataset",
    "Dag",
    "Pdag",
    "ValidationReport",
    "CsvFormatError",
    "validate_tree",
    "contexts",
    "stage_of",
    "enumerate_digits",
    "encode_digits",
    "context_weights",
]

SIMPLEX_TOL = 1e-9


class CsvFormatError(ValueError):
    """Malformed dataset CSV; message carries line diagnostics."""


# ---------------------------------------------------------------------------
# Mixed-radix context indexing
# ---------------------------------------------------------------------------
#
# A context of depth d is a tuple of level indices for the first d variables
# of the tree order.  Contexts are enumerated lexicographically and encoded
# as mixed-radix integers with the FIRST variable as the most significant
# digit, so staging lookup is a single array access.


def context_weights(cards: Sequence[int]) -> np.ndarray:
    """Place values of each digit: weights[j] = prod(cards[j+1:])."""
    w = np.ones(len(cards), dtype=np.int64)
    for j in range(len(cards) - 2, -1, -1):
        w[j] = w[j + 1] * cards[j + 1]
    return w


def encode_digits(digits: np.ndarray, cards: Sequence[int]) -> np.ndarray:
    """Encode rows of level indices into lexicographic context indices."""
    digits = np.asarray(digits, dtype=np.int64)
    if digits.ndim == 1:
        digits = digits[None, :]
    if digits.shape[1] == 0:
        return np.zeros(digits.shape[0], dtype=np.int64)
    return digits @ context_weights(cards)


def enumerate_digits(cards: Sequence[int]) -> np.ndarray:
    """All contexts of the given radices, lexicographic, one row each."""
    if len(cards) == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices(tuple(cards))
    return grids.reshape(len(cards), -1).T.astype(np.int64)


def permuted_context_indices(cards: Sequence[int], ranks: Sequence[int]) -> np.ndarray:
    """Context index map between two digit orderings of the same variables.

    For every context enumerated lexicographically with radices `cards`,
    gives the index of the same assignment when digit j is moved to position
    ranks[j].  Used to translate between a tree-order stratum and the
    canonical (sorted predecessor) table of a dataset.
    """
    d = len(cards)
    digits = enumerate_digits(cards)
    tgt = np.empty_like(digits)
    tgt_cards = np.empty(d, dtype=np.int64)
    for j, r in enumerate(ranks):
        tgt[:, r] = digits[:, j]
        tgt_cards[r] = cards[j]
    return encode_digits(tgt, tgt_cards)


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Variables and staged trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VariableMeta:
    """A named categorical variable with an ordered set of level labels."""

    name: str
    levels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(str(l) for l in self.levels))
        if len(self.levels) < 2:
            raise ValueError(f"variable {self.name!r} needs at least 2 levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"variable {self.name!r} has duplicate level labels")

    @property
    def card(self) -> int:
        return len(self.levels)


def binary_variables(p: int, prefix: str = "X") -> tuple[VariableMeta, ...]:
    return uniform_variables(p, 2, prefix)


def uniform_variables(p: int, card: int, prefix: str = "X") -> tuple[VariableMeta, ...]:
    """p variables named X1..Xp, each with levels "0".."card-1"."""
    lv = tuple(str(x) for x in range(card))
    return tuple(VariableMeta(f"{prefix}{i + 1}", lv) for i in range(p))


@dataclass(frozen=True)
class StagedTree:
    """A stratified staged event tree, optionally parameterised.

    variables : the tree's variables, in tree order.
    order     : permutation mapping tree position -> canonical variable id
                (identity for standalone trees; dataset column ids for
                learned trees).
    staging   : one int array per depth i, length prod(cards[:i]), giving
                the stage id of every depth-i context in lexicographic
                order.  Stage ids are dense 0..m-1 within each stratum.
    params    : optional; per depth, an (m_i, card_i) array of stage
                transition distributions.
    interior  : declares all parameters strictly inside (0, 1).
    """

    variables: tuple[VariableMeta, ...]
    order: tuple[int, ...]
    staging: tuple[np.ndarray, ...]
    params: tuple[np.ndarray, ...] | None = None
    interior: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))
        object.__setattr__(
            self, "staging", tuple(_frozen_array(s, np.int64) for s in self.staging)
        )
        if self.params is not None:
            object.__setattr__(
                self, "params", tuple(_frozen_array(t, np.float64) for t in self.params)
            )
        p = len(self.variables)
        if sorted(self.order) != list(range(p)):
            raise ValueError("order must be a permutation of 0..p-1")
        if len(self.staging) != p:
            raise ValueError(f"need one staging array per depth, got {len(self.staging)}")
        if self.params is not None and len(self.params) != p:
            raise ValueError("need one parameter block per depth")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")

    @property
    def p(self) -> int:
        return len(self.variables)

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(v.card for v in self.variables)

    def n_contexts(self, depth: int) -> int:
        return int(np.prod([1] + list(self.cards[:depth]), dtype=np.int64))

    def n_stages(self, depth: int) -> int:
        return int(self.staging[depth].max()) + 1

    def context_index(self, context: Sequence[int]) -> int:
        depth = len(context)
        if depth >= self.p + 1:
            raise ValueError("context longer than variable count")
        cards = self.cards[:depth]
        for x, c in zip(context, cards):
            if not 0 <= x < c:
                raise ValueError(f"level index {x} out of range for card {c}")
        return int(encode_digits(np.asarray(context, dtype=np.int64), cards)[0])

    def with_params(self, params: Sequence[np.ndarray], interior: bool = False) -> "StagedTree":
        return StagedTree(self.variables, self.order, self.staging, tuple(params), interior)

    def name_positions(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    # -- JSON model schema ---------------------------------------------------
    #
    # {"order": [names], "levels": {name: [labels]},
    #  "staging": [[stage ids per stratum, lexicographic context order]],
    #  "params": [{stage id: [probabilities]}] or null}

    def to_json_dict(self, meta: dict | None = None) -> dict:
        doc: dict = {
            "order": [v.name for v in self.variables],
            "levels": {v.name: list(v.levels) for v in self.variables},
            "staging": [s.tolist() for s in self.staging],
            "params": None,
        }
        if self.params is not None:
            doc["params"] = [
                {str(s): row.tolist() for s, row in enumerate(block)}
                for block in self.params
            ]
        if self.interior:
            doc["interior"] = True
        if meta:
            doc["meta"] = meta
        return doc

    @staticmethod
    def from_json_dict(doc: dict, order_ids: Sequence[int] | None = None) -> "StagedTree":
        names = list(doc["order"])
        variables = tuple(VariableMeta(n, tuple(doc["levels"][n])) for n in names)
        staging = tuple(np.asarray(s, dtype=np.int64) for s in doc["staging"])
        params = None
        if doc.get("params") is not None:
            params = tuple(
                np.asarray([blk[str(s)] for s in range(len(blk))], dtype=np.float64)
                for blk in doc["params"]
            )
        order = tuple(order_ids) if order_ids is not None else tuple(range(len(names)))
        return StagedTree(variables, order, staging, params, bool(doc.get("interior", False)))

    def save(self, path: str | Path, meta: dict | None = None) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(meta), indent=2) + "\n", "utf-8")

    @staticmethod
    def load(path: str | Path) -> "StagedTree":
        return StagedTree.from_json_dict(json.loads(Path(path).read_text("utf-8")))


def saturated_staging(cards: Sequence[int]) -> tuple[np.ndarray, ...]:
    """Every context its own stage."""
    out = []
    n = 1
    for c in cards:
        out.append(np.arange(n, dtype=np.int64))
        n *= c
    return tuple(out)


def independent_staging(cards: Sequence[int]) -> tuple[np.ndarray, ...]:
    """One stage per stratum: the fully independent model."""
    out = []
    n = 1
    for c in cards:
        out.append(np.zeros(n, dtype=np.int64))
        n *= c
    return tuple(out)


# ---------------------------------------------------------------------------
# Tree operations
# ---------------------------------------------------------------------------


def contexts(tree: StagedTree, depth: int) -> list[tuple[int, ...]]:
    """All contexts of the given depth, lexicographic by level index."""
    if not 0 <= depth <= tree.p:
        raise ValueError(f"depth {depth} out of range [0, {tree.p}]")
    return [tuple(int(x) for x in row) for row in enumerate_digits(tree.cards[:depth])]


def stage_of(tree: StagedTree, context: Sequence[int]) -> int:
    """Stage id of a context; raises for unknown contexts."""
    depth = len(context)
    if depth > tree.p - 1:
        raise ValueError("context depth exceeds p-1")
    idx = tree.context_index(context)
    return int(tree.staging[depth][idx])


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_tree(tree: StagedTree) -> ValidationReport:
    """Check structural invariants; returns a report, never raises.

    Flags staging coverage gaps, non-dense stage ids, and (when parameters
    are present) vectors off the probability simplex or, for trees declared
    interior, entries not strictly inside (0, 1).
    """
    rep = ValidationReport()
    for i in range(tree.p):
        n_ctx = tree.n_contexts(i)
        labels = tree.staging[i]
        where = f"depth {i + 1} ({tree.variables[i].name})"
        if labels.shape != (n_ctx,):
            rep.violations.append(
                f"{where}: staging not total, {labels.size} entries for {n_ctx} contexts"
            )
            continue
        if labels.size and labels.min() < 0:
            rep.violations.append(f"{where}: negative stage id")
            continue
        m = int(labels.max()) + 1 if labels.size else 0
        used = np.unique(labels)
        if used.size != m:
            rep.violations.append(f"{where}: stage ids not dense, {used.size} of {m} used")
        if tree.params is not None:
            block = tree.params[i]
            card = tree.variables[i].card
            if block.shape != (m, card):
                rep.violations.append(
                    f"{where}: params shape {block.shape}, expected ({m}, {card})"
                )
                continue
            sums = block.sum(axis=1)
            for s in np.nonzero(np.abs(sums - 1.0) > SIMPLEX_TOL)[0]:
                rep.violations.append(
                    f"{where}: stage {s} simplex sum != 1 (got {sums[s]!r})"
                )
            if np.any(block < 0.0) or np.any(block > 1.0):
                rep.violations.append(f"{where}: probability outside [0, 1]")
            elif tree.interior and (np.any(block <= 0.0) or np.any(block >= 1.0)):
                rep.violations.append(f"{where}: interior tree has boundary probability")
    return rep


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Complete categorical observations, one level index per cell.

    Contingency tables for (variable, predecessor set) pairs are built
    lazily and cached; the cache is keyed by the unordered predecessor set,
    so lookups are independent of any variable ordering.
    """

    variables: tuple[VariableMeta, ...]
    rows: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != len(self.variables):
            raise ValueError("rows must be an (N, p) array")
        if rows.shape[0] < 1:
            raise ValueError("dataset needs at least one row")
        for j, v in enumerate(self.variables):
            col = rows[:, j]
            if col.min() < 0 or col.max() >= v.card:
                raise ValueError(f"column {v.name!r} has level index out of range")
        object.__setattr__(self, "rows", _frozen_array(rows, np.int64))
        object.__setattr__(self, "_counts_cache", {})

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return len(self.variables)

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(v.card for v in self.variables)

    def column(self, name: str) -> int:
        for j, v in enumerate(self.variables):
            if v.name == name:
                return j
        raise KeyError(name)

    def stratum_counts(self, var: int, preds: Iterable[int]) -> np.ndarray:
        """(contexts, levels) count table for `var` given the predecessor set.

        Contexts run over the predecessors sorted by column id (canonical
        order), lexicographically.  The result is cached and read-only.
        """
        key = (int(var), tuple(sorted(int(c) for c in preds)))
        if key[0] in key[1]:
            raise ValueError("variable cannot be its own predecessor")
        cache = self._counts_cache
        if key in cache:
            return cache[key]
        var, preds = key
        cards = [self.variables[c].card for c in preds]
        n_ctx = int(np.prod([1] + cards, dtype=np.int64))
        card_v = self.variables[var].card
        codes = np.zeros(self.n, dtype=np.int64)
        for c in preds:
            codes = codes * self.variables[c].card + self.rows[:, c]
        cells = codes * card_v + self.rows[:, var]
        counts = np.bincount(cells, minlength=n_ctx * card_v).reshape(n_ctx, card_v)
        counts = _frozen_array(counts, np.int64)
        cache[key] = counts
        return counts

    # -- CSV: header of variable names, one row per observation, level labels

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([v.name for v in self.variables])
            for row in self.rows:
                w.writerow([self.variables[j].levels[x] for j, x in enumerate(row)])

    @staticmethod
    def from_csv(path: str | Path, variables: Sequence[VariableMeta] | None = None) -> "Dataset":
        """Read a dataset; levels are inferred (sorted labels) unless given."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CsvFormatError("empty file: no header row") from None
            raw = []
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise CsvFormatError(
                        f"line {lineno}: expected {len(header)} fields, got {len(rec)}"
                    )
                raw.append(rec)
        if not raw:
            raise CsvFormatError("no rows")
        if variables is None:
            cols = list(zip(*raw))
            variables = tuple(
                VariableMeta(name, tuple(sorted(set(col))))
                for name, col in zip(header, cols)
            )
        else:
            variables = tuple(variables)
            names = [v.name for v in variables]
            if names != list(header):
                raise CsvFormatError(f"header {header} does not match expected {names}")
        lookup = [{lab: i for i, lab in enumerate(v.levels)} for v in variables]
        data = np.empty((len(raw), len(variables)), dtype=np.int64)
        for r, rec in enumerate(raw):
            for j, val in enumerate(rec):
                try:
                    data[r, j] = lookup[j][val]
                except KeyError:
                    raise CsvFormatError(
                        f"line {r + 2}: unknown level {val!r} for variable "
                        f"{variables[j].name!r}"
                    ) from None
        return Dataset(variables, data)


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over vertices 0..p-1."""

    p: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(
            self, "edges", frozenset((int(a), int(b)) for a, b in self.edges)
        )
        for a, b in self.edges:
            if not (0 <= a < self.p and 0 <= b < self.p):
                raise ValueError(f"edge ({a}, {b}) out of range")
            if a == b:
                raise ValueError("self loops not allowed")
        if self.topological_order() is None:
            raise ValueError("graph has a cycle")

    def parents(self, v: int) -> frozenset[int]:
        return frozenset(a for a, b in self.edges if b == v)

    def children(self, v: int) -> frozenset[int]:
        return frozenset(b for a, b in self.edges if a == v)

    def descendants(self, v: int, include_self: bool = False) -> frozenset[int]:
        seen = set()
        stack = [v]
        while stack:
            u = stack.pop()
            for w in self.children(u):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if include_self:
            seen.add(v)
        return frozenset(seen)

    def ancestors(self, v: int, include_self: bool = False) -> frozenset[int]:
        seen = set()
        stack = [v]
        while stack:
            u = stack.pop()
            for w in self.parents(u):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if include_self:
            seen.add(v)
        return frozenset(seen)

    def topological_order(self) -> tuple[int, ...] | None:
        """Kahn's algorithm taking the smallest available vertex first; None
        if cyclic (only reachable during construction)."""
        indeg = [0] * self.p
        for _, b in self.edges:
            indeg[b] += 1
        avail = sorted(v for v in range(self.p) if indeg[v] == 0)
        out: list[int] = []
        while avail:
            v = avail.pop(0)
            out.append(v)
            for w in sorted(self.children(v)):
                indeg[w] -= 1
                if indeg[w] == 0:
                    avail.append(w)
            avail.sort()
        return tuple(out) if len(out) == self.p else None

    def is_topological(self, order: Sequence[int]) -> bool:
        pos = {v: i for i, v in enumerate(order)}
        return all(pos[a] < pos[b] for a, b in self.edges)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.p, self.p), dtype=np.int8)
        for a, b in self.edges:
            adj[a, b] = 1
        return adj

    def to_json_dict(self) -> dict:
        return {"p": self.p, "edges": sorted([a, b] for a, b in self.edges)}

    @staticmethod
    def from_json_dict(doc: dict) -> "Dag":
        return Dag(int(doc["p"]), frozenset((int(a), int(b)) for a, b in doc["edges"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", "utf-8")

    @staticmethod
    def load(path: str | Path) -> "Dag":
        return Dag.from_json_dict(json.loads(Path(path).read_text("utf-8")))


@dataclass(frozen=True)
class Pdag:
    """Partially directed graph: directed plus undirected edges.

    The two edge sets must be disjoint as unordered pairs; undirected edges
    are stored with endpoints sorted.
    """

    p: int
    directed: frozenset[tuple[int, int]]
    undirected: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(
            self, "directed", frozenset((int(a), int(b)) for a, b in self.directed)
        )
        object.__setattr__(
            self,
            "undirected",
            frozenset(tuple(sorted((int(a), int(b)))) for a, b in self.undirected),
        )
        d_pairs = {tuple(sorted(e)) for e in self.directed}
        if d_pairs & self.undirected:
            raise ValueError("directed and undirected edge sets overlap")

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "directed": sorted([a, b] for a, b in self.directed),
            "undirected": sorted([a, b] for a, b in self.undirected),
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "Pdag":
        return Pdag(
            int(doc["p"]),
            frozenset((int(a), int(b)) for a, b in doc["directed"]),
            frozenset((int(a), int(b)) for a, b in doc["undirected"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", "utf-8")

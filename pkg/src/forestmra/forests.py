"""Random rooted spanning forests: Wilson sampling and exact enumeration.

A forest is drawn with probability proportional to
q^(#roots) * prod of its edge rates.  Sampling runs loop-erased random
walks with killing rate q; enumeration iterates all acyclic parent maps
of tiny graphs and serves as the distributional oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (
    EdgeNotInGraph,
    ForestMRAError,
    GraphTooLarge,
    NonPositiveParameter,
)
from .graphs import WeightedGraph

ROOT = -1


@dataclass(frozen=True)
class SpanningForest:
    """Rooted oriented spanning forest: parent map with ROOT = -1."""

    parent: np.ndarray
    roots: frozenset
    tree_label: np.ndarray
    q: float
    steps: int = 0  # walk decisions used by the sampler (0 when enumerated)

    @property
    def n_roots(self) -> int:
        return len(self.roots)

    def key(self):
        """Hashable identity of the forest (its parent map)."""
        return tuple(self.parent.tolist())


def _labels_from_parent(parent: np.ndarray) -> np.ndarray:
    n = parent.shape[0]
    label = np.full(n, -2, dtype=np.int64)
    for v in range(n):
        chain = []
        u = v
        while label[u] == -2:
            chain.append(u)
            p = parent[u]
            if p == ROOT:
                label[u] = u
                break
            if len(chain) > n:
                raise ForestMRAError("parent map contains a cycle")
            u = p
        root = label[u]
        for c in chain:
            label[c] = root
    return label


def make_forest(parent, q: float, g: WeightedGraph | None = None,
                steps: int = 0) -> SpanningForest:
    """Validate a parent map (acyclicity, edge support) into a forest."""
    parent = np.asarray(parent, dtype=np.int64)
    label = _labels_from_parent(parent)
    roots = frozenset(int(v) for v in np.nonzero(parent == ROOT)[0])
    if not roots:
        raise ForestMRAError("a spanning forest needs at least one root")
    if g is not None:
        for x in range(g.n):
            p = parent[x]
            if p != ROOT and g.rates[x, p] <= 0:
                raise EdgeNotInGraph(f"edge ({x}, {p}) has zero rate")
    return SpanningForest(parent=parent, roots=roots, tree_label=label,
                          q=float(q), steps=steps)


class _WalkTables:
    """Per-vertex outcome tables for the killed walk at parameter q.

    Outcome j < deg(x) jumps to neighbor j, the last outcome kills the
    walk (declares a root); a single uniform draw selects via the
    cumulative probabilities.
    """

    def __init__(self, g: WeightedGraph, q: float):
        if q <= 0:
            raise NonPositiveParameter("killing parameter q must be positive")
        self.targets = []
        self.cum = []
        for x in range(g.n):
            nbrs, rates = g.neighbor_table[x]
            total = q + rates.sum()
            cum = np.cumsum(rates) / total
            self.targets.append(nbrs)
            self.cum.append(np.append(cum, 1.0))


def _wilson(n: int, tables: _WalkTables, rng) -> tuple[np.ndarray, int]:
    parent = np.full(n, -2, dtype=np.int64)
    in_forest = np.zeros(n, dtype=bool)
    nxt = np.full(n, -2, dtype=np.int64)
    steps = 0
    for start in range(n):
        if in_forest[start]:
            continue
        u = start
        while not in_forest[u]:
            steps += 1
            i = int(np.searchsorted(tables.cum[u], rng.random(), side="right"))
            if i >= len(tables.targets[u]):
                nxt[u] = ROOT
                break
            y = int(tables.targets[u][i])
            nxt[u] = y
            u = y
        # nxt holds the last exit from every visited vertex, so following
        # it from the start is the loop-erased trajectory.
        u = start
        while not in_forest[u]:
            parent[u] = nxt[u]
            in_forest[u] = True
            if nxt[u] == ROOT:
                break
            u = nxt[u]
    return parent, steps


def wilson_sample(g: WeightedGraph, q: float, seed) -> SpanningForest:
    """Draw one forest from the q-weighted forest measure.

    The walk starts at the lowest-index uncovered vertex, is killed at a
    vertex x with probability q/(q + w(x)) and otherwise jumps with
    probability w(x,y)/(q + w(x)); loop-erased paths accumulate into the
    forest.  Deterministic given (g, q, seed).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    tables = _WalkTables(g, q)
    parent, steps = _wilson(g.n, tables, rng)
    label = _labels_from_parent(parent)
    roots = frozenset(int(v) for v in np.nonzero(parent == ROOT)[0])
    return SpanningForest(parent=parent, roots=roots, tree_label=label,
                          q=float(q), steps=steps)


def sample_forests(g: WeightedGraph, q: float, n_samples: int, seed):
    """Draw ``n_samples`` independent forests, reusing the walk tables."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    tables = _WalkTables(g, q)
    out = []
    for _ in range(n_samples):
        parent, steps = _wilson(g.n, tables, rng)
        label = _labels_from_parent(parent)
        roots = frozenset(int(v) for v in np.nonzero(parent == ROOT)[0])
        out.append(SpanningForest(parent=parent, roots=roots, tree_label=label,
                                  q=float(q), steps=steps))
    return out


def forest_weight(g: WeightedGraph, forest: SpanningForest, q: float) -> float:
    """q^(#roots) times the product of the forest's edge rates."""
    if q <= 0:
        raise NonPositiveParameter("q must be positive")
    weight = q ** forest.n_roots
    for x in range(g.n):
        p = forest.parent[x]
        if p == ROOT:
            continue
        rate = g.rates[x, p]
        if rate <= 0:
            raise EdgeNotInGraph(f"edge ({x}, {p}) has zero rate")
        weight *= rate
    return float(weight)


@dataclass(frozen=True)
class ForestEnsemble:
    """All spanning oriented forests of a graph with their weights."""

    forests: tuple
    weights: np.ndarray
    partition_sum: float

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.partition_sum


def enumerate_forests(g: WeightedGraph, q: float,
                      max_n: int = 8) -> ForestEnsemble:
    """Brute-force oracle: every acyclic parent map, weighted.

    Iterates the product over vertices of (neighbors + ROOT), keeping the
    acyclic maps; feasible for n <= 8 only.
    """
    if q <= 0:
        raise NonPositiveParameter("q must be positive")
    if g.n > max_n:
        raise GraphTooLarge(f"enumeration limited to n <= {max_n}")
    choice_sets = []
    for x in range(g.n):
        nbrs, rates = g.neighbor_table[x]
        choice_sets.append([(ROOT, q)] + list(zip(nbrs.tolist(), rates.tolist())))
    forests = []
    weights = []
    parent = np.empty(g.n, dtype=np.int64)
    for combo in product(*choice_sets):
        weight = 1.0
        for x, (p, w) in enumerate(combo):
            parent[x] = p
            weight *= w
        try:
            label = _labels_from_parent(parent)
        except ForestMRAError:
            continue
        roots = frozenset(int(v) for v in np.nonzero(parent == ROOT)[0])
        forests.append(SpanningForest(parent=parent.copy(), roots=roots,
                                      tree_label=label, q=float(q)))
        weights.append(weight)
    weights = np.asarray(weights)
    return ForestEnsemble(forests=tuple(forests), weights=weights,
                          partition_sum=float(weights.sum()))


def forest_to_text(forest: SpanningForest) -> str:
    """Debug dump: one line ``vertex parent`` per vertex, -1 for ROOT."""
    return "\n".join(f"{v} {int(p)}" for v, p in enumerate(forest.parent)) + "\n"


def forest_from_text(text: str, q: float = 1.0) -> SpanningForest:
    pairs = [line.split() for line in text.strip().splitlines()]
    parent = np.full(len(pairs), ROOT, dtype=np.int64)
    for v, p in pairs:
        parent[int(v)] = int(p)
    return make_forest(parent, q)

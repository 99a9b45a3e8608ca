"""Benchmark graph generators, test signals and the validation zoo."""

from __future__ import annotations

import numpy as np

from .errors import Disconnected, RadiusDisconnected
from .graphs import WeightedGraph, build_graph, spectral_decompose


def path_graph(n: int, rate: float = 1.0) -> WeightedGraph:
    edges = []
    for i in range(n - 1):
        edges += [(i, i + 1, rate), (i + 1, i, rate)]
    return build_graph(edges, n=n)


def cycle_graph(n: int, rate: float = 1.0) -> WeightedGraph:
    edges = []
    for i in range(n):
        j = (i + 1) % n
        edges += [(i, j, rate), (j, i, rate)]
    return build_graph(edges, n=n)


def complete_graph(n: int, rate: float = 1.0) -> WeightedGraph:
    edges = [(i, j, rate) for i in range(n) for j in range(n) if i != j]
    return build_graph(edges, n=n)


def star_graph(n: int, rate: float = 1.0) -> WeightedGraph:
    edges = []
    for i in range(1, n):
        edges += [(0, i, rate), (i, 0, rate)]
    return build_graph(edges, n=n)


def grid_graph(rows: int, cols: int, rate: float = 1.0) -> WeightedGraph:
    def vid(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges += [(vid(r, c), vid(r, c + 1), rate),
                          (vid(r, c + 1), vid(r, c), rate)]
            if r + 1 < rows:
                edges += [(vid(r, c), vid(r + 1, c), rate),
                          (vid(r + 1, c), vid(r, c), rate)]
    return build_graph(edges, n=rows * cols)


def geometric_graph(n: int, radius: float | None = None, seed=0,
                    max_retries: int = 8):
    """Random geometric graph in the unit square with Gaussian-of-distance
    weights.  The radius grows by 25% on each disconnected retry."""
    rng = np.random.default_rng(seed)
    points = rng.random((n, 2))
    if radius is None:
        radius = 1.5 * np.sqrt(np.log(max(n, 2)) / (np.pi * n))
    for _ in range(max_retries):
        sigma = radius / 2.0
        edges = []
        for i in range(n):
            d2 = ((points - points[i]) ** 2).sum(axis=1)
            for j in np.nonzero((d2 <= radius**2) & (np.arange(n) > i))[0]:
                w = float(np.exp(-d2[j] / (2.0 * sigma**2)))
                edges += [(i, int(j), w), (int(j), i, w)]
        try:
            return build_graph(edges, n=n), points
        except Disconnected:
            radius *= 1.25
    raise RadiusDisconnected(
        f"geometric graph on {n} points stayed disconnected"
    )


def random_connected_graph(n: int, seed=0, extra_edge_prob: float = 0.35,
                           random_rates: bool = True) -> WeightedGraph:
    """Random spanning tree plus random extra edges, symmetric rates."""
    rng = np.random.default_rng(seed)
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = None
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_edge_prob:
                edges[(u, v)] = None
    out = []
    for (u, v) in edges:
        rate = float(rng.uniform(0.5, 2.0)) if random_rates else 1.0
        out += [(u, v, rate), (v, u, rate)]
    return build_graph(out, n=n)


def random_measure_graph(n: int, seed=0) -> WeightedGraph:
    """Random conductances with a nonuniform reversible measure."""
    rng = np.random.default_rng(seed)
    base = random_connected_graph(n, seed=rng.integers(2**32), random_rates=True)
    mu = rng.uniform(0.5, 2.0, size=n)
    mu /= mu.sum()
    edges = []
    for x, y, c in base.edges():
        if x < y:
            edges += [(x, y, c / mu[x]), (y, x, c / mu[y])]
    return build_graph(edges, mu=mu, n=n)


# ---------------------------------------------------------------------------
# Benchmark signals.
# ---------------------------------------------------------------------------

N_PIECEWISE_BREAKS = 30

_PIECEWISE_LEVELS = (
    0.6, -0.4, 0.9, 0.1, -0.8, 0.5, 1.2, -0.2, 0.3, -1.0, 0.7, -0.5, 1.0,
    0.2, -0.7, 0.8, -0.3, 0.4, -0.9, 1.1, -0.1, 0.65, -0.45, 0.95, 0.15,
    -0.85, 0.55, 1.15, -0.25, 0.35, -0.95,
)


def piecewise_signal(n: int):
    """Piecewise-regular 1-D benchmark: constant segments with jumps.

    Returns (values, breakpoint_indices); every breakpoint is a genuine
    discontinuity, so large detail coefficients should sit there.
    """
    nb = N_PIECEWISE_BREAKS
    breaks = (((np.arange(nb) + 0.7) / (nb + 0.4)) * n).astype(np.int64)
    breaks = np.unique(breaks[(breaks > 0) & (breaks < n)])
    bounds = [0] + breaks.tolist() + [n]
    f = np.empty(n)
    for (lo, hi), value in zip(zip(bounds[:-1], bounds[1:]), _PIECEWISE_LEVELS):
        f[lo:hi] = value
    return f, breaks


def first_mode_sign_signal(g: WeightedGraph) -> np.ndarray:
    """Sign of the first nontrivial eigenvector; takes exactly two values."""
    dec = spectral_decompose(g)
    e1 = dec.eigenvectors[:, 1]
    signs = np.where(e1 >= 0, 1.0, -1.0)
    return signs


# ---------------------------------------------------------------------------
# Validation zoo: small named graphs with unit and random rates.
# ---------------------------------------------------------------------------

def graph_zoo(max_n: int = 5, seed: int = 20240601):
    """Named connected graphs with n <= max_n for the validation suite."""
    zoo = [
        ("k2", complete_graph(2)),
        ("path3", path_graph(3)),
        ("path4", path_graph(4)),
        ("path5", path_graph(5)),
        ("cycle3", cycle_graph(3)),
        ("cycle4", cycle_graph(4)),
        ("cycle5", cycle_graph(5)),
        ("star4", star_graph(4)),
        ("complete4", complete_graph(4)),
        ("complete5", complete_graph(5)),
        ("random4", random_connected_graph(4, seed=seed)),
        ("random5", random_connected_graph(5, seed=seed + 1)),
        ("randmu4", random_measure_graph(4, seed=seed + 2)),
        ("randmu5", random_measure_graph(5, seed=seed + 3)),
    ]
    return [(name, g) for name, g in zoo if g.n <= max_n]

"""Finite reversible weighted graphs, their generators and spectra.

A graph is a triple (rates w, measure mu, maximal rate alpha) with
mu(x) w(x,y) = mu(y) w(y,x).  The generator acts as
L f(x) = sum_y w(x,y) (f(y) - f(x)); all downstream modules work through
this representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    Disconnected,
    NonPositiveRate,
    ReversibilityViolation,
)

# Default tolerances: exact algebraic identities vs iterative/eigen results.
EXACT_TOL = 1e-12
ITER_TOL = 1e-8


class WeightedGraph:
    """Immutable reversible weighted graph.

    Attributes
    ----------
    n : number of vertices.
    rates : CSR matrix of jump rates, zero diagonal.
    mu : strictly positive probability vector, reversible for ``rates``.
    alpha : maximal total exit rate max_x sum_y w(x,y).
    """

    def __init__(self, rates, mu, *, require_connected=True, tol=EXACT_TOL):
        rates = sp.csr_matrix(rates)
        rates.eliminate_zeros()
        n = rates.shape[0]
        if rates.shape != (n, n):
            raise DimensionMismatch("rate table must be square")
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (n,):
            raise DimensionMismatch("measure length does not match vertex count")
        if np.any(mu <= 0):
            raise ReversibilityViolation("measure must be strictly positive")
        total = mu.sum()
        if abs(total - 1.0) > 1e-9:
            mu = mu / total
        if rates.nnz and rates.data.min() <= 0:
            raise NonPositiveRate("all stored rates must be positive")
        if rates.diagonal().any():
            raise NonPositiveRate("self-rates are not allowed")

        # Support symmetry and detailed balance in one pass.
        flux = sp.diags(mu) @ rates
        asym = (flux - flux.T).tocoo()
        scale = flux.data.max() if flux.nnz else 1.0
        if asym.nnz and np.abs(asym.data).max() > tol * scale:
            raise ReversibilityViolation(
                "mu(x) w(x,y) != mu(y) w(y,x) beyond tolerance"
            )
        if require_connected and n > 1:
            ncomp, _ = connected_components(rates, directed=False)
            if ncomp != 1:
                raise Disconnected(f"support graph has {ncomp} components")

        self.n = n
        self.rates = rates
        self.mu = mu
        self.mu.setflags(write=False)
        self.exit_rates = np.asarray(rates.sum(axis=1)).ravel()
        self.exit_rates.setflags(write=False)
        self.alpha = float(self.exit_rates.max()) if n else 0.0

    @cached_property
    def laplacian(self) -> np.ndarray:
        """Dense generator L = w - diag(exit rates)."""
        L = self.rates.toarray()
        L[np.diag_indices(self.n)] = -self.exit_rates
        return L

    @cached_property
    def transition_matrix(self) -> np.ndarray:
        """Uniformized stochastic matrix P = Id + L/alpha (dense)."""
        if self.alpha <= 0:
            return np.eye(self.n)
        return np.eye(self.n) + self.laplacian / self.alpha

    @cached_property
    def neighbor_table(self):
        """Per-vertex arrays (neighbors, rates) for walk sampling."""
        csr = self.rates
        return [
            (csr.indices[csr.indptr[x]:csr.indptr[x + 1]],
             csr.data[csr.indptr[x]:csr.indptr[x + 1]])
            for x in range(self.n)
        ]

    def mean_eigenvalue(self) -> float:
        """trace(-L)/(alpha n), the mean of the spectrum of -L/alpha."""
        return float(self.exit_rates.sum() / (self.alpha * self.n))

    def edges(self):
        """Directed edges (x, y, rate) with rate > 0, row-major order."""
        coo = self.rates.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem of -L, orthonormal in the mu-weighted inner product."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column i is e_i


def build_graph(edges, mu=None, n=None, *, require_connected=True,
                tol=EXACT_TOL) -> WeightedGraph:
    """Build a validated graph from directed (x, y, rate) triples.

    Duplicate (x, y) entries accumulate.  When ``mu`` is omitted the rate
    table must be symmetric and the measure is uniform.
    """
    edges = list(edges)
    if n is None:
        n = 1 + max((max(x, y) for x, y, _ in edges), default=0)
    rows, cols, vals = [], [], []
    for x, y, rate in edges:
        if not (0 <= x < n and 0 <= y < n):
            raise DimensionMismatch(f"vertex index out of range: ({x}, {y})")
        if x == y:
            raise NonPositiveRate("self-rates are not allowed")
        if rate <= 0:
            raise NonPositiveRate(f"rate for edge ({x}, {y}) must be positive")
        rows.append(x)
        cols.append(y)
        vals.append(float(rate))
    rates = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    rates.sum_duplicates()

    if mu is None:
        asym = (rates - rates.T).tocoo()
        scale = rates.data.max() if rates.nnz else 1.0
        if asym.nnz and np.abs(asym.data).max() > tol * scale:
            raise ReversibilityViolation(
                "rates are not symmetric; an explicit measure is required"
            )
        mu = np.full(n, 1.0 / n)
    return WeightedGraph(rates, mu, require_connected=require_connected, tol=tol)


def laplacian_apply(g: WeightedGraph, f) -> np.ndarray:
    """Apply the generator: (Lf)(x) = sum_y w(x,y)(f(y) - f(x))."""
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n,):
        raise DimensionMismatch("signal length does not match vertex count")
    return g.rates @ f - g.exit_rates * f


def spectral_decompose(g: WeightedGraph) -> SpectralDecomposition:
    """Eigendecomposition of -L via the mu^(1/2) similarity transform.

    Returns eigenvalues in nondecreasing order and right eigenvectors of
    -L that are orthonormal in l2(X, mu).  Dense; intended for validation
    at desk scale.
    """
    sqrt_mu = np.sqrt(g.mu)
    A = -(sqrt_mu[:, None] * g.laplacian) / sqrt_mu[None, :]
    A = 0.5 * (A + A.T)
    try:
        lam, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    vecs = V / sqrt_mu[:, None]
    # Deterministic sign: largest-magnitude component positive.
    for i in range(g.n):
        j = int(np.argmax(np.abs(vecs[:, i])))
        if vecs[j, i] < 0:
            vecs[:, i] = -vecs[:, i]
    return SpectralDecomposition(eigenvalues=lam, eigenvectors=vecs)


# ---------------------------------------------------------------------------
# Text file formats: graph, measure, signal.
# ---------------------------------------------------------------------------

def write_graph_file(path, g: WeightedGraph) -> None:
    """First line ``n m``, then m directed lines ``u v rate``."""
    lines = [f"{g.n} {g.rates.nnz}"]
    lines.extend(f"{x} {y} {w!r}" for x, y, w in g.edges())
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph_file(path, mu=None) -> WeightedGraph:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise DimensionMismatch("graph file missing 'n m' header")
    n, m = int(tokens[0]), int(tokens[1])
    body = tokens[2:]
    if len(body) != 3 * m:
        raise DimensionMismatch(f"expected {3 * m} edge tokens, got {len(body)}")
    edges = [
        (int(body[3 * i]), int(body[3 * i + 1]), float(body[3 * i + 2]))
        for i in range(m)
    ]
    return build_graph(edges, mu=mu, n=n)


def read_measure_file(path) -> np.ndarray:
    values = np.loadtxt(path, dtype=float, ndmin=1)
    if np.any(values <= 0):
        raise ReversibilityViolation("measure file entries must be positive")
    return values


def read_signal_file(path) -> np.ndarray:
    return np.loadtxt(path, dtype=float, ndmin=1)


def write_signal_file(path, values) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(repr(float(v)) for v in np.asarray(values)) + "\n")

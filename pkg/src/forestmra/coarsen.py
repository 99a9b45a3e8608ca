"""Coarse generators by Schur complement, with error-budgeted sparsification.

Dropping the complement block of the generator yields the trace-process
generator on the kept set, together with the constants (alpha_bar, beta,
gamma) controlling every reconstruction and intertwining bound.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    EmptyComplement,
    EmptyKeptSet,
    FullKeptSet,
    NotConverged,
    SingularBlock,
)
from .graphs import WeightedGraph

DENSE_THRESHOLD = 2048


@dataclass(frozen=True)
class CoarseLevel:
    """One downsampling step: kept/dropped split and derived operators.

    ``green_dropped`` is the inverse of the negated dropped block; its
    entry (x, y) is the expected time the walk started at x spends at y
    before hitting the kept set, so its row sums are mean hitting times.
    """

    kept: np.ndarray
    dropped: np.ndarray
    Lbar: np.ndarray
    mu_bar: np.ndarray
    alpha_bar: float
    beta: float
    gamma: float
    green_dropped: np.ndarray
    sparsified: bool = False
    theta: float | None = None

    @property
    def n_kept(self) -> int:
        return self.kept.shape[0]

    @property
    def n_dropped(self) -> int:
        return self.dropped.shape[0]


def neumann_inverse(g: WeightedGraph, dropped, tol: float = 1e-12,
                    max_terms: int = 10000) -> np.ndarray:
    """Truncated series for the inverse of the negated dropped block.

    (1/alpha) sum_k (P_dd)^k with P = Id + L/alpha; stops once the added
    term's max row sum falls below tol times the running max row sum.
    Partial sums increase entrywise to the exact inverse.
    """
    dropped = np.asarray(sorted(dropped), dtype=np.int64)
    if dropped.size == 0:
        raise EmptyComplement("dropped set must be nonempty")
    if dropped.size >= g.n:
        raise EmptyKeptSet("dropped set must leave at least one kept vertex")
    P_dd = g.transition_matrix[np.ix_(dropped, dropped)]
    total = np.eye(dropped.size)
    term = np.eye(dropped.size)
    for _ in range(max_terms):
        term = term @ P_dd
        total += term
        if term.sum(axis=1).max() < tol * total.sum(axis=1).max():
            return total / g.alpha
    raise NotConverged(
        "series truncated at max_terms; kept set is badly spread"
    )


def schur_complement(g: WeightedGraph, kept, *,
                     dense_threshold: int = DENSE_THRESHOLD,
                     neumann_tol: float = 1e-12,
                     neumann_max_terms: int = 10000) -> CoarseLevel:
    """Coarse generator on the kept set plus its bound constants.

    Lbar = L_kk - L_kd (L_dd)^{-1} L_dk.  1/gamma is the worst mean
    hitting time of the kept set; 1/beta the worst mean excursion length
    off the kept set started from it, both read off ``green_dropped``.
    """
    kept = np.asarray(sorted(set(int(v) for v in kept)), dtype=np.int64)
    if kept.size == 0:
        raise EmptyKeptSet("kept set must be nonempty")
    if kept.size >= g.n:
        raise FullKeptSet("kept set equals the vertex set; nothing to coarsen")
    mask = np.zeros(g.n, dtype=bool)
    mask[kept] = True
    dropped = np.nonzero(~mask)[0]

    L = g.laplacian
    L_dd = L[np.ix_(dropped, dropped)]
    L_dk = L[np.ix_(dropped, kept)]
    L_kd = L[np.ix_(kept, dropped)]
    L_kk = L[np.ix_(kept, kept)]

    if dropped.size <= dense_threshold:
        try:
            green = np.linalg.inv(-L_dd)
        except np.linalg.LinAlgError as exc:
            raise SingularBlock(str(exc)) from exc
    else:
        green = neumann_inverse(g, dropped, tol=neumann_tol,
                                max_terms=neumann_max_terms)
    if not np.all(np.isfinite(green)):
        raise SingularBlock("dropped block inverse is not finite")

    Lbar = L_kk + L_kd @ green @ L_dk
    alpha_bar = float(np.max(-np.diag(Lbar))) if kept.size else 0.0
    hit_times = green.sum(axis=1)
    inv_gamma = float(hit_times.max())
    gamma = 1.0 / inv_gamma if inv_gamma > 0 else np.inf
    # Excursion length off the kept set, after the first uniformized jump.
    inv_beta = float((L[np.ix_(kept, dropped)] @ hit_times).max() / g.alpha)
    beta = 1.0 / inv_beta if inv_beta > 0 else np.inf
    mu_bar = g.mu[kept] / g.mu[kept].sum()

    level = CoarseLevel(kept=kept, dropped=dropped, Lbar=Lbar, mu_bar=mu_bar,
                        alpha_bar=alpha_bar, beta=beta, gamma=gamma,
                        green_dropped=green)
    _validate_level(level, g)
    return level


def _validate_level(level: CoarseLevel, g: WeightedGraph) -> None:
    scale = max(level.alpha_bar, 1e-300)
    off = level.Lbar - np.diag(np.diag(level.Lbar))
    if off.min() < -1e-10 * scale:
        raise SingularBlock("coarse generator has negative off-diagonal rates")
    if np.abs(level.Lbar.sum(axis=1)).max() > 1e-8 * max(scale, g.alpha):
        raise SingularBlock("coarse generator rows do not sum to zero")
    if level.green_dropped.size and level.green_dropped.min() < -1e-12 / scale:
        raise SingularBlock("dropped-block inverse has negative entries")


def local_errors(level: CoarseLevel, g: WeightedGraph, qprime: float,
                 kernel: np.ndarray | None = None) -> np.ndarray:
    """Per-row intertwining residual of the coarse generator.

    eps(x) = sum_y |(K L)(x, y) - (Lbar K_kept)(x, y)| over kept rows x,
    with K the full fine-level kernel at qprime.
    """
    from .filterbank import green_kernel

    K = kernel if kernel is not None else green_kernel(g, qprime)
    rows = K[level.kept, :]
    E = rows @ g.laplacian - level.Lbar @ rows
    return np.abs(E).sum(axis=1)


def sparsify(level: CoarseLevel, eps, theta: float,
             alpha_fine: float) -> CoarseLevel:
    """Zero small symmetric rate pairs within a per-row error budget.

    Pairs are screened in nondecreasing order of
    max(w(x,y), w(y,x)); a pair is removed only while both running
    removed-weight counters stay within eps * alpha_bar / (2 theta alpha).
    Diagonals absorb the removed weight so rows still sum to zero.  The
    result can be disconnected; each component keeps the restricted
    measure.
    """
    eps = np.asarray(eps, dtype=float)
    if theta < 1:
        raise ValueError("theta must be >= 1")
    m = level.n_kept
    if eps.shape != (m,):
        raise ValueError("one error budget per kept vertex is required")
    W = level.Lbar - np.diag(np.diag(level.Lbar))
    W = np.maximum(W, 0.0)
    budget = eps * level.alpha_bar / (2.0 * theta * alpha_fine)

    pairs = []
    for i in range(m):
        for j in range(i + 1, m):
            wmax = max(W[i, j], W[j, i])
            if wmax > 0:
                pairs.append((wmax, i, j))
    pairs.sort()

    removed = np.zeros(m)
    Ws = W.copy()
    for _, i, j in pairs:
        if (removed[i] + Ws[i, j] <= budget[i]
                and removed[j] + Ws[j, i] <= budget[j]):
            removed[i] += Ws[i, j]
            removed[j] += Ws[j, i]
            Ws[i, j] = 0.0
            Ws[j, i] = 0.0
    Lbar_s = Ws - np.diag(Ws.sum(axis=1))
    alpha_bar_s = float(np.max(-np.diag(Lbar_s))) if m else 0.0
    return replace(level, Lbar=Lbar_s, alpha_bar=alpha_bar_s,
                   sparsified=True, theta=float(theta))


def write_generator_file(path, level: CoarseLevel) -> None:
    """Coordinate dump of the coarse rates, mirroring the graph format."""
    m = level.n_kept
    entries = [
        (i, j, level.Lbar[i, j])
        for i in range(m)
        for j in range(m)
        if i != j and level.Lbar[i, j] > 0
    ]
    lines = [f"{m} {len(entries)}"]
    lines.extend(f"{i} {j} {w!r}" for i, j, w in entries)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

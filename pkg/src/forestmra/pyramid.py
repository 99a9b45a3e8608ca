"""Multilevel scheme: forest downsampling, coarsening and filtering per
level, telescoping reconstruction, compression and approximation bounds.

Each level keeps the roots of a sampled forest, replaces the generator by
its Schur complement (optionally sparsified under a per-row error
budget), picks the filter parameter from the coarse rate, and splits the
running approximation into the next approximation plus one detail block.
Coefficient counts are conserved at every depth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .coarsen import CoarseLevel, local_errors, schur_complement
from .coarsen import sparsify as sparsify_level
from .errors import DegenerateGraph, EmptyComplement, ShapeMismatch
from .filterbank import (
    AnalysisResult,
    FilterBank,
    analyze,
    build_reconstructors,
    lp_norm,
    operator_norm,
    reconstruct,
)
from .forests import wilson_sample
from .graphs import WeightedGraph


@dataclass(frozen=True)
class PyramidLevel:
    """Everything attached to one downsampling step."""

    index: int
    graph: WeightedGraph          # fine graph of this level
    mu_raw: np.ndarray            # original measure restricted to this level
    vertex_ids: np.ndarray        # original ids of this level's vertices
    q: float
    qprime: float
    coarse: CoarseLevel           # the level actually used (maybe sparsified)
    bank: FilterBank
    sparsified: bool
    theta: float | None


@dataclass(frozen=True)
class PyramidCoefficients:
    """The stored sequence [f_K, g_K, ..., g_1] with index maps."""

    n: int
    approx: np.ndarray
    approx_ids: np.ndarray
    details: list                 # details[i] = g_{i+1} on the level-i dropped set
    detail_ids: list
    params: list                  # (q, qprime) per level

    @property
    def n_levels(self) -> int:
        return len(self.details)

    def coefficient_count(self) -> int:
        return int(self.approx.size + sum(d.size for d in self.details))


@dataclass(frozen=True)
class CompressionReport:
    kept_fraction: float
    kept_count: int               # detail coefficients kept
    approx_count: int
    relative_l2_error: float
    per_level_kept: list


def select_q(graph: WeightedGraph, theta1: float = 0.125, theta2: float = 1.0,
             grid_size: int = 16, samples: int = 1, seed=0) -> float:
    """Pick the killing parameter on a geometric grid in
    [theta1 alpha, theta2 alpha].

    For each grid point, ``samples`` forests estimate
    a(q) = q E[#dropped/(1 + #kept)] and b(q) = E[#dropped/#kept]/alpha;
    the returned q minimizes a(q) b(q), ties broken toward larger q.
    """
    if graph.n < 2:
        raise DegenerateGraph("parameter selection needs at least two vertices")
    if not (0 < theta1 < theta2):
        raise ValueError("need 0 < theta1 < theta2")
    if grid_size < 2 or samples < 1:
        raise ValueError("grid_size >= 2 and samples >= 1 required")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    grid = np.geomspace(theta1 * graph.alpha, theta2 * graph.alpha, grid_size)
    best_q, best_obj = None, np.inf
    for q in grid:
        counts = np.array([
            wilson_sample(graph, q, rng).n_roots for _ in range(samples)
        ], dtype=float)
        a = q * np.mean((graph.n - counts) / (1.0 + counts))
        b = np.mean((graph.n - counts) / counts) / graph.alpha
        obj = a * b
        if obj <= best_obj:
            best_q, best_obj = float(q), obj
    return best_q


def select_qprime(level: CoarseLevel) -> float:
    """q' = 2 alpha_bar #kept / #dropped, so that 1 + 2 alpha_bar / q'
    equals the downsampling ratio exactly."""
    if level.n_dropped == 0:
        raise EmptyComplement("coarse level has no dropped vertices")
    return 2.0 * level.alpha_bar * level.n_kept / level.n_dropped


def _coarse_graph(level: CoarseLevel) -> WeightedGraph:
    # Clean the Schur (or sparsified) rates into an exactly reversible
    # table: clip roundoff negatives and symmetrize the flux.
    W = level.Lbar - np.diag(np.diag(level.Lbar))
    W = np.maximum(W, 0.0)
    mu = level.mu_bar
    flux = 0.5 * (mu[:, None] * W + (mu[:, None] * W).T)
    W = flux / mu[:, None]
    return WeightedGraph(sp.csr_matrix(W), mu, require_connected=False)


def decompose(g: WeightedGraph, f, *, max_levels: int | None = None,
              min_size: int = 16, theta1: float = 0.125, theta2: float = 1.0,
              sparsify: bool = False, theta_sparsify: float = 4.0,
              grid_size: int = 16, samples: int = 1, seed=0,
              kernel_method: str = "exact", chebyshev_degree: int = 30):
    """Run the full multilevel analysis of a signal.

    Returns (PyramidCoefficients, [PyramidLevel]).  Iterates until the
    current level has at most ``min_size`` vertices, ``max_levels`` is
    reached, or eight resamples in a row return the all-roots forest.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n,):
        raise ShapeMismatch("signal length does not match the graph")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    rng = np.random.default_rng(seed)

    levels = []
    details, detail_ids, params = [], [], []
    graph_i, mu_raw, ids, f_i = g, g.mu.copy(), np.arange(g.n), f
    k = 0
    while True:
        if graph_i.n <= min_size or graph_i.alpha <= 0:
            break
        if max_levels is not None and k >= max_levels:
            break
        q = select_q(graph_i, theta1, theta2, grid_size, samples, rng)
        forest = None
        for _ in range(9):
            candidate = wilson_sample(graph_i, q, rng)
            if candidate.n_roots < graph_i.n:
                forest = candidate
                break
        if forest is None:
            break
        kept_local = np.asarray(sorted(forest.roots), dtype=np.int64)

        level = schur_complement(graph_i, kept_local)
        used = level
        theta_used = None
        if sparsify:
            eps = local_errors(level, graph_i, _qprime_or_fallback(level, graph_i))
            used = sparsify_level(level, eps, theta_sparsify, graph_i.alpha)
            theta_used = float(theta_sparsify)

        graph_next = _coarse_graph(used)
        used = CoarseLevel(kept=used.kept, dropped=used.dropped,
                           Lbar=graph_next.laplacian, mu_bar=used.mu_bar,
                           alpha_bar=graph_next.alpha, beta=used.beta,
                           gamma=used.gamma, green_dropped=used.green_dropped,
                           sparsified=used.sparsified, theta=used.theta)
        qprime = _qprime_or_fallback(used, graph_i)
        bank = build_reconstructors(graph_i, used, qprime,
                                    method=kernel_method,
                                    degree=chebyshev_degree)
        result = analyze(bank, f_i)

        levels.append(PyramidLevel(
            index=k, graph=graph_i, mu_raw=mu_raw, vertex_ids=ids, q=q,
            qprime=qprime, coarse=used, bank=bank,
            sparsified=used.sparsified, theta=theta_used,
        ))
        details.append(result.fbreve)
        detail_ids.append(ids[used.dropped])
        params.append((q, qprime))

        graph_i = graph_next
        mu_raw = mu_raw[kept_local]
        ids = ids[kept_local]
        f_i = result.fbar
        k += 1

    coeffs = PyramidCoefficients(n=g.n, approx=f_i, approx_ids=ids,
                                 details=details, detail_ids=detail_ids,
                                 params=params)
    assert coeffs.coefficient_count() == g.n
    return coeffs, levels


def _qprime_or_fallback(level: CoarseLevel, graph: WeightedGraph) -> float:
    # A one-vertex or fully sparsified coarse set has alpha_bar = 0, where
    # the ratio formula degenerates; fall back to the fine-level rate.
    if level.alpha_bar > 0:
        return select_qprime(level)
    return graph.alpha


def reconstruct_full(coeffs: PyramidCoefficients, levels) -> np.ndarray:
    """Telescoping reconstruction from [f_K, g_K, ..., g_1]."""
    if len(levels) != coeffs.n_levels:
        raise ShapeMismatch("level stack does not match the coefficients")
    f = coeffs.approx
    for level in reversed(levels):
        detail = coeffs.details[level.index]
        if f.shape != (level.coarse.n_kept,) or \
                detail.shape != (level.coarse.n_dropped,):
            raise ShapeMismatch(f"bad coefficient shape at level {level.index}")
        f = reconstruct(level.bank, AnalysisResult(fbar=f, fbreve=detail))
    return f


def stacked_norm(coeffs: PyramidCoefficients, levels, p) -> float:
    """Norm of the stacked coefficient sequence, weighted by the original
    measure restricted to each block."""
    if p == np.inf:
        vals = [np.abs(coeffs.approx).max() if coeffs.approx.size else 0.0]
        vals += [np.abs(d).max() if d.size else 0.0 for d in coeffs.details]
        return float(max(vals))
    total = 0.0
    for level in levels:
        w = level.mu_raw[level.coarse.dropped]
        total += w @ np.abs(coeffs.details[level.index]) ** p
    if levels:
        w_top = levels[-1].mu_raw[levels[-1].coarse.kept]
    else:
        w_top = np.ones(coeffs.approx.size)
    total += w_top @ np.abs(coeffs.approx) ** p
    return float(total ** (1.0 / p))


def dual_detail_norms(levels):
    """l2(X, mu) norms of the dual detail vectors per level.

    The dual vector of detail (level j, vertex x) is the corresponding
    column of Rbar_0 ... Rbar_{j-1} Rbreve_j.
    """
    mu0 = levels[0].graph.mu
    norms = []
    A = None  # running product Rbar_0 ... Rbar_{j-1}
    for level in levels:
        D = level.bank.Rbreve if A is None else A @ level.bank.Rbreve
        norms.append(np.sqrt(mu0 @ D ** 2))
        A = level.bank.Rbar if A is None else A @ level.bank.Rbar
    return norms


def compress(coeffs: PyramidCoefficients, levels, keep_fraction: float,
             _norms=None):
    """Keep the top fraction of normalized detail coefficients.

    Details are ranked by |coefficient| times the l2(X, mu) norm of the
    coefficient's dual vector; the approximation block is always kept.
    The error is measured against the full reconstruction in the
    mu-weighted l2 norm.
    """
    if not 0.0 <= keep_fraction <= 1.0:
        raise ValueError("keep_fraction must lie in [0, 1]")
    if not levels:
        raise ShapeMismatch("compression needs at least one level")
    norms = dual_detail_norms(levels) if _norms is None else _norms
    scores, level_idx, pos_idx = [], [], []
    for j, d in enumerate(coeffs.details):
        scores.append(np.abs(d) * norms[j])
        level_idx.append(np.full(d.size, j))
        pos_idx.append(np.arange(d.size))
    scores = np.concatenate(scores) if scores else np.array([])
    level_idx = np.concatenate(level_idx)
    pos_idx = np.concatenate(pos_idx)

    total = scores.size
    n_keep = int(np.floor(keep_fraction * total + 0.5))
    order = np.lexsort((pos_idx, level_idx, -scores))
    kept = order[:n_keep]

    masked = [np.zeros_like(d) for d in coeffs.details]
    per_level = [0] * len(levels)
    for idx in kept:
        j, x = int(level_idx[idx]), int(pos_idx[idx])
        masked[j][x] = coeffs.details[j][x]
        per_level[j] += 1

    masked_coeffs = PyramidCoefficients(
        n=coeffs.n, approx=coeffs.approx, approx_ids=coeffs.approx_ids,
        details=masked, detail_ids=coeffs.detail_ids, params=coeffs.params,
    )
    f_c = reconstruct_full(masked_coeffs, levels)
    f_full = reconstruct_full(coeffs, levels)
    mu0 = levels[0].graph.mu
    denom = lp_norm(f_full, mu0, 2)
    err = lp_norm(f_full - f_c, mu0, 2) / denom if denom > 0 else 0.0
    report = CompressionReport(
        kept_fraction=float(keep_fraction), kept_count=int(n_keep),
        approx_count=int(coeffs.approx.size), relative_l2_error=float(err),
        per_level_kept=per_level,
    )
    return f_c, report


def compression_curve(coeffs, levels, fractions):
    """(kept_fraction, relative_l2_error) rows for a list of fractions."""
    norms = dual_detail_norms(levels)
    rows = []
    for frac in fractions:
        _, report = compress(coeffs, levels, frac, _norms=norms)
        rows.append((float(frac), report.relative_l2_error))
    return rows


class JacksonBound(NamedTuple):
    lhs: float
    rhs_exact: float
    rhs_bound: float


def _conjugate(p: float) -> float:
    if p == 1:
        return np.inf
    if p == np.inf:
        return 1.0
    return p / (p - 1.0)


def _intertwining_matrix(level: PyramidLevel) -> np.ndarray:
    rows = level.bank.kernel[level.coarse.kept, :]
    return level.coarse.Lbar @ rows - rows @ level.graph.laplacian


def bound_constants(level: PyramidLevel, p) -> tuple[float, float, float]:
    """Closed-form upper bounds for the three per-level operator norms."""
    a_bar, alpha = level.coarse.alpha_bar, level.graph.alpha
    beta, gamma, qp = level.coarse.beta, level.coarse.gamma, level.qprime
    if p == np.inf:
        rbar = 1.0 + 2.0 * a_bar / qp
        rbreve = max(alpha / beta, 1.0 + qp / gamma)
        err = 2.0 * qp * alpha / beta
    else:
        pstar = _conjugate(p)
        rbar = ((1.0 + 2.0 * a_bar / qp) ** p + alpha / beta) ** (1.0 / p)
        rbreve = ((alpha / beta) ** (p / pstar)
                  + (1.0 + qp / gamma) ** p) ** (1.0 / p)
        err = 2.0 * qp * (alpha / beta) ** (1.0 / pstar)
    return rbar, rbreve, err


def jackson_bound(levels, f, p, check: bool = True) -> JacksonBound:
    """Approximation error after all levels against its two bounds.

    lhs drops every detail block and reconstructs from the coarsest
    approximation only.  rhs_exact assembles the telescoping bound from
    exactly computed operator norms (power iteration at p = 2), rhs_bound
    from the closed-form constants.  With the raw restricted measure on
    both sides of every operator, the norm-ratio prefactors cancel.
    """
    if not levels:
        raise ShapeMismatch("at least one level is required")
    f = np.asarray(f, dtype=float)
    g0 = levels[0].graph
    mu0 = g0.mu

    f_i = f
    approx_chain = []
    for level in levels:
        f_i = level.bank.kernel[level.coarse.kept, :] @ f_i
        approx_chain.append(f_i)
    rec = approx_chain[-1]
    for level in reversed(levels):
        rec = level.bank.Rbar @ rec
    lhs = lp_norm(f - rec, mu0, p)

    rbar_e, rbreve_e, err_e = [], [], []
    rbar_b, rbreve_b, err_b = [], [], []
    for level in levels:
        mu_in_bar = level.mu_raw[level.coarse.kept]
        mu_in_breve = level.mu_raw[level.coarse.dropped]
        rbar_e.append(operator_norm(level.bank.Rbar, level.mu_raw, mu_in_bar, p))
        rbreve_e.append(operator_norm(level.bank.Rbreve, level.mu_raw,
                                      mu_in_breve, p))
        err_e.append(operator_norm(_intertwining_matrix(level), mu_in_bar,
                                   level.mu_raw, p))
        b1, b2, b3 = bound_constants(level, p)
        rbar_b.append(b1)
        rbreve_b.append(b2)
        err_b.append(b3)

    Lf_norm = lp_norm(g0.rates @ f - g0.exit_rates * f, mu0, p)
    f_norm = lp_norm(f, mu0, p)

    def assemble(rbar, rbreve, err):
        total = 0.0
        prod = 1.0
        err_sum = 0.0
        for j, level in enumerate(levels):
            coeff = prod * rbreve[j] / level.qprime
            total += coeff * (Lf_norm + err_sum * f_norm)
            err_sum += err[j]
            prod *= rbar[j]
        return total

    rhs_exact = assemble(rbar_e, rbreve_e, err_e)
    rhs_bound = assemble(rbar_b, rbreve_b, err_b)
    if check and not any(level.sparsified for level in levels):
        if lhs > rhs_exact * (1.0 + 1e-9) or lhs > rhs_bound * (1.0 + 1e-9):
            raise AssertionError(
                f"approximation bound violated: {lhs} > "
                f"({rhs_exact}, {rhs_bound})"
            )
    return JacksonBound(lhs=lhs, rhs_exact=rhs_exact, rhs_bound=rhs_bound)


# ---------------------------------------------------------------------------
# Coefficients file: JSON with one record per level plus the approximation.
# ---------------------------------------------------------------------------

def write_coefficients(path, coeffs: PyramidCoefficients) -> None:
    doc = {
        "n": coeffs.n,
        "levels": [
            {
                "level": j,
                "q": coeffs.params[j][0],
                "qprime": coeffs.params[j][1],
                "kept_vertex_ids": _level_kept_ids(coeffs, j),
                "dropped_vertex_ids": coeffs.detail_ids[j].tolist(),
                "detail_values": coeffs.details[j].tolist(),
            }
            for j in range(coeffs.n_levels)
        ],
        "approx": {
            "level": coeffs.n_levels,
            "vertex_ids": coeffs.approx_ids.tolist(),
            "approx_values": coeffs.approx.tolist(),
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _level_kept_ids(coeffs: PyramidCoefficients, j: int):
    # Original ids of the level-(j+1) vertex set: the approximation block
    # plus every detail block strictly deeper than j.
    parts = [coeffs.approx_ids] + coeffs.detail_ids[j + 1:]
    return np.sort(np.concatenate(parts)).tolist()


def read_coefficients(path) -> PyramidCoefficients:
    with open(path) as fh:
        doc = json.load(fh)
    records = sorted(doc["levels"], key=lambda r: r["level"])
    details = [np.asarray(r["detail_values"], dtype=float) for r in records]
    detail_ids = [np.asarray(r["dropped_vertex_ids"], dtype=np.int64)
                  for r in records]
    params = [(r["q"], r["qprime"]) for r in records]
    return PyramidCoefficients(
        n=int(doc["n"]),
        approx=np.asarray(doc["approx"]["approx_values"], dtype=float),
        approx_ids=np.asarray(doc["approx"]["vertex_ids"], dtype=np.int64),
        details=details, detail_ids=detail_ids, params=params,
    )

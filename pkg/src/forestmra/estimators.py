"""Validation of the forest measure's exact identities and the Monte
Carlo estimators used for parameter tuning.

Exact checks run over the brute-force forest ensemble (tiny graphs);
statistical checks compare Wilson samples against determinantal and
spectral formulas at three standard errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .coarsen import schur_complement
from .errors import GraphTooLarge, NonPositiveParameter
from .filterbank import green_kernel
from .forests import enumerate_forests, sample_forests
from .graphs import WeightedGraph, spectral_decompose


@dataclass(frozen=True)
class EstimateReport:
    """One checked quantity.

    ``direction`` is "eq" (pass iff |lhs - rhs| <= tolerance) or "ge"
    (pass iff lhs >= rhs - tolerance).
    """

    name: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool
    samples: int | None = None
    direction: str = "eq"

    def to_dict(self) -> dict:
        return {
            "name": self.name, "lhs": self.lhs, "rhs": self.rhs,
            "tolerance": self.tolerance, "passed": self.passed,
            "samples": self.samples, "direction": self.direction,
        }


def _eq_report(name, lhs, rhs, rel_tol, samples=None) -> EstimateReport:
    tol = rel_tol * max(1.0, abs(lhs), abs(rhs))
    return EstimateReport(name=name, lhs=float(lhs), rhs=float(rhs),
                          tolerance=tol, passed=bool(abs(lhs - rhs) <= tol),
                          samples=samples)


def _ge_report(name, lhs, rhs, tol, samples=None) -> EstimateReport:
    return EstimateReport(name=name, lhs=float(lhs), rhs=float(rhs),
                          tolerance=float(tol),
                          passed=bool(lhs >= rhs - tol),
                          samples=samples, direction="ge")


@dataclass(frozen=True)
class RootCountLaw:
    """Distribution of the number of roots; index k is P(#roots = k)."""

    probabilities: np.ndarray = field(repr=False)

    def prob_more_than_one(self) -> float:
        return float(self.probabilities[2:].sum())


def partition_function_check(g: WeightedGraph, q: float) -> EstimateReport:
    """Enumerated partition sum against det(q Id - L)."""
    ensemble = enumerate_forests(g, q)
    rhs = float(np.linalg.det(q * np.eye(g.n) - g.laplacian))
    return _eq_report("partition-function", ensemble.partition_sum, rhs, 1e-10)


def root_count_law(g: WeightedGraph, q: float, samples: int = 0, seed=0):
    """Exact root-count law, optionally compared to a Wilson histogram.

    The count is distributed as a sum of independent Bernoulli variables
    with success probabilities q/(q + lambda_i); the convolution is exact.
    With ``samples`` > 0, returns a report of the total-variation distance
    between the empirical histogram and the law (tolerance 0.01).
    """
    if q <= 0:
        raise NonPositiveParameter("q must be positive")
    lam = np.maximum(spectral_decompose(g).eigenvalues, 0.0)
    law = np.zeros(g.n + 1)
    law[0] = 1.0
    for lv in lam:
        p = q / (q + lv)
        new = law * (1.0 - p)
        new[1:] += law[:-1] * p
        law = new
    exact = RootCountLaw(probabilities=law)
    if samples <= 0:
        return exact, None
    forests = sample_forests(g, q, samples, seed)
    hist = np.bincount([f.n_roots for f in forests], minlength=g.n + 1)
    tv = 0.5 * np.abs(hist / samples - law).sum()
    report = EstimateReport(name="root-count-law-tv", lhs=float(tv), rhs=0.0,
                            tolerance=0.01, passed=bool(tv <= 0.01),
                            samples=samples)
    return exact, report


def determinantal_marginal(g: WeightedGraph, q: float, A, samples: int,
                           seed=0, forests=None) -> EstimateReport:
    """Empirical P(A subset of roots) against the kernel minor det."""
    A = sorted(set(int(a) for a in A))
    if len(A) > 3:
        raise ValueError("marginals are checked for |A| <= 3 only")
    K = green_kernel(g, q)
    exact = float(np.linalg.det(K[np.ix_(A, A)])) if A else 1.0
    if forests is None:
        forests = sample_forests(g, q, samples, seed)
    hits = sum(1 for f in forests if all(a in f.roots for a in A))
    emp = hits / len(forests)
    se = np.sqrt(max(exact * (1.0 - exact), 0.0) / len(forests))
    tol = 3.0 * se + 1e-12
    return EstimateReport(name=f"determinantal-marginal{A}", lhs=emp,
                          rhs=exact, tolerance=tol,
                          passed=bool(abs(emp - exact) <= tol),
                          samples=len(forests))


def _walk_hitting_time(g: WeightedGraph, start: int, targets, rng) -> float:
    t = 0.0
    u = start
    while u not in targets:
        nbrs, rates = g.neighbor_table[u]
        w = rates.sum()
        t += rng.exponential(1.0 / w)
        cum = np.cumsum(rates)
        u = int(nbrs[np.searchsorted(cum, rng.random() * w, side="right")])
    return t


def hitting_identity(g: WeightedGraph, q: float, starts, samples: int,
                     seed=0) -> list[EstimateReport]:
    """Mean time for an independent walk to reach the sampled roots.

    The mean equals P(#roots > 1)/q for every starting point; each start
    is compared to that target and all pairs of starts to each other, at
    three standard errors.
    """
    law, _ = root_count_law(g, q)
    target = law.prob_more_than_one() / q
    rng = np.random.default_rng(seed)
    means, ses = {}, {}
    reports = []
    for x in starts:
        values = np.empty(samples)
        forests = sample_forests(g, q, samples, rng)
        for i, forest in enumerate(forests):
            values[i] = _walk_hitting_time(g, x, forest.roots, rng)
        means[x] = values.mean()
        ses[x] = values.std(ddof=1) / np.sqrt(samples)
        reports.append(EstimateReport(
            name=f"hitting-time[start={x}]", lhs=float(means[x]), rhs=target,
            tolerance=3.0 * ses[x] + 1e-12,
            passed=bool(abs(means[x] - target) <= 3.0 * ses[x] + 1e-12),
            samples=samples))
    starts = list(starts)
    for i, x in enumerate(starts):
        for y in starts[i + 1:]:
            tol = 3.0 * float(np.hypot(ses[x], ses[y])) + 1e-12
            diff = abs(means[x] - means[y])
            reports.append(EstimateReport(
                name=f"hitting-time-agreement[{x},{y}]", lhs=float(diff),
                rhs=0.0, tolerance=tol, passed=bool(diff <= tol),
                samples=samples))
    return reports


def estimate_identities(g: WeightedGraph, q: float,
                        rel_tol: float = 1e-10) -> list[EstimateReport]:
    """Exact identities for the coarse-rate, excursion and hitting-time
    functionals of the random root set, over the enumerated ensemble.

    The hitting-time identity restricts its right side to forests with at
    least two roots; the single-root term belongs to the (never realized)
    empty-root boundary of the per-count identity.  Forests keeping every
    vertex contribute zero to the left sides (0/0 = 0 convention).
    """
    if g.n > 5:
        raise GraphTooLarge("identity checks enumerate forests; n <= 5 only")
    ensemble = enumerate_forests(g, q)
    probs = ensemble.probabilities
    P = g.transition_matrix
    n, alpha = g.n, g.alpha

    lhs_rate = lhs_excur = lhs_hit = 0.0
    rhs_rate = rhs_excur = rhs_hit = 0.0
    e_alpha = e_inv_beta = e_inv_gamma = 0.0
    for forest, p in zip(ensemble.forests, probs):
        kept = np.asarray(sorted(forest.roots), dtype=np.int64)
        m = kept.size
        if m == n:
            wbar = g.exit_rates
            lhs_rate += p * wbar.mean()
            e_alpha += p * wbar.max()
            rhs_rate += p * 0.0
        else:
            level = schur_complement(g, kept)
            wbar = -np.diag(level.Lbar)
            hit = level.green_dropped.sum(axis=1)
            excur = P[np.ix_(kept, level.dropped)] @ hit
            lhs_rate += p * wbar.mean()
            lhs_excur += p * excur.mean()
            lhs_hit += p * hit.mean()
            e_alpha += p * wbar.max()
            e_inv_beta += p * excur.max()
            e_inv_gamma += p * hit.max()
            rhs_rate += p * (n - m) / (m + 1.0)
            rhs_excur += p * (n - m) / (alpha * m)
        if m >= 2:
            rhs_hit += p * n / (n - m + 1.0)

    reports = [
        _eq_report("mean-coarse-rate-identity", lhs_rate, q * rhs_rate, rel_tol),
        _eq_report("mean-excursion-identity", lhs_excur, rhs_excur, rel_tol),
        _eq_report("mean-hitting-identity", lhs_hit, rhs_hit / q, rel_tol),
        _ge_report("alpha-bar-lower-bound", e_alpha, q * rhs_rate,
                   rel_tol * max(1.0, e_alpha)),
        _ge_report("inv-beta-lower-bound", e_inv_beta, rhs_excur,
                   rel_tol * max(1.0, e_inv_beta)),
        _ge_report("inv-gamma-lower-bound", e_inv_gamma, rhs_hit / q,
                   rel_tol * max(1.0, e_inv_gamma)),
    ]
    return reports


def cardinality_bounds(g: WeightedGraph, q: float, r: float,
                       samples: int = 0, seed=0) -> list[EstimateReport]:
    """Mean root-count bounds, from the kernel diagonal (exact) and
    optionally from Wilson samples at three standard errors."""
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    K = green_kernel(g, q)
    diag = np.diag(K)
    n, alpha = g.n, g.alpha
    rapid = np.nonzero(g.exit_rates >= r * alpha - 1e-12 * alpha)[0]
    e_kept = float(diag.sum())
    e_dropped_rapid = float((1.0 - diag[rapid]).sum())
    e_dropped = float(n - e_kept)
    reports = [
        _ge_report("mean-kept-count", e_kept, n * q / (q + alpha), 1e-10),
        _ge_report("mean-dropped-rapid-count", e_dropped_rapid,
                   rapid.size * r * alpha / (q + 2.0 * alpha), 1e-10),
        _ge_report("mean-dropped-count-trace", e_dropped,
                   n * alpha * g.mean_eigenvalue() / (q + 2.0 * alpha), 1e-10),
    ]
    if samples > 0:
        forests = sample_forests(g, q, samples, seed)
        counts = np.array([f.n_roots for f in forests], dtype=float)
        rapid_set = set(rapid.tolist())
        rapid_dropped = np.array([
            len(rapid_set - f.roots) for f in forests
        ], dtype=float)
        for name, values, bound in [
            ("mean-kept-count-mc", counts, n * q / (q + alpha)),
            ("mean-dropped-rapid-count-mc", rapid_dropped,
             rapid.size * r * alpha / (q + 2.0 * alpha)),
        ]:
            se = values.std(ddof=1) / np.sqrt(samples)
            reports.append(_ge_report(name, float(values.mean()), bound,
                                      3.0 * se + 1e-12, samples=samples))
    return reports


class TildeEstimates(NamedTuple):
    q: float
    alpha_tilde: float
    inv_beta_tilde: float
    inv_gamma_tilde: float


def mc_tilde_estimates(g: WeightedGraph, q_grid, samples: int,
                       seed=0) -> list[TildeEstimates]:
    """Monte Carlo table of the root-count functionals used for tuning."""
    rng = np.random.default_rng(seed)
    rows = []
    for q in q_grid:
        if q <= 0:
            raise NonPositiveParameter("grid values must be positive")
        counts = np.array([f.n_roots for f in sample_forests(g, q, samples, rng)],
                          dtype=float)
        dropped = g.n - counts
        rows.append(TildeEstimates(
            q=float(q),
            alpha_tilde=float(q * np.mean(dropped / (1.0 + counts))),
            inv_beta_tilde=float(np.mean(dropped / counts) / g.alpha),
            inv_gamma_tilde=float(np.mean(g.n / (1.0 + dropped)) / q),
        ))
    return rows


def tilde_estimates_exact(g: WeightedGraph, q: float) -> TildeEstimates:
    """Same functionals evaluated exactly over the root-count law."""
    law, _ = root_count_law(g, q)
    ks = np.arange(g.n + 1, dtype=float)
    probs = law.probabilities
    dropped = g.n - ks
    return TildeEstimates(
        q=float(q),
        alpha_tilde=float(q * probs @ (dropped / (1.0 + ks))),
        inv_beta_tilde=float(probs[1:] @ (dropped[1:] / ks[1:]) / g.alpha),
        inv_gamma_tilde=float(probs @ (g.n / (1.0 + dropped)) / q),
    )

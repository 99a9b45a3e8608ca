"""Green-kernel filter bank: analysis, exact reconstruction, wavelets.

The low-pass kernel at parameter qprime is q'(q'Id - L)^{-1}, the law of
the walk at an independent exponential(q') time.  Approximation
coefficients are its rows on the kept set, detail coefficients the rows
of (K - Id) on the dropped set, and two explicit block operators invert
the pair exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .coarsen import CoarseLevel
from .errors import (
    DegreeTooLow,
    DimensionMismatch,
    NonPositiveParameter,
    SolverFailure,
)
from .graphs import WeightedGraph


def green_kernel(g: WeightedGraph, qprime: float, method: str = "exact",
                 degree: int = 30, residual_tol: float = 1e-6) -> np.ndarray:
    """Full stochastic kernel q'(q'Id - L)^{-1}.

    ``exact`` solves the linear system densely.  ``chebyshev`` evaluates a
    degree-``degree`` polynomial approximation of x -> q'/(q' + x) on
    [0, 2 alpha] at -L; its row sums equal the polynomial at 0, and
    max |row sum - 1| above ``residual_tol`` raises DegreeTooLow.
    """
    if qprime <= 0:
        raise NonPositiveParameter("qprime must be positive")
    if method == "exact":
        A = qprime * np.eye(g.n) - g.laplacian
        try:
            K = scipy.linalg.solve(A, qprime * np.eye(g.n))
        except scipy.linalg.LinAlgError as exc:
            raise SolverFailure(str(exc)) from exc
        if not np.all(np.isfinite(K)):
            raise SolverFailure("kernel solve produced non-finite entries")
        return K
    if method == "chebyshev":
        return _chebyshev_kernel(g, qprime, degree, residual_tol)
    raise ValueError(f"unknown kernel method: {method}")


def _chebyshev_kernel(g: WeightedGraph, qprime: float, degree: int,
                      residual_tol: float) -> np.ndarray:
    # Interpolate h(x) = q'/(q'+x) on [0, 2 alpha] in the Chebyshev basis,
    # then evaluate at -L by the three-term matrix recurrence.
    a = g.alpha
    coeffs = np.polynomial.chebyshev.chebinterpolate(
        lambda t: qprime / (qprime + a * (t + 1.0)), degree
    )
    M = (-g.laplacian) / a - np.eye(g.n)  # spectrum inside [-1, 1]
    T_prev = np.eye(g.n)
    T_cur = M.copy()
    K = coeffs[0] * T_prev + (coeffs[1] * T_cur if degree >= 1 else 0.0)
    for k in range(2, degree + 1):
        T_next = 2.0 * M @ T_cur - T_prev
        K += coeffs[k] * T_next
        T_prev, T_cur = T_cur, T_next
    residual = float(np.abs(K.sum(axis=1) - 1.0).max())
    if residual > residual_tol:
        raise DegreeTooLow(
            f"chebyshev row-sum residual {residual:.3e} above {residual_tol:.3e}"
        )
    return K


@dataclass(frozen=True)
class AnalysisResult:
    """Approximation on the kept set and detail on the dropped set."""

    fbar: np.ndarray
    fbreve: np.ndarray


@dataclass(frozen=True)
class FilterBank:
    """Kernel rows plus reconstruction operators for one level."""

    qprime: float
    kernel: np.ndarray
    Rbar: np.ndarray
    Rbreve: np.ndarray
    level: CoarseLevel

    @property
    def kept(self) -> np.ndarray:
        return self.level.kept

    @property
    def dropped(self) -> np.ndarray:
        return self.level.dropped


def build_reconstructors(g: WeightedGraph, level: CoarseLevel, qprime: float,
                         method: str = "exact", degree: int = 30) -> FilterBank:
    """Assemble the kernel and the two block reconstruction operators.

    Rows are ordered by original vertex id.  On kept rows the
    approximation operator is Id - Lbar/q' and the detail operator is
    L_kd (-L_dd)^{-1}; on dropped rows they are the hitting distribution
    (-L_dd)^{-1} L_dk and -Id - q'(-L_dd)^{-1}.
    """
    K = green_kernel(g, qprime, method=method, degree=degree)
    if K.min() < -1e-10 or np.abs(K.sum(axis=1) - 1.0).max() > 1e-8:
        raise SolverFailure("kernel is not stochastic within tolerance")
    kept, dropped = level.kept, level.dropped
    L = g.laplacian
    green = level.green_dropped
    nk, nd = kept.size, dropped.size

    Rbar = np.zeros((g.n, nk))
    Rbar[kept, :] = np.eye(nk) - level.Lbar / qprime
    Rbar[dropped, :] = green @ L[np.ix_(dropped, kept)]

    Rbreve = np.zeros((g.n, nd))
    Rbreve[kept, :] = L[np.ix_(kept, dropped)] @ green
    Rbreve[dropped, :] = -np.eye(nd) - qprime * green

    return FilterBank(qprime=float(qprime), kernel=K, Rbar=Rbar,
                      Rbreve=Rbreve, level=level)


def analyze(bank: FilterBank, f) -> AnalysisResult:
    """Split a signal into approximation and detail coefficients."""
    f = np.asarray(f, dtype=float)
    if f.shape != (bank.kernel.shape[0],):
        raise DimensionMismatch("signal length does not match the kernel")
    Kf = bank.kernel @ f
    return AnalysisResult(fbar=Kf[bank.kept], fbreve=Kf[bank.dropped] - f[bank.dropped])


def reconstruct(bank: FilterBank, result: AnalysisResult) -> np.ndarray:
    """Exact inverse of ``analyze``: Rbar fbar + Rbreve fbreve."""
    if result.fbar.shape != (bank.Rbar.shape[1],) or \
            result.fbreve.shape != (bank.Rbreve.shape[1],):
        raise DimensionMismatch("coefficient shapes do not match the bank")
    return bank.Rbar @ result.fbar + bank.Rbreve @ result.fbreve


def wavelet_functions(bank: FilterBank, g: WeightedGraph):
    """Scaling and wavelet families as densities against mu.

    Row x of the first output is the scaling function of kept vertex x;
    row x of the second is the wavelet of dropped vertex x.  The stacked
    family is checked to be a basis via an LU factorization.
    """
    scaling = bank.kernel[bank.kept, :] / g.mu[None, :]
    shifted = bank.kernel[bank.dropped, :].copy()
    shifted[np.arange(bank.dropped.size), bank.dropped] -= 1.0
    wavelets = shifted / g.mu[None, :]

    M = bank.kernel.copy()
    M[bank.dropped, bank.dropped] -= 1.0
    sign, logdet = np.linalg.slogdet(M)
    if sign == 0 or not np.isfinite(logdet):
        raise SolverFailure("filter family is numerically singular")
    return scaling, wavelets


def intertwining_error(bank: FilterBank, g: WeightedGraph,
                       level: CoarseLevel):
    """Residual E = Lbar Lambda - Lambda L and its max row abs sum.

    Lambda is the kernel restricted to kept rows.  The closed form
    L_kd (-L_dd)^{-1} (L K)_dropped-rows is evaluated as a cross-check.
    """
    rows = bank.kernel[level.kept, :]
    E = level.Lbar @ rows - rows @ g.laplacian
    LK = g.laplacian @ bank.kernel
    E_alt = g.laplacian[np.ix_(level.kept, level.dropped)] @ (
        level.green_dropped @ LK[level.dropped, :]
    )
    scale = max(1.0, float(np.abs(E).max()))
    if np.abs(E - E_alt).max() > 1e-9 * scale:
        raise SolverFailure("intertwining error cross-check failed")
    norm_inf = float(np.abs(E).sum(axis=1).max()) if E.size else 0.0
    return E, norm_inf


# ---------------------------------------------------------------------------
# Weighted p-norms and operator norms between weighted spaces.
# ---------------------------------------------------------------------------

def lp_norm(values, weights, p) -> float:
    """Norm of a vector in l_p with the given (not necessarily
    normalized) weights; p may be 1, 2 or inf."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    if p == np.inf:
        return float(np.abs(values).max())
    return float((weights @ np.abs(values) ** p) ** (1.0 / p))


def operator_norm(M, mu_out, mu_in, p, tol: float = 1e-10,
                  max_iter: int = 10000) -> float:
    """Operator norm between weighted l_p spaces.

    Exact row/column formulas for p = inf and p = 1; power iteration on
    the similarity-transformed matrix for p = 2 (the estimate increases
    to the true norm).
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    if p == np.inf:
        return float(np.abs(M).sum(axis=1).max())
    if p == 1:
        return float((np.asarray(mu_out) @ np.abs(M) / np.asarray(mu_in)).max())
    if p != 2:
        raise ValueError("only p in {1, 2, inf} is supported")
    A = (np.sqrt(mu_out)[:, None] * M) / np.sqrt(mu_in)[None, :]
    B = A.T @ A
    rng = np.random.default_rng(0)
    v = np.ones(B.shape[0]) + 1e-3 * rng.standard_normal(B.shape[0])
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(max_iter):
        w = B @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(nw - sigma2) <= tol * max(nw, 1e-300):
            sigma2 = nw
            break
        sigma2 = nw
    return float(np.sqrt(sigma2))

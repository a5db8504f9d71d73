"""Dense brute-force ground truth for desk-scale problems.

Nothing here is fast or clever.  The generalized problem (A, B) is reduced
to standard form with a Cholesky factor of B, the secular equation is solved
by plain bisection in the eigenbasis, and the hard case is assembled from the
pseudo-inverse solution plus a null-space component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dense import hessenberg_eig
from .sparse import BOperator, PairOperator, TrsProblem

HARD_CASE_REL = 1e-12


@dataclass
class DenseKktSolution:
    s_opt: np.ndarray
    lambda_opt: float
    case_tag: str  # "Interior", "Boundary" or "HardCase"
    alpha_n: float
    eta: float = 0.0
    u_n: np.ndarray | None = None


def generalized_eigh(a, b):
    """Eigenvalues (ascending) and B-orthonormal eigenvectors of (A, B)."""
    return scipy.linalg.eigh(a, b)


def _bisect(f, lo, hi):
    """Root of a decreasing f on (lo, hi) with f(lo+) > 0 > f(hi), to full precision."""
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def oracle_solve_trs(p: TrsProblem) -> DenseKktSolution:
    if p.n > 200:
        raise ValueError("oracle is limited to n <= 200")
    a = p.a.toarray()
    b = p.b.toarray()
    alpha, u = generalized_eigh(a, b)  # u^T B u = I
    gamma = u.T @ p.g  # s = u c  gives  q = gamma^T c + 1/2 sum alpha c^2
    delta = p.delta
    gnorm = float(np.linalg.norm(gamma))
    alpha_n = float(alpha[0])
    scale = max(abs(alpha[0]), abs(alpha[-1]), 1.0)
    lead = np.abs(alpha - alpha_n) <= 1e-10 * scale

    def c_of(lam, mask=None):
        den = alpha + lam
        c = np.zeros_like(gamma)
        idx = np.ones_like(gamma, dtype=bool) if mask is None else mask
        c[idx] = -gamma[idx] / den[idx]
        return c

    if alpha_n > 0:
        c0 = c_of(0.0)
        if np.linalg.norm(c0) <= delta:
            return DenseKktSolution(u @ c0, 0.0, "Interior", alpha_n)

    lam_lo = max(0.0, -alpha_n)
    proj = float(np.linalg.norm(gamma[lead]))
    if proj <= HARD_CASE_REL * gnorm:
        rest = ~lead
        c_rest = c_of(lam_lo, rest)
        nr = float(np.linalg.norm(c_rest))
        if nr < delta:
            eta = math.sqrt(delta * delta - nr * nr)
            un = u[:, int(np.argmax(lead))]
            c = c_rest.copy()
            c[int(np.argmax(lead))] = eta
            return DenseKktSolution(u @ c, lam_lo, "HardCase", alpha_n, eta, un)

    def phi(lam):
        return float(np.linalg.norm(c_of(lam))) - delta

    hi = max(lam_lo, 0.0) + gnorm / delta + 1.0
    while phi(hi) > 0:
        hi = 2 * hi + 1
    lam = _bisect(phi, lam_lo, hi)
    return DenseKktSolution(u @ c_of(lam), lam, "Boundary", alpha_n)


def kkt_violations(p: TrsProblem, lam, s):
    """Scale-relative violations of the four optimality conditions.

    Returns a dict with ``feasibility`` (||s||_B / delta - 1, positive means
    outside), ``stationarity`` (B^-1 residual over ||g||_{B^-1}),
    ``complementarity`` (|lam (delta - ||s||_B)| / (delta (1 + lam))) and
    ``psd`` (leftmost eigenvalue of A + lam B over its 1-norm, negative
    means indefinite).
    """
    a = p.a.toarray()
    b = p.b.toarray()
    sb = p.b.norm(s)
    k = a + lam * b
    lmin = float(scipy.linalg.eigvalsh(k)[0])
    return {
        "lambda": lam,
        "feasibility": sb / p.delta - 1.0,
        "stationarity": p.rel_res(lam, s),
        "complementarity": abs(lam * (p.delta - sb)) / (p.delta * (1.0 + lam)),
        "psd": lmin / max(np.abs(k).sum(axis=0).max(), 1e-300),
    }


def oracle_rightmost_eigpair(p: TrsProblem):
    """Rightmost eigenvalue of (M, Btilde) and its Btilde-normalized eigenvector."""
    if p.n > 100:
        raise ValueError("oracle is limited to n <= 100")
    op = PairOperator(p)
    m = op.dense_M()
    bt = op.dense_Btilde()
    chol = scipy.linalg.cholesky(bt, lower=True)
    # C = L^-1 M L^-T is similar to Btilde^-1 M
    c = scipy.linalg.solve_triangular(chol, m, lower=True)
    c = scipy.linalg.solve_triangular(chol, c.T, lower=True).T
    hess, qh = scipy.linalg.hessenberg(c, calc_q=True)
    mu, z = hessenberg_eig(hess)
    w = qh @ z[:, 0]
    y = scipy.linalg.solve_triangular(chol.T, w, lower=False)
    if mu[0].imag == 0:
        y = y.real
    y = y / math.sqrt(abs(np.vdot(y, bt @ y)))
    return mu[0], y


def oracle_b_sqrt(b: BOperator):
    """Dense symmetric B^{1/2} and B^{-1/2} by spectral decomposition."""
    if b.n > 100:
        raise ValueError("oracle is limited to n <= 100")
    w, v = np.linalg.eigh(b.toarray())
    root = (v * np.sqrt(w)) @ v.T
    inv_root = (v / np.sqrt(w)) @ v.T
    return root, inv_root

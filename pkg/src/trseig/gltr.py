"""Generalized Lanczos trust-region method.

Phase one runs CG (preconditioned by B, which makes ||s_k||_B increase
monotonically) and stops at the first sign that the constraint is active.
Phase two restarts a B-orthonormal Lanczos recurrence from B^{-1} g and solves
the tridiagonal subproblem with a safeguarded Newton iteration on the secular
equation at every step.  The residual estimate beta_{k+1} |h_last| is exactly
||(A + lam B) s + g||_{B^-1}, so the iterate is only assembled at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dense import SymTridiag, tridiag_ldlt, tridiag_leftmost_eig
from .result import Status, TrsSolution
from .sparse import MvCounter, PairOperator, TrsProblem, apply_A

EPS = np.finfo(float).eps


@dataclass
class CgOutcome:
    kind: str  # "interior", "boundary" or "max_iter"
    s: np.ndarray
    iterations: int
    mv_count: int
    res_bnorm: float
    reason: str = ""


def interior_check(p: TrsProblem, tol, max_iter=None, *, counter=None, scale=None, s0=None) -> CgOutcome:
    """CG on A s = -g, watching for negative curvature and the boundary.

    Converged when ``||A s + g||_{B^-1} <= tol * scale``; ``scale`` defaults to
    ||M||_1 so that interior and boundary exits share one absolute level.
    ``s0`` warm-starts the iteration (one extra MV for its residual).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = p.n
    if scale is None:
        scale = PairOperator(p).one_norm_M()
    if counter is None:
        counter = MvCounter()
    start = counter.count
    if s0 is None:
        s = np.zeros(p.n)
        r = p.g.copy()
    else:
        s = np.array(s0, dtype=np.float64)
        r = apply_A(p.a, s, counter) + p.g
    z = p.b.solve(r)
    gamma = float(r @ z)
    d = -z
    target = tol * scale
    if s0 is not None and math.sqrt(max(gamma, 0.0)) <= target:
        return CgOutcome("interior", s, 0, counter.count - start, math.sqrt(max(gamma, 0.0)))
    for it in range(1, max_iter + 1):
        ad = apply_A(p.a, d, counter)
        curv = float(d @ ad)
        if curv <= 0:
            return CgOutcome("boundary", s, it, counter.count - start, math.sqrt(gamma), "negative curvature")
        alpha = gamma / curv
        s_new = s + alpha * d
        if p.b.norm(s_new) >= p.delta:
            return CgOutcome("boundary", s, it, counter.count - start, math.sqrt(gamma), "boundary crossed")
        s = s_new
        r = r + alpha * ad
        z = p.b.solve(r)
        gamma_new = float(r @ z)
        if math.sqrt(max(gamma_new, 0.0)) <= target:
            return CgOutcome("interior", s, it, counter.count - start, math.sqrt(max(gamma_new, 0.0)))
        d = -z + (gamma_new / gamma) * d
        gamma = gamma_new
    return CgOutcome("max_iter", s, max_iter, counter.count - start, math.sqrt(max(gamma, 0.0)))


@dataclass
class LanczosState:
    """B-orthonormal Lanczos basis with the tridiagonal T_k.

    ``basis[i]`` is p_i and ``bbasis[i]`` is B p_i.  After k+1 steps ``diag``
    holds delta_0..delta_k, ``offdiag`` beta_1..beta_k, and ``beta_next`` /
    ``basis[-1]`` are beta_{k+1} / p_{k+1}.
    """

    beta0: float
    basis: list = field(default_factory=list)
    bbasis: list = field(default_factory=list)
    diag: list = field(default_factory=list)
    offdiag: list = field(default_factory=list)
    beta_next: float = 0.0
    reorth: bool = False
    breakdown: bool = False

    @classmethod
    def start(cls, p: TrsProblem, reorth=False):
        p0 = p.b.solve(p.g)
        beta0 = math.sqrt(max(float(p.g @ p0), 0.0))
        return cls(beta0=beta0, basis=[p0 / beta0], bbasis=[p.g / beta0], reorth=reorth)

    @property
    def steps(self):
        return len(self.diag)

    @property
    def t(self):
        return SymTridiag(np.array(self.diag), np.array(self.offdiag[: len(self.diag) - 1]))

    def basis_matrix(self, k=None):
        k = self.steps if k is None else k
        return np.column_stack(self.basis[:k])


def lanczos_step(state: LanczosState, p: TrsProblem, counter=None, anorm=None):
    """Extend the recurrence by one step; returns True on happy breakdown."""
    if state.breakdown:
        raise RuntimeError("Lanczos recurrence already broke down")
    k = state.steps
    pk = state.basis[k]
    w = apply_A(p.a, pk, counter)
    delta = float(pk @ w)
    w = w - delta * state.bbasis[k]
    if k > 0:
        w -= state.offdiag[k - 1] * state.bbasis[k - 1]
    z = p.b.solve(w)
    if state.reorth:
        pmat = np.column_stack(state.basis[: k + 1])
        umat = np.column_stack(state.bbasis[: k + 1])
        c = umat.T @ z
        z -= pmat @ c
        w -= umat @ c
    beta = math.sqrt(max(float(w @ z), 0.0))
    state.diag.append(delta)
    if anorm is None:
        anorm = p.a.ones_norm
    if beta <= EPS * p.n * max(anorm, 1e-300):
        state.beta_next = 0.0
        state.breakdown = True
        return True
    state.offdiag.append(beta)
    state.beta_next = beta
    state.basis.append(z / beta)
    state.bbasis.append(w / beta)
    return False


@dataclass
class ReducedSolution:
    h: np.ndarray
    lam: float
    boundary: bool
    iterations: int = 0
    theta: float | None = None  # leftmost eigenvalue of T when it was needed


class BracketCollapse(RuntimeError):
    pass


def solve_reduced_trs(t: SymTridiag, beta0, delta, lam0=None, theta_upper=None, tol=1e-12):
    """min beta0 e1^T h + 1/2 h^T T h  subject to ||h|| <= delta.

    Safeguarded Newton on 1/||h(lam)|| - 1/delta.  ``lam0`` warm-starts the
    multiplier; ``theta_upper`` is a known upper bound on the leftmost
    eigenvalue of T.
    """
    if not beta0 > 0 or not delta > 0:
        raise ValueError("beta0 and delta must be positive")
    k = t.size
    rhs = np.zeros(k)
    rhs[0] = -beta0
    f = tridiag_ldlt(t, 0.0)
    if f.positive_definite:
        h = f.solve(rhs)
        if np.linalg.norm(h) <= delta:
            return ReducedSolution(h, 0.0, False, 0)
    theta = tridiag_leftmost_eig(t, upper=theta_upper)
    tnorm = t.one_norm()
    lo = max(0.0, -theta)
    hi = beta0 / delta + tnorm + max(-theta, 0.0) * EPS + EPS
    hi = max(hi, lo * (1 + 4 * EPS) + EPS)
    if f.positive_definite and lo == 0.0:
        lam = 0.0
    elif lam0 is not None and lo < lam0 < hi:
        lam = lam0
    else:
        lam = lo + max(1e-3 * (hi - lo), 1e-12 * (1 + lo))
    inside = None  # last iterate with ||h|| <= delta
    it = 0
    for it in range(1, 201):
        f = tridiag_ldlt(t, lam)
        if not f.positive_definite:
            lo = max(lo, lam)
            lam = max(math.sqrt(lo * hi), lo + 0.01 * (hi - lo))
            continue
        h = f.solve(rhs)
        nh = float(np.linalg.norm(h))
        if abs(nh - delta) <= tol * delta:
            return ReducedSolution(h, lam, True, it, theta)
        if nh > delta:
            lo = max(lo, lam)
        else:
            hi = min(hi, lam)
            inside = (h, lam)
        if hi - lo <= 4 * EPS * max(1.0, hi):
            break
        w = f.forward(h)
        lam_new = lam + (nh / float(w @ w)) * nh * (nh - delta) / delta
        if not lo < lam_new < hi:
            lam_new = max(math.sqrt(lo * hi), lo + 0.01 * (hi - lo))
        lam = lam_new
    if inside is None:
        f = tridiag_ldlt(t, hi)
        if not f.positive_definite:
            raise BracketCollapse(f"no positive definite shift found in [{lo}, {hi}]")
        inside = (f.solve(rhs), hi)
    # (nearly) hard reduced problem: ||h|| cannot be resolved in floating point,
    # so step from the inside iterate along the leftmost eigenvector to the boundary
    h, lam = inside
    nh = float(np.linalg.norm(h))
    _, vec = scipy.linalg.eigh_tridiagonal(t.diag, t.offdiag, select="i", select_range=(0, 0))
    u = vec[:, 0]
    hu = float(h @ u)
    root = math.sqrt(hu * hu + max(delta * delta - nh * nh, 0.0))
    tau = min(-hu + root, -hu - root, key=abs)
    return ReducedSolution(h + tau * u, lam, True, it, theta)


def gltr_residual_estimate(state: LanczosState, r: ReducedSolution):
    return float(state.beta_next * abs(r.h[-1]))


def assemble_iterate(state: LanczosState, r: ReducedSolution):
    k = r.h.shape[0]
    return state.basis_matrix(k) @ r.h


def gltr_solve(p: TrsProblem, tol1_rel, max_iter=None, reorth=False, callback=None) -> TrsSolution:
    """Solve the trust-region subproblem by GLTR.

    Stops once ``beta_{k+1} |h_last| / ||M||_1 <= tol1_rel``.  ``callback``
    (if given) is called as ``callback(state, reduced, estimate)`` after every
    Lanczos step.
    """
    if not tol1_rel > 0:
        raise ValueError("tol1_rel must be positive")
    if max_iter is None:
        max_iter = p.n
    counter = MvCounter()
    norm_m = PairOperator(p).one_norm_M()
    cg = interior_check(p, tol1_rel, max_iter, counter=counter, scale=norm_m)
    if cg.kind != "boundary":
        status = Status.INTERIOR if cg.kind == "interior" else Status.MAX_ITERATIONS
        return _finish(p, cg.s, 0.0, counter.count, cg.iterations, status, cg.mv_count)
    prefix = counter.count
    state = LanczosState.start(p, reorth=reorth)
    reduced = None
    theta_prev = None
    status = Status.MAX_ITERATIONS
    for _ in range(max_iter):
        broke = lanczos_step(state, p, counter)
        t = state.t
        lam0 = reduced.lam if reduced is not None else None
        reduced = solve_reduced_trs(t, state.beta0, p.delta, lam0=lam0, theta_upper=theta_prev)
        theta_prev = reduced.theta
        est = gltr_residual_estimate(state, reduced)
        if callback is not None:
            callback(state, reduced, est)
        if est <= tol1_rel * norm_m or broke:
            status = Status.BOUNDARY if reduced.boundary else Status.INTERIOR
            break
    s = assemble_iterate(state, reduced)
    return _finish(p, s, reduced.lam, counter.count, state.steps, status, prefix)


def _finish(p, s, lam, mvs, iters, status, prefix):
    res = p.kkt_residual(lam, s)
    return TrsSolution(
        s=s,
        lam=float(lam),
        res_bnorm=res,
        rel_res=res / p.b.inv_norm(p.g),
        mv_count=mvs,
        iterations=iters,
        status=status,
        prefix_mvs=prefix,
    )

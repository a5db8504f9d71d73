"""Eigenvalue-based trust-region solvers.

The boundary solution is read off the rightmost eigenpair of the pencil
(M, Btilde).  The eigenpair is computed by an Arnoldi process in the
Btilde-inner product,

    Btilde^-1 M V_k = V_k H_k + h_{k+1,k} v_{k+1} e_k^T,   V^T Btilde V = I,

restarted implicitly either with exact shifts (unwanted Ritz values, IRA) or
with refined shifts (eigenvalues of H compressed onto the orthogonal
complement of the refined Ritz coordinate vector, IRRA).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .dense import hessenberg_eig, shifted_qr_sweep, smallest_singular_triplet
from .gltr import interior_check
from .result import HardCaseDetected, Status, TrsSolution
from .sparse import MvCounter, PairOperator, TrsProblem

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps


@dataclass
class StoppingConfig:
    tol: float = 1e-12
    tau: float = math.sqrt(EPS)
    m: int = 30
    max_restarts: int = 600
    wanted: int = 1
    buffer: int = 3  # extra Ritz values kept at each restart; 0 gives plain p = m - k
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.m < 5:
            raise ValueError("subspace dimension m must be at least 5")
        if self.max_restarts < 0 or self.wanted < 1 or self.buffer < 0:
            raise ValueError("invalid restart configuration")

    @property
    def keep(self):
        return self.wanted + self.buffer


@dataclass
class ArnoldiState:
    """Growing Arnoldi factorization of Btilde^-1 M.

    Columns ``V[:, :k]`` are the basis, ``V[:, k]`` the next (normalized)
    vector with ``H[k, k-1]`` its coefficient, and ``BV`` mirrors Btilde V.
    ``exhausted`` is set when the basis spans the whole space.
    """

    op: PairOperator
    V: np.ndarray
    BV: np.ndarray
    H: np.ndarray
    k: int = 0
    exhausted: bool = False
    steps: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    @classmethod
    def start(cls, op: PairOperator, cap, seed=0, v1=None):
        dim = 2 * op.n
        cap = min(cap, dim)
        rng = np.random.default_rng(seed)
        V = np.zeros((dim, cap + 1))
        BV = np.zeros((dim, cap + 1))
        H = np.zeros((cap + 1, cap))
        state = cls(op=op, V=V, BV=BV, H=H, rng=rng)
        v = rng.standard_normal(dim) if v1 is None else np.asarray(v1, dtype=np.float64)
        state._set_next(v)
        return state

    @property
    def cap(self):
        return self.H.shape[1]

    @property
    def norm_m(self):
        return self.op.one_norm_M()

    @property
    def h_next(self):
        return float(self.H[self.k, self.k - 1]) if self.k > 0 else 0.0

    def _set_next(self, v):
        bv = self.op.apply_Btilde(v)
        nrm = math.sqrt(max(float(v @ bv), 0.0))
        self.V[:, self.k] = v / nrm
        self.BV[:, self.k] = bv / nrm

    def _orthogonalize(self, w, k, coeffs=None):
        """Two Gram-Schmidt passes in the Btilde inner product against V[:, :k]."""
        for i in range(k):
            c = float(self.BV[:, i] @ w)
            w -= c * self.V[:, i]
            if coeffs is not None:
                coeffs[i] += c
        c = self.BV[:, :k].T @ w
        w -= self.V[:, :k] @ c
        if coeffs is not None:
            coeffs[:k] += c
        return w

    def fresh_vector(self):
        """Random next vector Btilde-orthogonal to the current basis."""
        w = self.rng.standard_normal(self.V.shape[0])
        w = self._orthogonalize(w, self.k)
        w = self._orthogonalize(w, self.k)
        self._set_next(w)

    def basis(self):
        return self.V[:, : self.k]

    def relation_residual(self):
        """Column-wise max of ||M V - Btilde V H - h Btilde v e_k^T||; costs MVs on a side counter."""
        side = PairOperator(self.op.problem)
        side._norm1 = self.op._norm1
        k = self.k
        worst = 0.0
        for j in range(k):
            mv = side.apply_M(self.V[:, j])
            rhs = self.BV[:, : k + 1] @ self.H[: k + 1, j]
            worst = max(worst, float(np.linalg.norm(mv - rhs)))
        return worst


def arnoldi_step(state: ArnoldiState):
    """Add one column to the factorization; returns True on breakdown.

    After a breakdown the next vector is a fresh random one (with a zero
    coupling coefficient) unless the basis already spans the whole space.
    """
    if state.exhausted or state.k >= state.cap:
        raise RuntimeError("no room to extend the Arnoldi factorization")
    j = state.k
    mv = state.op.apply_M(state.V[:, j])
    w = state.op.solve_Btilde(mv)
    h = np.zeros(j + 1)
    w = state._orthogonalize(w, j + 1, h)
    bw = state.op.apply_Btilde(w)
    beta = math.sqrt(max(float(w @ bw), 0.0))
    state.H[: j + 1, j] = h
    state.k = j + 1
    state.steps += 1
    dim = state.V.shape[0]
    if beta <= EPS * dim * state.norm_m:
        state.H[j + 1, j] = 0.0
        if state.k >= dim:
            state.exhausted = True
        else:
            state.fresh_vector()
        return True
    state.H[j + 1, j] = beta
    state.V[:, j + 1] = w / beta
    state.BV[:, j + 1] = bw / beta
    if state.k >= dim:
        state.exhausted = True
    return False


@dataclass
class RitzPair:
    mu: complex
    z: np.ndarray
    residual_estimate: float


@dataclass
class RefinedPair:
    mu: complex
    z_tilde: np.ndarray
    residual_estimate: float


def extract_ritz(state: ArnoldiState):
    k = state.k
    if k < 1:
        raise ValueError("empty factorization")
    mu, z = hessenberg_eig(state.H[:k, :k])
    hn = abs(state.h_next)
    return [RitzPair(mu[i], z[:, i], hn * abs(z[k - 1, i])) for i in range(k)]


def extract_refined(state: ArnoldiState, mu):
    k = state.k
    if k < 1:
        raise ValueError("empty factorization")
    sigma, z, _ = smallest_singular_triplet(state.H[: k + 1, :k], mu)
    return RefinedPair(complex(mu), z, sigma)


def _values(pairs):
    return [complex(getattr(p, "mu", p)) for p in pairs]


def select_shifts_exact(pairs, wanted, shift_count):
    """The ``shift_count`` leftmost Ritz values, never splitting a conjugate pair.

    ``pairs`` must be sorted by descending real part (conjugates adjacent).
    """
    vals = _values(pairs)
    if wanted + shift_count > len(vals):
        raise ValueError("wanted + shift_count exceeds the number of Ritz values")
    if shift_count <= 0:
        return []
    cut = len(vals) - shift_count
    if cut > 0 and vals[cut].imag != 0 and vals[cut] == vals[cut - 1].conjugate():
        cut += 1
    return vals[cut:]


class RankDeficientRefined(RuntimeError):
    pass


def _sorted_eigvals(c):
    w = scipy.linalg.eigvals(c) if c.size else np.zeros(0, dtype=complex)
    w = np.asarray(w, dtype=np.complex128)
    return sorted(w, key=lambda x: (-x.real, -x.imag))


def select_shifts_refined(state: ArnoldiState, refined, shift_count=None):
    """Eigenvalues of H compressed onto the complement of the refined vectors.

    Complex refined vectors contribute their real and imaginary parts, so the
    compression stays real.  ``shift_count`` (default: all) picks the leftmost
    of those eigenvalues without splitting conjugate pairs.
    """
    k = state.k
    cols = []
    for r in refined:
        z = np.asarray(r.z_tilde)
        if np.iscomplexobj(z) and np.any(z.imag != 0):
            cols.extend([z.real, z.imag])
        else:
            cols.append(np.real(z))
    if not cols:
        zmat = np.zeros((k, 0))
    else:
        zmat = np.column_stack(cols)
    q, r = np.linalg.qr(zmat, mode="complete")
    nz = zmat.shape[1]
    if nz and np.min(np.abs(np.diag(r[:nz, :nz]))) <= 1e-10 * max(np.abs(r).max(), 1.0):
        raise RankDeficientRefined("refined coordinate vectors are linearly dependent")
    u_hat = q[:, nz:]
    h = state.H[:k, :k]
    vals = _sorted_eigvals(u_hat.T @ h @ u_hat)
    if shift_count is None:
        return vals
    shift_count = min(shift_count, len(vals))
    return select_shifts_exact(vals, len(vals) - shift_count, shift_count)


def implicit_restart(state: ArnoldiState, shifts):
    """Contract the factorization with implicitly shifted QR sweeps."""
    K = state.k
    shifts = list(shifts)
    kk = K - len(shifts)
    if kk < 1:
        raise ValueError("too many shifts for the current factorization")
    hq, q = shifted_qr_sweep(state.H[:K, :K], np.eye(K), shifts)
    beta_K = state.H[K, K - 1]
    vK = state.V[:, :K]
    r = hq[kk, kk - 1] * (vK @ q[:, kk]) if kk < K else np.zeros(vK.shape[0])
    if beta_K != 0.0 and not state.exhausted:
        r = r + (q[K - 1, kk - 1] * beta_K) * state.V[:, K]
    vnew = vK @ q[:, :kk]
    op = state.op
    state.V[:, :] = 0.0
    state.BV[:, :] = 0.0
    state.V[:, :kk] = vnew
    for j in range(kk):
        state.BV[:, j] = op.apply_Btilde(vnew[:, j])
    state.H[:, :] = 0.0
    state.H[:kk, :kk] = hq[:kk, :kk]
    state.k = kk
    state.exhausted = False
    br = op.apply_Btilde(r)
    beta = math.sqrt(max(float(r @ br), 0.0))
    if beta <= EPS * state.V.shape[0] * state.norm_m:
        state.fresh_vector()
    else:
        state.H[kk, kk - 1] = beta
        state.V[:, kk] = r / beta
        state.BV[:, kk] = br / beta
    return state


def recover_solution(y, p: TrsProblem, tau=math.sqrt(EPS)):
    """s = -sign(g^T y2) delta y1 / ||y1||_B from a pencil eigenvector.

    ``y`` is Btilde-normalized first, so any nonzero scaling of ``y`` gives
    the same answer.  When g^T y2 is exactly zero the sign of g^T y1 is used
    so that s is a non-ascent direction.
    """
    y = np.real(np.asarray(y, dtype=np.complex128)) if np.iscomplexobj(y) else np.asarray(y, dtype=np.float64)
    n = p.n
    y1, y2 = y[:n], y[n:]
    ny = math.sqrt(p.b.norm(y1) ** 2 + p.b.norm(y2) ** 2)
    if ny == 0:
        raise ValueError("zero eigenvector")
    y1 = y1 / ny
    y2 = y2 / ny
    nb = p.b.norm(y1)
    if nb <= tau:
        raise HardCaseDetected(nb, tau)
    gy2 = float(p.g @ y2)
    if gy2 != 0.0:
        sgn = math.copysign(1.0, gy2)
    else:
        gy1 = float(p.g @ y1)
        sgn = math.copysign(1.0, gy1) if gy1 != 0 else 1.0
    return -sgn * p.delta * y1 / nb


def translate_tolerance(tol, delta, y1_bnorm, tau=math.sqrt(EPS)):
    """GLTR tolerance matching an eigen-residual tolerance: delta * tol / ||y1||_B."""
    if y1_bnorm <= tau:
        raise HardCaseDetected(y1_bnorm, tau)
    return delta * tol / y1_bnorm


@dataclass(frozen=True)
class EigReport:
    variant: str
    mu: complex | None
    y: np.ndarray | None
    y1_bnorm: float
    translated_tol1: float | None
    residual_estimate: float
    eig_residual: float  # ||(M - mu Btilde) y||_{Btilde^-1}, computed directly
    restarts: int
    arnoldi_steps: int
    norm_m: float


CLUSTER_RADIUS = 1.0  # in units of tau * ||M||_1


def cluster_min_y1(state: ArnoldiState, ritz, tol, tau):
    """Smallest ||y1||_B over the real span of the converged rightmost cluster.

    In the hard case the target eigenvalue is defective, and in floating
    point it splits by about sqrt(eps) into two real values or a complex
    pair; each computed vector then carries a y1 block of size O(sqrt(eps)).
    The span of the cluster still contains (0; u), so minimizing over it
    gives a stable test.  Returns ``(y1_bnorm, y)`` or ``None`` when the
    rightmost value is isolated and real, or the cluster is not converged.
    """
    norm_m = state.norm_m
    top = ritz[0]
    radius = CLUSTER_RADIUS * tau * norm_m
    members = [r for r in ritz if abs(r.mu - top.mu) <= radius]
    if len(members) < 2 and top.mu.imag == 0.0:
        return None
    if max(r.residual_estimate for r in members) > tol * norm_m:
        return None
    vk = state.basis()
    cols = []
    for r in members:
        x = vk @ r.z
        cols.append(np.real(x))
        if np.iscomplexobj(x) and np.any(np.imag(x) != 0):
            cols.append(np.imag(x))
    y = np.column_stack(cols)
    n = state.op.n
    op = state.op
    by = np.column_stack([op.apply_Btilde(c) for c in y.T])
    gram = y.T @ by
    b1 = np.column_stack([op.problem.b.apply(c) for c in y[:n].T])
    top_gram = y[:n].T @ b1
    # drop directions the pair spans only up to round-off
    w, v = np.linalg.eigh(gram)
    keep = w > 1e-12 * w.max()
    basis = v[:, keep] / np.sqrt(w[keep])
    vals, vecs = np.linalg.eigh(basis.T @ top_gram @ basis)
    c = basis @ vecs[:, 0]
    yy = y @ c
    return math.sqrt(max(float(vals[0]), 0.0)), yy


def pencil_residual(p: TrsProblem, mu, y):
    """||(M - mu Btilde) y||_{Btilde^-1}; uses an uncounted operator."""
    op = PairOperator(p)
    r = op.apply_M(y) - mu * op.apply_Btilde(y)
    return math.sqrt(max(float(r @ op.solve_Btilde(r)), 0.0))


CycleCallback = Callable[[ArnoldiState, list, "RefinedPair | None", int], None]


def eig_trs_solve(p: TrsProblem, cfg: StoppingConfig | None = None, variant="IRA", callback=None):
    """Solve the trust-region subproblem through the rightmost pencil eigenpair.

    ``variant`` is ``"IRA"`` (Ritz extraction, exact shifts) or ``"IRRA"``
    (refined extraction, refined shifts).  ``callback(state, ritz, refined,
    restarts)`` runs once per extraction.  Returns ``(TrsSolution, EigReport)``.
    """
    cfg = cfg or StoppingConfig()
    variant = variant.upper()
    if variant not in ("IRA", "IRRA"):
        raise ValueError(f"unknown variant {variant!r}")
    counter = MvCounter()
    op = PairOperator(p, counter)
    norm_m = op.one_norm_M()

    cg = interior_check(p, cfg.tol, counter=counter, scale=norm_m)
    prefix = counter.count
    if cg.kind == "interior":
        sol = _solution(p, cg.s, 0.0, counter.count, cg.iterations, Status.INTERIOR, prefix)
        return sol, EigReport(variant, None, None, 0.0, None, 0.0, 0.0, 0, 0, norm_m)

    dim = 2 * p.n
    m_eff = min(cfg.m, dim)
    state = ArnoldiState.start(op, m_eff, seed=cfg.seed)
    restarts = 0
    status = Status.MAX_RESTARTS

    hard = None

    def extract():
        nonlocal hard
        ritz = extract_ritz(state)
        top = ritz[0]
        ref = extract_refined(state, top.mu) if variant == "IRRA" else None
        if callback is not None:
            callback(state, ritz, ref, restarts)
        est = ref.residual_estimate if ref is not None else top.residual_estimate
        found = cluster_min_y1(state, ritz, cfg.tol, cfg.tau)
        if found is not None and found[0] <= cfg.tau:
            hard = found
            return ritz, ref, est, Status.HARD_CASE
        if top.mu.imag == 0.0 and est <= cfg.tol * norm_m:
            return ritz, ref, est, Status.BOUNDARY
        return ritz, ref, est, None

    verdict = None
    while verdict is None:
        while state.k < m_eff and not state.exhausted:
            broke = arnoldi_step(state)
            if broke and state.k < m_eff and not state.exhausted:
                ritz, ref, est, verdict = extract()
                if verdict is not None:
                    break
        if verdict is not None:
            break
        ritz, ref, est, verdict = extract()
        if verdict is not None:
            break
        if state.exhausted or restarts >= cfg.max_restarts:
            break
        shift_count = state.k - cfg.keep if cfg.buffer else state.k - cfg.wanted
        shifts = _shifts(state, ritz, ref, shift_count, variant)
        if not shifts and state.k - shift_count - 1 >= cfg.wanted:
            # a conjugate pair straddled a one-shift boundary: shift the whole pair
            shifts = _shifts(state, ritz, ref, shift_count + 1, variant)
        if not shifts:
            break
        implicit_restart(state, shifts)
        restarts += 1
    status = verdict or Status.MAX_RESTARTS

    mu = ritz[0].mu
    mu_val = float(mu.real)
    if cg.kind == "max_iter" and status is Status.BOUNDARY and mu_val < 0:
        # lambda_opt = max(0, mu) = 0: the constraint is inactive, so finish the interior solve
        more = interior_check(p, cfg.tol, counter=counter, scale=norm_m, s0=cg.s)
        done = more.kind == "interior"
        s = more.s if done else cg.s
        sol = _solution(
            p, s, 0.0, counter.count, state.steps, Status.INTERIOR if done else Status.MAX_ITERATIONS, prefix
        )
        return sol, EigReport(variant, mu, None, 0.0, None, est, 0.0, restarts, state.steps, norm_m)
    if hard is not None:
        y1_bnorm, y = hard
    else:
        z = ref.z_tilde if ref is not None else ritz[0].z
        # a complex rightmost value is never accepted; its real part is kept for diagnostics
        y = np.real(state.basis() @ z)
    y = y / math.sqrt(max(float(y @ op.apply_Btilde(y)), 1e-300))
    y1_bnorm = p.b.norm(y[: p.n])
    eig_res = pencil_residual(p, mu_val, y)
    tol1 = None
    if y1_bnorm <= cfg.tau:
        s = np.zeros(p.n)
        if status.converged:
            status = Status.HARD_CASE
    else:
        s = recover_solution(y, p, cfg.tau)
        tol1 = translate_tolerance(cfg.tol, p.delta, y1_bnorm, cfg.tau)
    sol = _solution(p, s, mu_val, counter.count, state.steps, status, prefix)
    rep = EigReport(variant, mu, y, y1_bnorm, tol1, est, eig_res, restarts, state.steps, norm_m)
    return sol, rep


def _shifts(state, ritz, ref, shift_count, variant):
    if variant == "IRRA":
        try:
            return select_shifts_refined(state, [ref], shift_count)
        except RankDeficientRefined:
            log.info("refined shifts unavailable, using exact shifts this cycle")
    return select_shifts_exact(ritz, state.k - shift_count, shift_count)


def _solution(p, s, lam, mvs, iters, status, prefix):
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

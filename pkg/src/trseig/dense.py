"""Dense kernels for the small projected matrices.

Everything here works on matrices of size at most m + 1 (the Krylov
subspace dimension), so clarity wins over blocking.  The implicitly shifted
QR sweep is written out by hand because the restart needs the accumulated
orthogonal factor and must stay in real arithmetic for conjugate shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg


class ConvergenceError(RuntimeError):
    pass


@dataclass
class SymTridiag:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        self.diag = np.asarray(self.diag, dtype=np.float64)
        self.offdiag = np.asarray(self.offdiag, dtype=np.float64)
        if self.offdiag.shape[0] != max(self.diag.shape[0] - 1, 0):
            raise ValueError("offdiag must have len(diag) - 1 entries")

    @property
    def size(self):
        return self.diag.shape[0]

    def one_norm(self):
        a = np.abs(self.diag).copy()
        a[:-1] += np.abs(self.offdiag)
        a[1:] += np.abs(self.offdiag)
        return float(a.max())

    def toarray(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass
class Ldlt:
    """Pivots ``d`` and multipliers ``l`` of T + shift*I = L D L^T.

    ``failed_at`` is the 1-based index of the first non-positive pivot, or
    ``None`` when the shifted matrix is positive definite.  On failure the
    pivots are only valid up to and including ``failed_at``.
    """

    d: np.ndarray
    l: np.ndarray
    failed_at: int | None

    @property
    def positive_definite(self):
        return self.failed_at is None

    def solve(self, rhs):
        """Solve (T + shift I) x = rhs; only valid when positive definite."""
        d, l = self.d, self.l
        n = d.shape[0]
        y = np.array(rhs, dtype=np.float64)
        for i in range(1, n):
            y[i] -= l[i - 1] * y[i - 1]
        y /= d
        for i in range(n - 2, -1, -1):
            y[i] -= l[i] * y[i + 1]
        return y

    def forward(self, rhs):
        """Return w with L D^{1/2} w = rhs, so that ||w||^2 = rhs^T (T+shift I)^{-1} rhs."""
        d, l = self.d, self.l
        y = np.array(rhs, dtype=np.float64)
        for i in range(1, d.shape[0]):
            y[i] -= l[i - 1] * y[i - 1]
        return y / np.sqrt(d)


def tridiag_ldlt(t: SymTridiag, shift=0.0) -> Ldlt:
    diag = t.diag.tolist()
    off = t.offdiag.tolist()
    n = len(diag)
    d = [0.0] * n
    l = [0.0] * max(n - 1, 0)
    piv = diag[0] + shift
    d[0] = piv
    if not piv > 0:
        return Ldlt(np.array(d), np.array(l), 1)
    for i in range(1, n):
        li = off[i - 1] / piv
        l[i - 1] = li
        piv = diag[i] + shift - li * off[i - 1]
        d[i] = piv
        if not piv > 0:
            return Ldlt(np.array(d), np.array(l), i + 1)
    return Ldlt(np.array(d), np.array(l), None)


def _sturm_count(diag, off2, x):
    count = 0
    q = diag[0] - x
    if q < 0:
        count += 1
    for i in range(1, len(diag)):
        if q == 0.0:
            q = _TINY
        q = diag[i] - x - off2[i - 1] / q
        if q < 0:
            count += 1
    return count


_TINY = float(np.finfo(float).tiny)


def sturm_count(t: SymTridiag, x):
    """Number of eigenvalues of T strictly less than x."""
    return _sturm_count(t.diag.tolist(), (t.offdiag**2).tolist(), float(x))


def tridiag_leftmost_eig(t: SymTridiag, tol=None, upper=None):
    """Leftmost eigenvalue by Sturm-sequence bisection on the Gershgorin interval.

    ``upper`` is an optional known upper bound (e.g. the leftmost eigenvalue
    of a leading principal submatrix, by interlacing).
    """
    if t.size == 1:
        return float(t.diag[0])
    norm = t.one_norm()
    if tol is None:
        tol = 1e-13 * (1.0 + norm)
    rad = np.zeros(t.size)
    rad[:-1] += np.abs(t.offdiag)
    rad[1:] += np.abs(t.offdiag)
    lo = float((t.diag - rad).min())
    hi = float((t.diag + rad).min())
    if upper is not None and lo <= upper < hi:
        hi = float(upper) + tol
    diag = t.diag.tolist()
    off2 = (t.offdiag**2).tolist()
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count(diag, off2, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _normalize_phase(z):
    """Unit 2-norm, first non-negligible component real positive."""
    z = z / np.linalg.norm(z)
    mags = np.abs(z)
    idx = int(np.argmax(mags > 1e-12 * mags.max()))
    ph = z[idx] / mags[idx]
    return z / ph


def hessenberg_eig(h):
    """All eigenpairs of a small real (Hessenberg) matrix.

    Returns ``(mu, z)`` with eigenvalues sorted by descending real part, ties
    by descending imaginary part, and unit eigenvectors as columns of ``z``.
    Complex eigenvalues come in exact conjugate pairs with conjugate vectors.
    """
    h = np.asarray(h, dtype=np.float64)
    k = h.shape[0]
    try:
        w, vr = scipy.linalg.eig(h, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR iteration failed: {exc}") from exc
    w = np.asarray(w, dtype=np.complex128)
    vr = np.asarray(vr, dtype=np.complex128)
    # LAPACK already returns exact conjugates; pin the real ones to imag 0
    real = w.imag == 0
    vr[:, real] = vr[:, real].real
    for i in range(k):
        vr[:, i] = _normalize_phase(vr[:, i])
    done = np.zeros(k, dtype=bool)
    for i in range(k):
        if w[i].imag > 0 and not done[i]:
            j = i + 1 if i + 1 < k and w[i + 1] == np.conj(w[i]) else None
            if j is not None:
                vr[:, j] = np.conj(vr[:, i])
                done[j] = True
    order = sorted(range(k), key=lambda i: (-w[i].real, -w[i].imag))
    return w[order], vr[:, order]


def _givens(a, b):
    """c, s with [c s; -s c] @ [a; b] = [r; 0]."""
    if b == 0.0:
        return 1.0, 0.0
    r = math.hypot(a, b)
    return a / r, b / r


def _householder3(x):
    """Unit v with (I - 2 v v^T) x parallel to e1, or None for x = 0."""
    alpha = np.linalg.norm(x)
    if alpha == 0.0:
        return None
    v = x.copy()
    v[0] += math.copysign(alpha, x[0]) if x[0] != 0 else alpha
    return v / np.linalg.norm(v)


def _single_shift_sweep(h, q, sigma):
    n = h.shape[0]
    x = h[0, 0] - sigma
    y = h[1, 0]
    for j in range(n - 1):
        if j > 0:
            x = h[j, j - 1]
            y = h[j + 1, j - 1]
        c, s = _givens(x, y)
        if s == 0.0 and j > 0:
            # bulge vanished: the active block is split here
            break
        lo = max(j - 1, 0)
        r0 = h[j, lo:].copy()
        r1 = h[j + 1, lo:].copy()
        h[j, lo:] = c * r0 + s * r1
        h[j + 1, lo:] = -s * r0 + c * r1
        if j > 0:
            h[j + 1, j - 1] = 0.0
        hi = min(j + 3, n)
        c0 = h[:hi, j].copy()
        c1 = h[:hi, j + 1].copy()
        h[:hi, j] = c * c0 + s * c1
        h[:hi, j + 1] = -s * c0 + c * c1
        q0 = q[:, j].copy()
        q1 = q[:, j + 1].copy()
        q[:, j] = c * q0 + s * q1
        q[:, j + 1] = -s * q0 + c * q1


def _apply_reflector(h, q, v, j):
    """Similarity with P = I - 2 v v^T acting on indices j .. j+len(v)-1."""
    n = h.shape[0]
    r = len(v)
    lo = max(j - 1, 0)
    blk = h[j : j + r, lo:]
    blk -= 2.0 * np.outer(v, v @ blk)
    hi = min(j + r + 1, n)
    blk = h[:hi, j : j + r]
    blk -= 2.0 * np.outer(blk @ v, v)
    blk = q[:, j : j + r]
    blk -= 2.0 * np.outer(blk @ v, v)


def _double_shift_sweep(h, q, s, t):
    """Francis step for the real quadratic H^2 - s H + t I."""
    n = h.shape[0]
    x = h[0, 0] * h[0, 0] + h[0, 1] * h[1, 0] - s * h[0, 0] + t
    y = h[1, 0] * (h[0, 0] + h[1, 1] - s)
    z = h[1, 0] * h[2, 1] if n > 2 else 0.0
    for j in range(n - 1):
        vec = np.array([x, y, z]) if j < n - 2 else np.array([x, y])
        v = _householder3(vec)
        if v is None:
            break
        _apply_reflector(h, q, v, j)
        if j > 0:
            h[j + 1 : j + len(v), j - 1] = 0.0
        if j + 1 < n - 1:
            x = h[j + 1, j]
            y = h[j + 2, j]
            z = h[j + 3, j] if j + 3 < n else 0.0


def shifted_qr_sweep(h, q_accum, shifts):
    """Apply one implicit QR step per shift to the Hessenberg ``h``.

    Real shifts use a Givens bulge chase; a complex shift must be immediately
    followed by its conjugate and the pair is applied as one real Francis
    double step.  Returns new arrays ``(h, q)`` with ``q = q_accum @ Q``.
    """
    h = np.array(h, dtype=np.float64)
    q = np.array(q_accum, dtype=np.float64)
    n = h.shape[0]
    shifts = list(shifts)
    i = 0
    while i < len(shifts):
        sigma = complex(shifts[i])
        if sigma.imag == 0.0:
            if n > 1:
                _single_shift_sweep(h, q, sigma.real)
            i += 1
            continue
        if i + 1 >= len(shifts) or complex(shifts[i + 1]) != sigma.conjugate():
            raise ValueError(f"complex shift {sigma} is not followed by its conjugate")
        if n > 1:
            _double_shift_sweep(h, q, 2.0 * sigma.real, abs(sigma) ** 2)
        i += 2
    # scrub the round-off below the subdiagonal
    h[np.tril_indices(n, -2)] = 0.0
    return h, q


def smallest_singular_triplet(h_ext, mu):
    """sigma_min and right singular vector of ``h_ext - mu * I~``.

    ``h_ext`` is (k+1) x k and I~ is the k x k identity with a zero row
    appended.  Returns ``(sigma, vector, is_real)``; the vector is real for
    real ``mu``.
    """
    h_ext = np.asarray(h_ext, dtype=np.float64)
    kp1, k = h_ext.shape
    if kp1 != k + 1:
        raise ValueError("expected a (k+1) x k matrix")
    mu = complex(mu)
    is_real = mu.imag == 0.0
    if is_real:
        x = h_ext.copy()
        x[np.arange(k), np.arange(k)] -= mu.real
    else:
        x = h_ext.astype(np.complex128)
        x[np.arange(k), np.arange(k)] -= mu
    _, sv, vh = scipy.linalg.svd(x, full_matrices=False, lapack_driver="gesvd")
    z = vh[-1].conj()
    z = _normalize_phase(z)
    if is_real:
        z = z.real
    return float(sv[-1]), z, is_real

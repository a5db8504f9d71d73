"""Sparse kernels shared by every solver.

Symmetric matrices are stored in CSR form over the full pattern, so a row
traversal also yields the matching column.  ``BOperator`` wraps the SPD
matrix of the trust-region norm together with a factorization computed once
at construction.  ``PairOperator`` applies the 2n x 2n block operator

    M = [[-A, g g^T / delta^2],
         [ B, -A             ]],      Btilde = diag(B, B)

matrix-free and counts A-applications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg


class DimensionError(ValueError):
    pass


class NotPositiveDefiniteError(ValueError):
    pass


class MatrixMarketError(ValueError):
    pass


class MvCounter:
    """Counts applications of A to a vector."""

    def __init__(self):
        self.count = 0

    def tick(self, k=1):
        self.count += k


def _check_len(v, n, what="vector"):
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionError(f"{what} has shape {v.shape}, expected ({n},)")


class SparseSymMatrix:
    """Symmetric sparse matrix, full pattern in CSR.

    Construction verifies exact symmetry and merges duplicate entries.
    """

    def __init__(self, csr):
        csr = sp.csr_matrix(csr, dtype=np.float64)
        if csr.shape[0] != csr.shape[1]:
            raise DimensionError(f"matrix is not square: {csr.shape}")
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        diff = csr - csr.T
        diff.eliminate_zeros()
        if diff.nnz:
            raise ValueError("matrix is not symmetric")
        self.csr = csr
        self.n = csr.shape[0]
        # column sums of |A| equal row sums by symmetry
        self.abs_col_sums = np.asarray(abs(csr).sum(axis=1)).ravel()
        self.ones_norm = float(self.abs_col_sums.max()) if self.n else 0.0

    @classmethod
    def from_dense(cls, a):
        return cls(sp.csr_matrix(np.asarray(a, dtype=np.float64)))

    @classmethod
    def from_coo(cls, rows, cols, vals, n):
        return cls(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))

    def matvec(self, v):
        return self.csr @ v

    def toarray(self):
        return self.csr.toarray()

    def __repr__(self):
        return f"SparseSymMatrix(n={self.n}, nnz={self.csr.nnz})"


def apply_A(m: SparseSymMatrix, v, counter: MvCounter | None = None):
    """Return ``A @ v``; ticks ``counter`` once if one is given."""
    v = np.asarray(v, dtype=np.float64)
    _check_len(v, m.n)
    if counter is not None:
        counter.tick()
    return m.matvec(v)


class BOperator:
    """SPD matrix B of the trust-region norm.

    Three kinds: ``identity``, ``tridiagonal`` (constant or arbitrary
    symmetric tridiagonal) and ``general`` (sparse SPD with a sparse LU that
    is checked to be a symmetric, pivot-positive factorization, i.e. an
    LDL^T in disguise).
    """

    def __init__(self, kind, n, *, diag=None, offdiag=None, matrix=None):
        self.kind = kind
        self.n = n
        if kind == "identity":
            pass
        elif kind == "tridiagonal":
            self.diag = np.asarray(diag, dtype=np.float64)
            self.offdiag = np.asarray(offdiag, dtype=np.float64)
            if self.diag.shape != (n,) or self.offdiag.shape != (max(n - 1, 0),):
                raise DimensionError("tridiagonal band lengths do not match n")
            band = np.zeros((2, n))
            band[0, 1:] = self.offdiag
            band[1] = self.diag
            try:
                self._chol = scipy.linalg.cholesky_banded(band, lower=False)
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefiniteError(str(exc)) from None
            self._csr = sp.diags(
                [self.offdiag, self.diag, self.offdiag], [-1, 0, 1], shape=(n, n), format="csr"
            )
        elif kind == "general":
            if matrix.n != n:
                raise DimensionError("matrix size does not match n")
            self.matrix = matrix
            self._csr = matrix.csr
            self._lu = _spd_factor(matrix.csr)
        else:
            raise ValueError(f"unknown BOperator kind {kind!r}")
        self.abs_col_sums = self._abs_col_sums()

    @classmethod
    def identity(cls, n):
        return cls("identity", n)

    @classmethod
    def tridiag(cls, n, sub=1.0, diag=3.0, sup=1.0):
        if sub != sup:
            raise ValueError("tridiagonal B must be symmetric (sub == sup)")
        return cls("tridiagonal", n, diag=np.full(n, float(diag)), offdiag=np.full(max(n - 1, 0), float(sub)))

    @classmethod
    def from_matrix(cls, m: SparseSymMatrix):
        return cls("general", m.n, matrix=m)

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        _check_len(v, self.n)
        if self.kind == "identity":
            return v.copy()
        return self._csr @ v

    def solve(self, v):
        v = np.asarray(v, dtype=np.float64)
        _check_len(v, self.n)
        if self.kind == "identity":
            return v.copy()
        if self.kind == "tridiagonal":
            return scipy.linalg.cho_solve_banded((self._chol, False), v)
        return self._lu.solve(v)

    def norm(self, v):
        return math.sqrt(max(float(v @ self.apply(v)), 0.0))

    def inv_norm(self, v):
        return math.sqrt(max(float(v @ self.solve(v)), 0.0))

    def toarray(self):
        if self.kind == "identity":
            return np.eye(self.n)
        return self._csr.toarray()

    def _abs_col_sums(self):
        if self.kind == "identity":
            return np.ones(self.n)
        return np.asarray(abs(self._csr).sum(axis=0)).ravel()

    def __repr__(self):
        return f"BOperator(kind={self.kind!r}, n={self.n})"


def _spd_factor(csr):
    n = csr.shape[0]
    if n == 0:
        raise DimensionError("empty matrix")
    lu = scipy.sparse.linalg.splu(
        sp.csc_matrix(csr),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise NotPositiveDefiniteError("factorization needed off-diagonal pivoting")
    piv = lu.U.diagonal()
    if not np.all(piv > 0):
        raise NotPositiveDefiniteError(f"non-positive pivot at index {int(np.argmin(piv > 0))}")
    return lu


def b_solve(b: BOperator, v):
    return b.solve(v)


def b_norm(b: BOperator, v):
    return b.norm(np.asarray(v, dtype=np.float64))


def b_inv_norm(b: BOperator, v):
    return b.inv_norm(np.asarray(v, dtype=np.float64))


@dataclass
class TrsProblem:
    """min g^T s + 1/2 s^T A s  subject to  ||s||_B <= delta."""

    a: SparseSymMatrix
    b: BOperator
    g: np.ndarray
    delta: float

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.float64)
        self.delta = float(self.delta)
        _check_len(self.g, self.a.n, "g")
        if self.b.n != self.a.n:
            raise DimensionError(f"B has size {self.b.n}, A has size {self.a.n}")
        if not np.any(self.g):
            raise ValueError("g must be nonzero")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def n(self):
        return self.a.n

    def q(self, s):
        return float(self.g @ s + 0.5 * s @ self.a.matvec(s))

    def kkt_residual(self, lam, s):
        """``||(A + lam B) s + g||_{B^-1}``, computed directly (no MV counted)."""
        r = self.a.matvec(s) + lam * self.b.apply(s) + self.g
        return self.b.inv_norm(r)

    def rel_res(self, lam, s):
        return self.kkt_residual(lam, s) / self.b.inv_norm(self.g)


@dataclass
class PairOperator:
    """Matrix-free (M, Btilde) pair for one solve.

    Every ``apply_M`` costs two A-applications.
    """

    problem: TrsProblem
    counter: MvCounter = field(default_factory=MvCounter)

    def __post_init__(self):
        self._norm1 = None

    @property
    def n(self):
        return self.problem.n

    @property
    def mv_count(self):
        return self.counter.count

    def _split(self, v):
        v = np.asarray(v, dtype=np.float64)
        _check_len(v, 2 * self.n)
        return v[: self.n], v[self.n :]

    def apply_M(self, v):
        p = self.problem
        v1, v2 = self._split(v)
        av1 = apply_A(p.a, v1, self.counter)
        av2 = apply_A(p.a, v2, self.counter)
        top = -av1 + p.g * (float(p.g @ v2) / p.delta**2)
        bot = p.b.apply(v1) - av2
        return np.concatenate([top, bot])

    def apply_Btilde(self, v):
        v1, v2 = self._split(v)
        return np.concatenate([self.problem.b.apply(v1), self.problem.b.apply(v2)])

    def solve_Btilde(self, v):
        v1, v2 = self._split(v)
        return np.concatenate([self.problem.b.solve(v1), self.problem.b.solve(v2)])

    def apply_Btilde_inv_M(self, v):
        return self.solve_Btilde(self.apply_M(v))

    def one_norm_M(self):
        if self._norm1 is None:
            p = self.problem
            acol = p.a.abs_col_sums
            left = acol + p.b.abs_col_sums
            gabs = np.abs(p.g)
            right = gabs * (float(gabs.sum()) / p.delta**2) + acol
            self._norm1 = float(max(left.max(), right.max()))
        return self._norm1

    def dense_M(self):
        """Dense assembly of M; test/oracle use only."""
        p = self.problem
        a = p.a.toarray()
        return np.block([[-a, np.outer(p.g, p.g) / p.delta**2], [p.b.toarray(), -a]])

    def dense_Btilde(self):
        b = self.problem.b.toarray()
        z = np.zeros_like(b)
        return np.block([[b, z], [z, b]])


def apply_M(p: PairOperator, v):
    return p.apply_M(v)


def apply_Btilde_inv_M(p: PairOperator, v):
    return p.apply_Btilde_inv_M(v)


def one_norm_M(p: PairOperator):
    return p.one_norm_M()


def read_matrix_market(path):
    """Read a real coordinate Matrix Market file into a scipy CSR matrix.

    ``general`` and ``symmetric`` headers are accepted; symmetric files come
    back with the stored triangle mirrored.  No symmetrization is applied to
    general files here.
    """
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", "replace").strip().lower().split()
    if len(header) != 5 or header[0] != "%%matrixmarket" or header[1] != "matrix":
        raise MatrixMarketError(f"{path}: not a Matrix Market matrix file")
    _, _, fmt, field_, symm = header
    if fmt != "coordinate":
        raise MatrixMarketError(f"{path}: only coordinate format is supported, got {fmt}")
    if field_ not in ("real", "integer"):
        raise MatrixMarketError(f"{path}: only real matrices are supported, got {field_}")
    if symm not in ("general", "symmetric"):
        raise MatrixMarketError(f"{path}: unsupported symmetry {symm}")
    try:
        m = scipy.io.mmread(path)
    except Exception as exc:  # scipy raises a zoo of types on malformed bodies
        raise MatrixMarketError(f"{path}: {exc}") from exc
    m = sp.csr_matrix(m, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise MatrixMarketError(f"{path}: matrix is not square {m.shape}")
    return m

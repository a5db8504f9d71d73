"""Seeded random problem generators for tests, acceptance runs and scripts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .sparse import BOperator, SparseSymMatrix, TrsProblem

DELTAS = (0.1, 1.0, 100.0)


@dataclass(frozen=True)
class InstanceSpec:
    n: int
    definite: bool
    b_kind: str  # "identity" or "tridiag"
    delta: float
    seed: int


def make_b(kind, n):
    if kind == "identity":
        return BOperator.identity(n)
    if kind == "tridiag":
        return BOperator.tridiag(n, 1.0, 3.0, 1.0)
    raise ValueError(f"unknown B kind {kind!r}")


def random_problem(spec: InstanceSpec) -> TrsProblem:
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    g0 = rng.standard_normal((n, n))
    a = g0 + g0.T
    if spec.definite:
        lmin = float(np.linalg.eigvalsh(a)[0])
        a = a + (abs(lmin) + rng.uniform(0.1, 2.0)) * np.eye(n)
    a = 0.5 * (a + a.T)
    g = rng.standard_normal(n)
    return TrsProblem(SparseSymMatrix.from_dense(a), make_b(spec.b_kind, n), g, spec.delta)


def suite_specs(count=500, seed=2024, n_range=(2, 40)):
    """Mixed definite/indefinite instances cycling through B kinds and radii."""
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        specs.append(
            InstanceSpec(
                n=n,
                definite=bool(i % 2),
                b_kind=("identity", "tridiag")[(i // 2) % 2],
                delta=DELTAS[i % 3],
                seed=int(rng.integers(0, 2**31 - 1)),
            )
        )
    return specs


def hard_case_problem(n, seed=0, b_kind="identity", alpha_n=-2.0):
    """An instance in the hard case.

    The pencil (A, B) gets a simple leftmost eigenvalue ``alpha_n`` and a
    second negative one (so CG sees negative curvature); g is deflated
    against the leftmost eigenvector and delta is twice the norm of the
    pseudo-inverse solution, so the boundary cannot be reached for
    lambda > -alpha_n.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    rng = np.random.default_rng(seed)
    b = make_b(b_kind, n)
    bd = b.toarray()
    w, v = np.linalg.eigh(bd)
    root = (v * np.sqrt(w)) @ v.T
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    alphas = np.concatenate([[alpha_n, alpha_n / 2.0], rng.uniform(0.5, 3.0, n - 2)])
    a = root @ (q * alphas) @ q.T @ root
    a = 0.5 * (a + a.T)
    # B-orthonormal eigenvectors of (A, B): u = B^{-1/2} q
    u = scipy.linalg.solve(root, q, assume_a="pos")
    un = u[:, 0]
    g = rng.standard_normal(n)
    g = g - float(un @ g) * (bd @ un)
    gamma = u.T @ g
    c = -gamma[1:] / (alphas[1:] - alpha_n)
    delta = 2.0 * float(np.linalg.norm(c))
    return TrsProblem(SparseSymMatrix.from_dense(a), b, g, delta)

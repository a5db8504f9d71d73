"""Write a few nonsymmetric sparse test matrices G in Matrix Market format.

The benchmark symmetrizes them as A = G + G^T.  Usage:

    python scripts/make_test_matrices.py [outdir]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp


def convdiff2d(k, peclet=0.4):
    """Upwinded 5-point convection-diffusion operator on a k x k grid."""
    one = np.ones(k)
    lap = sp.diags([-one[:-1], 2 * one, -one[:-1]], [-1, 0, 1])
    adv = sp.diags([-peclet * one[:-1], peclet * one], [-1, 0])
    eye = sp.identity(k)
    return (sp.kron(eye, lap + adv) + sp.kron(lap, eye)).tocsr()


def random_sparse(n, per_row=5, seed=7):
    rng = np.random.default_rng(seed)
    g = sp.random(n, n, density=per_row / n, random_state=rng, data_rvs=rng.standard_normal)
    return (g + sp.diags(rng.uniform(-1, 1, n))).tocsr()


def banded(n, width=4, seed=11):
    rng = np.random.default_rng(seed)
    offsets = list(range(-width, width + 1))
    bands = [rng.standard_normal(n - abs(o)) for o in offsets]
    return sp.diags(bands, offsets).tocsr()


MATRICES = {
    "convdiff40": lambda: convdiff2d(40),
    "randsparse2000": lambda: random_sparse(2000),
    "banded3000": lambda: banded(3000),
}


def write_all(outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, make in MATRICES.items():
        path = outdir / f"{name}.mtx"
        scipy.io.mmwrite(str(path), make(), field="real", symmetry="general")
        paths.append(path)
    return paths


if __name__ == "__main__":
    for p in write_all(sys.argv[1] if len(sys.argv) > 1 else "data"):
        print(p)

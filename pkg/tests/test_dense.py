import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from trseig.dense import (
    SymTridiag,
    hessenberg_eig,
    shifted_qr_sweep,
    smallest_singular_triplet,
    sturm_count,
    tridiag_ldlt,
    tridiag_leftmost_eig,
)


def random_hessenberg(rng, k):
    return np.triu(rng.standard_normal((k, k)), -1)


def eig_multiset_close(a, b, tol):
    """Greedy matching of two eigenvalue lists."""
    b = list(b)
    for x in a:
        j = int(np.argmin([abs(x - y) for y in b]))
        if abs(x - b[j]) > tol:
            return False
        b.pop(j)
    return True


class TestLdlt:
    def test_scalar(self):
        f = tridiag_ldlt(SymTridiag([2.0], []))
        assert f.positive_definite and f.d.tolist() == [2.0]

    def test_singular_signal(self):
        f = tridiag_ldlt(SymTridiag([2.0, 2.0], [1.0]), -1.0)
        assert f.d.tolist() == [1.0, 0.0]
        assert f.failed_at == 2

    def test_shifted_pd(self):
        f = tridiag_ldlt(SymTridiag([0.0, 0.0], [1.0]), 2.0)
        assert f.positive_definite
        np.testing.assert_allclose(f.d, [2.0, 1.5])

    @given(st.integers(1, 12), st.integers(0, 10**6))
    def test_solve_and_forward(self, k, seed):
        rng = np.random.default_rng(seed)
        t = SymTridiag(rng.uniform(2.5, 4.0, k), rng.uniform(-1, 1, k - 1))
        f = tridiag_ldlt(t)
        rhs = rng.standard_normal(k)
        x = f.solve(rhs)
        assert np.linalg.norm(t.toarray() @ x - rhs) <= 1e-12 * np.linalg.norm(rhs)
        w = f.forward(rhs)
        assert float(w @ w) == pytest.approx(float(rhs @ x), rel=1e-12)

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            SymTridiag([1.0, 2.0], [1.0, 1.0])


class TestLeftmostEig:
    def test_examples(self):
        assert tridiag_leftmost_eig(SymTridiag([5.0], [])) == 5.0
        assert tridiag_leftmost_eig(SymTridiag([2.0, 2.0], [1.0])) == pytest.approx(1.0, abs=1e-12 * 4)

    @given(st.integers(2, 8), st.integers(0, 10**6))
    def test_random_against_dense(self, k, seed):
        rng = np.random.default_rng(seed)
        t = SymTridiag(rng.standard_normal(k), rng.standard_normal(k - 1))
        ref = np.linalg.eigvalsh(t.toarray())[0]
        assert abs(tridiag_leftmost_eig(t) - ref) <= 1e-12 * (1 + t.one_norm())

    def test_sturm_count(self):
        t = SymTridiag([2.0, 2.0], [1.0])
        assert [sturm_count(t, x) for x in (0.5, 2.0, 3.5)] == [0, 1, 2]


class TestHessenbergEig:
    def test_rank_one_plus(self):
        mu, z = hessenberg_eig(np.array([[1.0, 1.0], [1.0, 1.0]]))
        np.testing.assert_allclose(mu, [2.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(z[:, 0], np.ones(2) / math.sqrt(2), rtol=1e-15)

    def test_rotation_conjugate_pair(self):
        mu, z = hessenberg_eig(np.array([[0.0, -1.0], [1.0, 0.0]]))
        assert mu[0] == 1j and mu[1] == -1j
        np.testing.assert_array_equal(z[:, 1], np.conj(z[:, 0]))

    @given(st.integers(2, 6), st.integers(0, 10**6))
    def test_char_poly_roots(self, k, seed):
        rng = np.random.default_rng(seed)
        h = random_hessenberg(rng, k)
        mu, z = hessenberg_eig(h)
        # independent oracle: companion-matrix roots of det(xI - H)
        roots = np.roots(np.poly(h))
        assert eig_multiset_close(mu, roots, 1e-8 * (1 + np.abs(h).sum(0).max()))
        for i in range(k):
            assert np.linalg.norm(h @ z[:, i] - mu[i] * z[:, i]) <= 1e-10 * np.abs(h).sum(0).max()
            assert np.linalg.norm(z[:, i]) == pytest.approx(1.0)
        keys = [(-x.real, -x.imag) for x in mu]
        assert keys == sorted(keys)
        for i in range(k):
            if mu[i].imag > 0:
                assert mu[i + 1] == np.conj(mu[i])
                np.testing.assert_array_equal(z[:, i + 1], np.conj(z[:, i]))

    @given(st.integers(2, 10), st.integers(0, 10**6))
    def test_symmetric_tridiagonal_matches_sturm(self, k, seed):
        rng = np.random.default_rng(seed)
        t = SymTridiag(rng.standard_normal(k), rng.standard_normal(k - 1))
        mu, _ = hessenberg_eig(t.toarray())
        assert np.all(mu.imag == 0)
        assert abs(mu[-1].real - tridiag_leftmost_eig(t, tol=1e-14)) <= 1e-11 * (1 + t.one_norm())


class TestShiftedQrSweep:
    def test_empty(self):
        h = random_hessenberg(np.random.default_rng(0), 4)
        h2, q = shifted_qr_sweep(h, np.eye(4), [])
        np.testing.assert_array_equal(h2, h)
        np.testing.assert_array_equal(q, np.eye(4))

    def test_exact_shift_deflates(self):
        h = np.array([[2.0, 1.0], [1.0, 2.0]])
        h2, q = shifted_qr_sweep(h, np.eye(2), [1.0])
        assert abs(h2[1, 0]) <= 1e-15
        assert h2[1, 1] == pytest.approx(1.0, abs=1e-15)
        assert h2[0, 0] == pytest.approx(3.0, abs=1e-15)

    def test_unpaired_complex_rejected(self):
        h = random_hessenberg(np.random.default_rng(1), 4)
        with pytest.raises(ValueError):
            shifted_qr_sweep(h, np.eye(4), [1 + 1j])
        with pytest.raises(ValueError):
            shifted_qr_sweep(h, np.eye(4), [1 + 1j, 2 - 1j])

    @given(st.integers(3, 8), st.integers(0, 10**6), st.integers(1, 3))
    def test_eigenvalues_preserved_and_similarity(self, k, seed, nshift):
        rng = np.random.default_rng(seed)
        h = random_hessenberg(rng, k)
        shifts = []
        for _ in range(nshift):
            if rng.random() < 0.5:
                shifts.append(complex(rng.standard_normal()))
            else:
                c = complex(rng.standard_normal(), abs(rng.standard_normal()) + 0.1)
                shifts += [c, c.conjugate()]
        h2, q = shifted_qr_sweep(h, np.eye(k), shifts)
        norm = np.abs(h).sum(0).max()
        assert np.all(np.tril(h2, -2) == 0)
        assert h2.dtype == np.float64 and q.dtype == np.float64
        np.testing.assert_allclose(q.T @ q, np.eye(k), atol=1e-13)
        assert np.linalg.norm(q.T @ h @ q - h2) <= 1e-12 * norm
        assert eig_multiset_close(np.linalg.eigvals(h2), np.linalg.eigvals(h), 1e-10 * norm)

    @given(st.integers(4, 8), st.integers(0, 10**6))
    def test_first_column_is_polynomial_filter(self, k, seed):
        rng = np.random.default_rng(seed)
        h = random_hessenberg(rng, k)
        c = complex(rng.standard_normal(), 0.5)
        shifts = [0.3, c, c.conjugate()]
        _, q = shifted_qr_sweep(h, np.eye(k), shifts)
        e1 = np.eye(k)[:, 0]
        x = (h - 0.3 * np.eye(k)) @ ((h @ h - 2 * c.real * h + abs(c) ** 2 * np.eye(k)) @ e1)
        x /= np.linalg.norm(x)
        assert 1 - abs(float(q[:, 0] @ x)) <= 1e-12


class TestSmallestSingularTriplet:
    def test_column_example(self):
        sigma, z, real = smallest_singular_triplet(np.array([[1.0], [1.0]]), 1.0)
        assert sigma == pytest.approx(1.0) and real
        np.testing.assert_allclose(z, [1.0])

    def test_exact_eigenpair(self):
        h = np.array([[2.0, 1.0], [0.0, 3.0], [0.0, 0.0]])
        sigma, _, _ = smallest_singular_triplet(h, 3.0)
        assert sigma <= 1e-15

    def test_shape_check(self):
        with pytest.raises(ValueError):
            smallest_singular_triplet(np.ones((3, 3)), 0.0)

    @given(st.integers(0, 10**6), st.booleans())
    def test_random_against_cross_product(self, seed, cplx):
        rng = np.random.default_rng(seed)
        h = np.triu(rng.standard_normal((7, 6)), -1)
        mu = complex(rng.standard_normal(), rng.standard_normal() if cplx else 0.0)
        sigma, z, real = smallest_singular_triplet(h, mu)
        shifted = h.astype(complex)
        shifted[np.arange(6), np.arange(6)] -= mu
        # oracle: smallest eigenpair of the Hermitian cross product
        w, v = scipy.linalg.eigh(shifted.conj().T @ shifted)
        norm = np.abs(h).sum(0).max() + abs(mu)
        assert abs(sigma - math.sqrt(max(w[0], 0.0))) <= 1e-12 * norm * 10
        assert np.linalg.norm(shifted @ z) == pytest.approx(sigma, abs=1e-12 * norm)
        assert real == (mu.imag == 0)
        if real:
            assert not np.iscomplexobj(z)

    @given(st.integers(2, 8), st.integers(0, 10**6))
    def test_bounded_by_ritz_residual(self, k, seed):
        rng = np.random.default_rng(seed)
        hx = np.triu(rng.standard_normal((k + 1, k)), -1)
        mu, z = hessenberg_eig(hx[:k])
        norm = np.abs(hx).sum(0).max()
        for i in range(k):
            sigma, _, _ = smallest_singular_triplet(hx, mu[i])
            assert sigma <= abs(hx[k, k - 1]) * abs(z[k - 1, i]) + 1e-12 * norm

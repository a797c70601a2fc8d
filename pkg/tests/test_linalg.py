import numpy as np
import pytest

from nhgeom import (
    DimensionMismatchError,
    NonFiniteError,
    NormalizationBreakdownError,
    eigendecompose,
    match_bands,
    matrix_scale,
    null_space,
    overlap_matrix,
    solve_linear,
)
from nhgeom.linalg import TOL_BIORTH, TOL_COMPLETE, TOL_RESID

from conftest import sorted_complex


def charpoly_coeffs(a):
    """Characteristic polynomial coefficients by Faddeev-LeVerrier.

    Independent of any eigensolver: uses only traces of powers, so it can
    serve as an oracle for eigendecompose.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    return np.array(coeffs)


class TestEigendecompose:
    def test_diagonal(self):
        sys = eigendecompose(np.diag([1.0, 2.0, 3.0]))
        assert np.allclose(sys.energies, [3.0, 2.0, 1.0], atol=1e-14)
        # descending order puts basis vector e3 first
        perm = [2, 1, 0]
        for i, j in enumerate(perm):
            e = np.zeros(3)
            e[j] = 1.0
            assert np.allclose(np.abs(sys.rights[:, i]), e, atol=1e-14)
            assert np.allclose(np.abs(sys.lefts[i]), e, atol=1e-14)

    def test_hermitian_limit_energies(self, family):
        sys = eigendecompose(family.matrix((0.0, 0.0)))
        expected = [(3 + np.sqrt(17)) / 2, 3.0, (3 - np.sqrt(17)) / 2]
        assert np.allclose(sys.energies, expected, atol=1e-9)

    def test_broken_phase_conjugate_pair(self, family):
        sys = eigendecompose(family.matrix((0.0, 1.5)))
        expected = sorted_complex([3.0, 1.5 + 0.5j, 1.5 - 0.5j])
        assert np.allclose(sorted_complex(sys.energies), expected, atol=1e-9)

    def test_breakdown_at_dirac_ep(self, family):
        with pytest.raises(NormalizationBreakdownError):
            eigendecompose(family.matrix((0.0, 1.0)))

    def test_nonfinite_rejected(self):
        a = np.eye(3, dtype=complex)
        a[1, 1] = np.nan
        with pytest.raises(NonFiniteError):
            eigendecompose(a)

    def test_residuals_reported(self, family):
        h = family.matrix((0.4, 0.7))
        sys = eigendecompose(h)
        for i in range(3):
            r = np.linalg.norm(h @ sys.rights[:, i] - sys.energies[i] * sys.rights[:, i])
            assert r <= TOL_RESID * matrix_scale(h)
            assert sys.residuals[i] <= TOL_RESID * matrix_scale(h)

    def test_random_matrices_match_charpoly_roots(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 7))
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            sys = eigendecompose(a)
            roots = np.roots(charpoly_coeffs(a))
            got, want = sorted_complex(sys.energies), sorted_complex(roots)
            assert np.allclose(got, want, atol=1e-8 * max(np.abs(want)))

    def test_biorthogonality_and_completeness_random(self, rng):
        for _ in range(60):
            n = int(rng.integers(2, 7))
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            sys = eigendecompose(a)
            if any(sys.condition_flags):
                continue
            assert sys.biorthogonality_defect() <= TOL_BIORTH
            assert sys.completeness_defect() <= TOL_COMPLETE

    def test_hermitian_consistency(self, rng):
        for _ in range(20):
            a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            h = a + a.conj().T
            sys = eigendecompose(h)
            assert np.max(np.abs(sys.energies.imag)) <= 1e-10 * matrix_scale(h)
            for i in range(4):
                assert np.allclose(sys.lefts[i], sys.rights[:, i].conj(), atol=1e-9)

    def test_similarity_invariance(self, rng):
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        s = np.eye(5) + 0.3 * rng.standard_normal((5, 5))
        b = s @ a @ np.linalg.inv(s)
        wa = sorted_complex(eigendecompose(a).energies)
        wb = sorted_complex(eigendecompose(b).energies)
        assert np.allclose(wa, wb, atol=1e-7)


class TestSolveLinear:
    def test_identity(self):
        x, resid = solve_linear(np.eye(3), [1.0, 2.0j, 0.0])
        assert np.allclose(x, [1.0, 2.0j, 0.0], atol=1e-14)
        assert resid <= 1e-14

    def test_singular_minimum_norm(self, family):
        # (H(0,1) - 3) chi = psi0 reduces to 2x1 - 3x2 = 0, 2x2 = 1
        a = family.matrix((0.0, 1.0)) - 3.0 * np.eye(3)
        x, resid = solve_linear(a, [0.0, 0.0, 1.0])
        assert resid <= 1e-12
        assert np.allclose(x, [0.75, 0.5, 0.0], atol=1e-12)

    def test_zero_matrix(self):
        x, resid = solve_linear(np.zeros((3, 3)), np.zeros(3))
        assert np.allclose(x, 0.0, atol=1e-15)
        assert resid == 0.0


class TestNullSpace:
    def test_dirac_kernel(self, family):
        a = family.matrix((0.0, 1.0)) - 3.0 * np.eye(3)
        basis = null_space(a)
        assert len(basis) == 1
        v = basis[0]
        assert abs(abs(v[2]) - 1.0) <= 1e-12
        assert np.allclose(v[:2], 0.0, atol=1e-12)

    def test_identity_full_rank(self):
        assert null_space(np.eye(4)) == []

    def test_zero_matrix(self):
        basis = null_space(np.zeros((3, 3)))
        assert len(basis) == 3
        g = np.array(basis)
        assert np.allclose(g @ g.conj().T, np.eye(3), atol=1e-12)


class TestMatchBands:
    def test_identity_permutation(self, family):
        sys = eigendecompose(family.matrix((0.3, 0.4)))
        assert match_bands(sys, sys) == (0, 1, 2)

    def test_swapped_bands(self, family):
        sys = eigendecompose(family.matrix((0.3, 0.4)))
        swapped = type(sys)(
            energies=sys.energies[[1, 0, 2]],
            rights=sys.rights[:, [1, 0, 2]],
            lefts=sys.lefts[[1, 0, 2]],
            residuals=sys.residuals[[1, 0, 2]],
            condition_flags=sys.condition_flags[[1, 0, 2]],
        )
        assert match_bands(sys, swapped) == (1, 0, 2)

    def test_neighboring_points_identity(self, family):
        a = eigendecompose(family.matrix((0.0, 0.9)))
        b = eigendecompose(family.matrix((0.0, 0.91)))
        m = overlap_matrix(a, b)
        # diagonally dominant: bands well separated across the step
        for i in range(3):
            assert m[i, i] > max(m[i, j] for j in range(3) if j != i)
        assert match_bands(a, b) == (0, 1, 2)

    def test_dimension_mismatch(self, family):
        a = eigendecompose(family.matrix((0.0, 0.5)))
        b = eigendecompose(np.diag([1.0, 2.0]))
        with pytest.raises(DimensionMismatchError):
            match_bands(a, b)

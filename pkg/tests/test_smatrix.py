from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from engine.smatrix import harmonic_index, smatrix_engine


def test_harmonic_index_orders_by_l_then_m():
    assert [harmonic_index(1, m) for m in (-1, 0, 1)] == [1, 2, 3]
    assert harmonic_index(2, -2) == 4
    with pytest.raises(ValueError):
        harmonic_index(1, 2)


def test_sigma1_is_rank_one_on_the_isotropic_harmonic():
    sm = smatrix_engine.build(0.7, (0.1, -0.2, 0.3), lmax=2)

    assert sm.size == 9
    assert sm.sigma1[0, 0] == pytest.approx(-1.4)
    assert np.count_nonzero(sm.sigma1) == 1
    assert np.array_equal(sm.sigma1, sm.sigma1.T)


def test_sigma2_antisymmetric_part_holds_only_y1_couplings():
    sm = smatrix_engine.build(0.5, (0.1, -0.2, 0.3))
    antisym = sm.sigma2 - sm.sigma2.T

    # x -> m=+1, y -> m=-1, z -> m=0
    assert sm.sigma2[0, harmonic_index(1, 1)] == pytest.approx(0.1)
    assert sm.sigma2[0, harmonic_index(1, -1)] == pytest.approx(-0.2)
    assert sm.sigma2[0, harmonic_index(1, 0)] == pytest.approx(0.3)
    assert antisym[harmonic_index(1, 0), 0] == pytest.approx(-0.6)
    assert sm.sigma2[0, 0] == pytest.approx(0.5)


def test_unitarity_identity_over_random_draws():
    rng = np.random.default_rng(1234)
    for _ in range(1000):
        sm = smatrix_engine.build(rng.normal(), rng.normal(size=3), lmax=int(rng.integers(1, 4)))
        assert smatrix_engine.unitarity_defect(sm) < 1e-12


def test_truncated_matrix_is_unitary_to_second_order():
    sm = smatrix_engine.build(0.8, (0.3, 0.0, -0.4))
    for k in (1e-2, 1e-3):
        S = smatrix_engine.matrix(sm, k)
        defect = np.linalg.norm(S.conj().T @ S - np.eye(sm.size))
        assert defect < 10.0 * k**3


def test_zero_inputs_give_the_identity():
    sm = smatrix_engine.build(0.0)
    coeffs = np.arange(4, dtype=complex)

    assert sm.is_identity
    assert np.array_equal(smatrix_engine.apply(sm, 0.3, coeffs), coeffs)


def test_apply_matches_dense_matrix():
    sm = smatrix_engine.build(-0.4, (0.2, 0.1, 0.0), lmax=2)
    coeffs = np.linspace(-1.0, 1.0, sm.size) + 0.5j

    assert np.allclose(smatrix_engine.apply(sm, 0.2, coeffs), smatrix_engine.matrix(sm, 0.2) @ coeffs)


def test_invalid_inputs_are_rejected():
    sm = smatrix_engine.build(1.0)
    with pytest.raises(ValueError):
        smatrix_engine.build(1.0, lmax=0)
    with pytest.raises(ValueError):
        smatrix_engine.build(1.0, (0.1, 0.2))
    with pytest.raises(ValueError):
        smatrix_engine.apply(sm, 0.1, np.ones(3))
    with pytest.raises(ValueError):
        smatrix_engine.apply(sm, -0.1, np.ones(4))


def test_matrices_are_read_only():
    sm = smatrix_engine.build(1.0)
    with pytest.raises(ValueError):
        sm.sigma1[0, 0] = 5.0

import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twosystem.dynamics import (
    MultiVectorState,
    SpResidualWarning,
    TwoState,
    VectorFormState,
    base_rhs,
    hamiltonicity_defect,
    lax_matrix,
    multivector_rhs,
    naive_union_rhs,
    two_system_rhs,
    variational_rhs,
    vector_form_rhs,
)
from twosystem.model import PolynomialHamiltonian, harmonic, quartic, standard_j
from twosystem.oracles import QuadraticModel
from twosystem.structure import split_sym_antisym, sp_residual

from conftest import random_polynomial, random_sp, random_symmetric

Q = quartic(0.1)
X0 = np.array([1.0, 0.0])
E1 = np.array([1.0, 0.0])


def random_quadratic(rng, n):
    return QuadraticModel(random_symmetric(rng, 2 * n), rng.normal(size=2 * n)).to_polynomial()


def test_base_rhs_examples():
    np.testing.assert_allclose(base_rhs(Q, X0), [0.0, -1.1], atol=1e-15)
    np.testing.assert_array_equal(base_rhs(harmonic(), X0), [0.0, -1.0])
    np.testing.assert_array_equal(base_rhs(Q, [0.0, 0.0]), [0.0, 0.0])


def test_variational_rhs_examples(rng):
    np.testing.assert_allclose(variational_rhs(Q, X0, E1), [0.0, -1.3], atol=1e-15)
    np.testing.assert_array_equal(variational_rhs(Q, X0, [0.0, 0.0]), 0.0)
    S = random_symmetric(rng, 4)
    m = QuadraticModel(S).to_polynomial()
    x, y = rng.normal(size=4), rng.normal(size=4)
    np.testing.assert_allclose(variational_rhs(m, x, y), base_rhs(m, y), atol=1e-14)


def test_variational_is_flow_of_quadratic_energy(rng):
    # y' = J grad_y (y^T H'' y / 2)
    m = random_polynomial(rng, 2)
    x, y = rng.normal(size=4), rng.normal(size=4)
    grad_F = m.hessian(x) @ y
    np.testing.assert_allclose(variational_rhs(m, x, y), standard_j(2) @ grad_F, atol=1e-14)


def test_vector_form_examples(rng):
    out = vector_form_rhs(Q, VectorFormState(X0, E1))
    np.testing.assert_allclose(out.x, [0.0, -1.4], atol=1e-15)
    np.testing.assert_allclose(out.y, [0.0, -1.3], atol=1e-15)
    x = np.array([0.4, -0.2])
    out = vector_form_rhs(Q, VectorFormState(x, [0.0, 0.0]))
    np.testing.assert_array_equal(out.x, base_rhs(Q, x))
    m = random_quadratic(rng, 2)
    x, y = rng.normal(size=4), rng.normal(size=4)
    out = vector_form_rhs(m, VectorFormState(x, y))
    np.testing.assert_allclose(out.x, base_rhs(m, x), atol=1e-14)
    np.testing.assert_allclose(out.y, variational_rhs(m, x, y), atol=1e-14)


def test_lax_matrix_examples(rng):
    np.testing.assert_allclose(lax_matrix(Q, X0), [[0.0, 1.3], [-1.0, 0.0]], atol=1e-15)
    np.testing.assert_array_equal(lax_matrix(harmonic(), [3.0, 4.0]), standard_j(1))
    for n in (1, 2, 3):
        m = random_polynomial(rng, n)
        A = lax_matrix(m, rng.normal(size=2 * n))
        assert sp_residual(A) <= 1e-13 * max(1.0, np.linalg.norm(A))


def test_two_system_rhs_intro_example():
    out = two_system_rhs(Q, TwoState.from_moments(X0, np.eye(2)))
    np.testing.assert_allclose(out.x, [0.0, -1.4], atol=1e-15)
    Md = out.M
    np.testing.assert_allclose([Md[0, 0], Md[0, 1], Md[1, 1]], [0.0, -0.3, 0.0], atol=1e-15)
    np.testing.assert_allclose(Md, Md.T, atol=1e-15)


def test_two_system_rhs_zero_phi():
    x = np.array([0.3, 0.8])
    out = two_system_rhs(Q, TwoState(x, np.zeros((2, 2))))
    np.testing.assert_array_equal(out.x, base_rhs(Q, x))
    np.testing.assert_array_equal(out.phi, 0.0)


def test_two_system_rhs_quadratic_splits(rng):
    m = random_quadratic(rng, 2)
    x = rng.normal(size=4)
    a = two_system_rhs(m, TwoState(x, random_sp(rng, 2)))
    b = two_system_rhs(m, TwoState(x, random_sp(rng, 2)))
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_allclose(a.x, base_rhs(m, x), atol=1e-14)


def test_two_system_rhs_warns_outside_sp():
    with pytest.warns(SpResidualWarning):
        out = two_system_rhs(Q, TwoState(X0, np.eye(2)))
    assert np.all(np.isfinite(out.phi))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        two_system_rhs(Q, TwoState(X0, np.eye(2)), check_sp=False)


def test_multivector_examples(rng):
    s = MultiVectorState(X0, [E1], [])
    out = multivector_rhs(Q, s)
    ref = vector_form_rhs(Q, VectorFormState(X0, E1))
    np.testing.assert_array_equal(out.x, ref.x)
    np.testing.assert_array_equal(out.ys[0], ref.y)

    y = rng.normal(size=2)
    x = rng.normal(size=2)
    out = multivector_rhs(Q, MultiVectorState(x, [y], [y]))
    np.testing.assert_allclose(out.x, base_rhs(Q, x), atol=1e-15)
    np.testing.assert_array_equal(out.ys, out.zs)

    out = multivector_rhs(Q, MultiVectorState(X0, [E1], [[0.0, 1.0]]))
    np.testing.assert_allclose(out.x, [0.0, -1.4], atol=1e-15)


def test_multivector_too_many_vectors():
    with pytest.raises(ValueError):
        MultiVectorState(X0, [E1, E1], [E1])


def test_restriction_to_rank_one(rng):
    for n in (1, 2, 3):
        m = random_polynomial(rng, n)
        x, y = rng.normal(size=2 * n), rng.normal(size=2 * n)
        J = standard_j(n)
        two = two_system_rhs(m, TwoState(x, J @ np.outer(y, y)))
        vec = vector_form_rhs(m, VectorFormState(x, y))
        scale = max(1.0, np.abs(two.phi).max())
        np.testing.assert_allclose(two.x, vec.x, rtol=0, atol=1e-12 * scale)
        expected = J @ (np.outer(vec.y, y) + np.outer(y, vec.y))
        np.testing.assert_allclose(two.phi, expected, rtol=0, atol=1e-12 * scale)


def _eq9(m, x, M):
    J = standard_j(m.n)
    H2 = m.hessian(x)
    return J @ H2 @ M + M @ H2 @ J.T


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3))
def test_symmetric_antisymmetric_decoupling(seed, n):
    rng = np.random.default_rng(seed)
    m = random_polynomial(rng, n)
    x = rng.normal(size=2 * n)
    J = standard_j(n)
    M = rng.normal(size=(2 * n, 2 * n))
    Ms, Ma = split_sym_antisym(M)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SpResidualWarning)
        full = two_system_rhs(m, TwoState(x, J @ M))
        sym = two_system_rhs(m, TwoState(x, J @ Ms))
        anti = two_system_rhs(m, TwoState(x, J @ Ma))
        other = two_system_rhs(m, TwoState(x, J @ (Ms + 3.0 * Ma.T)))
    scale = max(1.0, np.abs(m.hessian(x)).max() * np.abs(M).max())
    # x' sees only the symmetric part; equality up to the roundoff of M = -J Phi
    xtol = 1e-13 * max(1.0, np.abs(full.x).max())
    np.testing.assert_allclose(full.x, sym.x, rtol=0, atol=xtol)
    np.testing.assert_allclose(full.x, other.x, rtol=0, atol=xtol)
    np.testing.assert_allclose(sym.M, _eq9(m, x, Ms), rtol=0, atol=1e-12 * scale)
    np.testing.assert_allclose(anti.M, _eq9(m, x, Ma), rtol=0, atol=1e-12 * scale)
    np.testing.assert_allclose(full.phi, sym.phi + anti.phi, rtol=0, atol=1e-12 * scale)


def test_n1_antisymmetric_part_frozen(rng):
    J = standard_j(1)
    for _ in range(20):
        m = random_polynomial(rng, 1)
        x = rng.normal(size=2)
        c = rng.normal()
        Ma = np.array([[0.0, c], [-c, 0.0]])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SpResidualWarning)
            out = two_system_rhs(m, TwoState(x, J @ Ma))
        np.testing.assert_array_equal(out.phi, 0.0)


def test_commutator_stays_in_sp(rng):
    for n in (1, 2, 3):
        for _ in range(10):
            m = random_polynomial(rng, n)
            s = TwoState(rng.normal(size=2 * n), random_sp(rng, n))
            out = two_system_rhs(m, s)
            assert sp_residual(out.phi) <= 1e-12 * max(1.0, np.linalg.norm(out.phi))


def test_naive_union_rhs():
    y = np.array([0.3, -0.2])
    out = naive_union_rhs(Q, VectorFormState(X0, y))
    np.testing.assert_array_equal(out.x, base_rhs(Q, X0))
    np.testing.assert_array_equal(out.y, variational_rhs(Q, X0, y))


def test_defect_quadratic_is_zero(rng):
    for n in (1, 2):
        m = random_quadratic(rng, n)
        s = VectorFormState(rng.normal(size=2 * n), rng.normal(size=2 * n))
        assert hamiltonicity_defect(m, s) <= 1e-6


def test_defect_quartic():
    assert hamiltonicity_defect(Q, VectorFormState(X0, E1)) > 1e-2


def test_defect_quartic_vanishes_at_zero_y():
    # the cross block d(H''y)/dx is proportional to y
    assert hamiltonicity_defect(Q, VectorFormState(X0, [0.0, 0.0])) <= 1e-6


def test_vector_form_is_hamiltonian(rng):
    m = random_polynomial(rng, 2)
    s = VectorFormState(rng.normal(size=4), rng.normal(size=4))
    assert hamiltonicity_defect(m, s, rhs=vector_form_rhs) <= 1e-6
    assert hamiltonicity_defect(m, s) > 1e-3

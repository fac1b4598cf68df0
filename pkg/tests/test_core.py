import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twonorm.constructors import random_lie_element, rank_one_exponential, rank_one_projection
from twonorm.core import (
    HVector,
    IncompatibleOperatorError,
    NotInGroupError,
    TwoNormOperator,
    default_tol,
    dieudonne_factor,
    extension_map,
    group_defect,
    h1_norm,
    in_group,
    in_lie_algebra,
    inner_h1,
    inner_l2,
    intertwiner,
    is_symmetrizable,
    l2_norm,
    l2_representation,
    operator_from_json,
    operator_to_json,
    solution_operator,
)
from twonorm.domains import DomainSpec, basis_gamma
from twonorm.geodesics import matrix_exp

INTERVAL = DomainSpec.interval()
DISK = DomainSpec.disk()
PI2 = math.pi**2


def random_l2_vector(rng, g, modes=None):
    N = len(g)
    a = np.zeros(N, complex)
    k = N if modes is None else modes
    a[:k] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return HVector.from_l2_coeffs(a / np.linalg.norm(a), g)


def random_group_element(seed, N=16, domain=INTERVAL):
    """e^X times a rank-one exponential, so the H1 norm is far from 1."""
    rng = np.random.default_rng(seed)
    X = random_lie_element(N, domain, seed=rng, scale=rng.uniform(0.1, 1.5))
    f = random_l2_vector(rng, basis_gamma(domain, N), modes=3)
    return matrix_exp(X) @ rank_one_exponential(f, rng.uniform(-3, 3))


# ---------------------------------------------------------------- construction


def test_operator_invariants():
    with pytest.raises(ValueError):
        TwoNormOperator.on(INTERVAL, np.ones((2, 3)))
    with pytest.raises(ValueError):
        TwoNormOperator(np.eye(3), basis_gamma(INTERVAL, 4), INTERVAL)
    with pytest.raises(ValueError):
        TwoNormOperator.on(INTERVAL, np.array([[np.nan, 0], [0, 1]]))
    X = TwoNormOperator.identity(INTERVAL, 3)
    with pytest.raises(ValueError):
        X.mat[0, 0] = 2.0


def test_mixing_domains_or_sizes_is_an_error():
    a = TwoNormOperator.identity(INTERVAL, 4)
    with pytest.raises(IncompatibleOperatorError):
        a @ TwoNormOperator.identity(DISK, 4)
    with pytest.raises(IncompatibleOperatorError):
        a + TwoNormOperator.identity(INTERVAL, 5)
    with pytest.raises(IncompatibleOperatorError):
        a @ HVector.basis(basis_gamma(DISK, 4), 1)


def test_from_l2_inverts_l2_representation():
    rng = np.random.default_rng(1)
    Mh = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    X = TwoNormOperator.from_l2(Mh, INTERVAL)
    np.testing.assert_allclose(l2_representation(X), Mh, rtol=1e-14)


# ---------------------------------------------------------------- solution operator and A-norms


def test_solution_operator_interval_and_disk():
    A = solution_operator(INTERVAL, 2)
    np.testing.assert_allclose(np.diag(A.mat).real, [1 / (PI2 + 1), 1 / (4 * PI2 + 1)], rtol=1e-15)
    Ad = solution_operator(DISK, 1)
    assert Ad.mat[0, 0].real == pytest.approx(1 / (1 + 2.404825557695773**2), rel=1e-13)
    for dom in (INTERVAL, DISK, DomainSpec.weyl(3, 1.0)):
        A = solution_operator(dom, 10)
        assert np.all(np.linalg.eigvalsh(A.mat) > 0)
        assert h1_norm(A) == pytest.approx(1 / basis_gamma(dom, 10).gamma[0] ** 2, rel=1e-14)
        assert h1_norm(A) <= 1.0


def test_l2_representation_examples():
    g = basis_gamma(INTERVAL, 8)
    assert np.array_equal(l2_representation(TwoNormOperator.identity(INTERVAL, 8)), np.eye(8))
    d = np.arange(1.0, 9.0)
    np.testing.assert_array_equal(l2_representation(TwoNormOperator.on(INTERVAL, np.diag(d))), np.diag(d))
    S = np.diag(g.gamma[1:] / g.gamma[:-1], -1)
    np.testing.assert_allclose(l2_representation(TwoNormOperator.on(INTERVAL, S)), np.eye(8, k=-1), atol=1e-15)


def test_norms_of_identity_and_rank_one():
    I = TwoNormOperator.identity(INTERVAL, 5)
    assert h1_norm(I) == pytest.approx(1.0) and l2_norm(I) == pytest.approx(1.0)
    g = basis_gamma(INTERVAL, 6)
    raw = HVector.basis(g, 1) + HVector.basis(g, 2)
    f = raw.normalized_l2()
    E = rank_one_projection(f)
    Af = solution_operator(INTERVAL, 6) @ f
    assert h1_norm(E) == pytest.approx(f.norm_h1() * Af.norm_h1(), rel=1e-13)


def test_inner_products():
    g = basis_gamma(INTERVAL, 5)
    s1, s2 = HVector.basis(g, 1), HVector.basis(g, 2)
    assert inner_h1(s1, s1) == pytest.approx(1.0)
    assert inner_l2(s1, s1) == pytest.approx(1 / (PI2 + 1), rel=1e-15)
    assert inner_h1(s1, s2) == 0 and inner_l2(s1, s2) == 0
    with pytest.raises(ValueError):
        inner_l2(s1, HVector.basis(basis_gamma(INTERVAL, 4), 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_inner_l2_is_h1_pairing_with_A(seed, N):
    rng = np.random.default_rng(seed)
    g = basis_gamma(INTERVAL, N)
    f = HVector(rng.standard_normal(N) + 1j * rng.standard_normal(N), g)
    h = HVector(rng.standard_normal(N) + 1j * rng.standard_normal(N), g)
    A = solution_operator(INTERVAL, N)
    assert abs(inner_l2(f, h) - inner_h1(A @ f, h)) <= 1e-12 * max(1.0, abs(inner_l2(f, h)))
    # |A^(1/2) f|_1^2 = |f|_2^2
    half = HVector(f.coeffs / g.gamma, g)
    assert half.norm_h1() ** 2 == pytest.approx(f.norm_l2() ** 2, rel=1e-12)


# ---------------------------------------------------------------- predicates


def test_predicates_examples():
    I = TwoNormOperator.identity(INTERVAL, 6)
    assert in_group(I).defect == 0.0
    g = basis_gamma(INTERVAL, 6)
    f = random_l2_vector(np.random.default_rng(0), g, modes=3)
    G = rank_one_exponential(f, 1.0)
    assert in_group(G, 1e-10)
    A = solution_operator(INTERVAL, 6)
    assert is_symmetrizable(A)
    assert in_lie_algebra(1j * A)
    assert default_tol(6) == pytest.approx(6e-8)


def test_predicates_reject_bad_input():
    with pytest.raises(ValueError):
        in_group(TwoNormOperator.identity(INTERVAL, 3), tol=0.0)
    with pytest.raises(ValueError):
        in_group(np.ones((2, 3)))
    with pytest.raises(TypeError):
        in_group(np.eye(3))


def test_membership_detects_non_members():
    g = basis_gamma(INTERVAL, 4)
    G = TwoNormOperator.identity(INTERVAL, 4) * 2.0
    assert not in_group(G)
    with pytest.raises(NotInGroupError):
        extension_map(G)
    with pytest.raises(NotInGroupError):
        intertwiner(G)
    # a unitary in the s-basis that mixes modes is generally not an L2 isometry
    c, s = math.cos(0.3), math.sin(0.3)
    U = np.eye(4)
    U[:2, :2] = [[c, -s], [s, c]]
    assert not in_group(TwoNormOperator(U, g, INTERVAL))


def test_extension_map_examples():
    I = TwoNormOperator.identity(INTERVAL, 5)
    np.testing.assert_array_equal(extension_map(I), np.eye(5))
    U = TwoNormOperator.on(INTERVAL, np.diag(np.exp(1j * np.arange(5))))
    np.testing.assert_allclose(extension_map(U), U.mat, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inverse_stays_in_group(seed):
    G = random_group_element(seed, N=12)
    assert in_group(G)
    Gi = G.inverse()
    Gh_inv = np.linalg.inv(l2_representation(G))
    assert in_group(Gi)
    assert group_defect(Gi) <= 2 * max(group_defect(G), 1e-16) * np.linalg.norm(Gh_inv, 2) ** 2 + 1e-14


def test_intertwiner_is_homomorphism_and_one_parameter():
    G1, G2 = random_group_element(3), random_group_element(4)
    U1, U2, U12 = intertwiner(G1), intertwiner(G2), intertwiner(G1 @ G2)
    np.testing.assert_allclose(U12, U1 @ U2, atol=1e-10)
    assert np.allclose(intertwiner(TwoNormOperator.identity(INTERVAL, 16)), np.eye(16))
    X = random_lie_element(10, INTERVAL, seed=9, scale=1.0)
    S_hat = -1j * l2_representation(X)
    w, v = np.linalg.eigh(0.5 * (S_hat + S_hat.conj().T))
    for t in (0.3, 1.7):
        expected = (v * np.exp(1j * t * w)) @ v.conj().T
        np.testing.assert_allclose(intertwiner(matrix_exp(t * X)), expected, atol=1e-12)


# ---------------------------------------------------------------- symmetrizable operators


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 30))
def test_symmetrizable_norm_bound_and_real_spectrum(seed, N):
    rng = np.random.default_rng(seed)
    Hh = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    X = TwoNormOperator.from_l2(Hh + Hh.conj().T, INTERVAL)
    assert is_symmetrizable(X)
    assert l2_norm(X) <= h1_norm(X) + 1e-10
    assert np.max(np.abs(np.linalg.eigvals(l2_representation(X)).imag)) <= 1e-8 * max(1, l2_norm(X))
    Y = dieudonne_factor(X)
    assert np.max(np.abs(Y - Y.conj().T)) <= 1e-10 * max(1.0, np.abs(Y).max())
    r = np.diag(1 / basis_gamma(INTERVAL, N).gamma)
    np.testing.assert_allclose(r @ X.mat, Y @ r, atol=1e-10 * max(1.0, np.abs(X.mat).max()))


def test_dieudonne_rejects_non_symmetrizable():
    X = random_lie_element(6, INTERVAL, seed=2)
    with pytest.raises(ValueError):
        dieudonne_factor(X)


def test_similarity_preserves_spectrum():
    from twonorm.spectra import match_spectra

    X = TwoNormOperator.on(INTERVAL, np.random.default_rng(5).standard_normal((20, 20)))
    assert match_spectra(np.linalg.eigvals(X.mat), np.linalg.eigvals(l2_representation(X))) <= 1e-8 * h1_norm(X)


# ---------------------------------------------------------------- serialization


@pytest.mark.parametrize("domain", [INTERVAL, DISK, DomainSpec.weyl(2, 3.0), DomainSpec.fourier([-1, 0, 1])])
def test_json_round_trip_is_bit_exact(domain):
    N = 3 if domain.kind.value == "FourierGrid" else 7
    rng = np.random.default_rng(11)
    X = TwoNormOperator.on(domain, rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)) / 3)
    Y = operator_from_json(operator_to_json(X))
    assert Y.domain == X.domain and Y.gamma == X.gamma
    assert np.array_equal(Y.mat, X.mat)


def test_json_rejects_wrong_shape():
    import json

    d = json.loads(operator_to_json(TwoNormOperator.identity(INTERVAL, 2)))
    d["N"] = 3
    with pytest.raises(ValueError):
        operator_from_json(json.dumps(d))

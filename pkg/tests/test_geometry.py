import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hasimoto import geometry as geo
from hasimoto.errors import ConfigError, DomainError
from hasimoto.geometry import ConstK, FlowParams, Grassmann, Sphere2

from . import oracles
from .conftest import BACKENDS

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _offdiag(man, V):
    return man.offdiag(np.asarray(V, dtype=complex))


# ---------------------------------------------------------------- metric / J

def test_grassmann_unit_metric():
    man = Grassmann(2, 1)
    X = _offdiag(man, [[1.0]])
    assert man.metric(man.origin(), X, X) == pytest.approx(oracles.G21_UNIT_METRIC)


def test_sphere_orthogonal_metric():
    man = Sphere2()
    u = np.array([0.0, 0.0, 1.0])
    assert man.metric(u, np.array([1.0, 0, 0]), np.array([0, 1.0, 0])) == 0.0


def test_sphere_complex_structure_is_cross_product():
    man = Sphere2()
    out = man.J(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(out, [0.0, 1.0, 0.0])


def test_grassmann_complex_structure_multiplies_block_by_i():
    man = Grassmann(3, 1)
    V = np.array([[1.0 + 2j, -0.5j]])
    out = man.J(man.origin(), _offdiag(man, V))
    np.testing.assert_allclose(out, _offdiag(man, 1j * V), atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, name=st.sampled_from(sorted(BACKENDS)))
def test_metric_is_j_invariant_and_j_squares_to_minus_one(seed, name):
    man = BACKENDS[name]
    rng = np.random.default_rng(seed)
    u = man.random_point(rng)
    X, Y = man.random_tangent(u, rng), man.random_tangent(u, rng)
    JX, JY = man.J(u, X), man.J(u, Y)
    scale = 1.0 + abs(man.metric(u, X, X)) + abs(man.metric(u, Y, Y))
    assert abs(man.metric(u, JX, JY) - man.metric(u, X, Y)) <= 1e-12 * scale
    assert abs(man.metric(u, JX, Y) + man.metric(u, X, JY)) <= 1e-12 * scale
    assert abs(man.metric(u, X, JX)) <= 1e-12 * scale
    np.testing.assert_allclose(man.J(u, JX), -X, atol=1e-12)


# ---------------------------------------------------------------- projection

def test_grassmann_projection_keeps_off_diagonal_blocks():
    man = Grassmann(3, 1)
    rng = np.random.default_rng(1)
    H = man.random_ambient(rng)
    out = man.project(man.origin(), H)
    expected = np.zeros_like(H)
    expected[:1, 1:] = H[:1, 1:]
    expected[1:, :1] = H[1:, :1]
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_sphere_projection_removes_normal():
    man = Sphere2()
    u = np.array([0.6, 0.0, 0.8])
    H = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(man.project(u, H), H - (H @ u) * u)
    np.testing.assert_allclose(man.project(u, u), 0.0, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, name=st.sampled_from(sorted(BACKENDS)))
def test_projection_idempotent_and_self_adjoint(seed, name):
    man = BACKENDS[name]
    rng = np.random.default_rng(seed)
    u = man.random_point(rng)
    H, G = man.random_ambient(rng), man.random_ambient(rng)
    P = man.project(u, H)
    np.testing.assert_allclose(man.project(u, P), P, atol=1e-12)
    lhs = man.ambient_inner(man.project(u, H), G)
    rhs = man.ambient_inner(H, man.project(u, G))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))
    assert float(man.tangent_violation(u, P)) <= 1e-10


def test_checked_projection_rejects_non_hermitian():
    man = Grassmann(2, 1)
    base = geo.ManifoldPoint(man, man.origin())
    with pytest.raises(DomainError):
        geo.tangent_project(base, np.array([[0, 1], [0, 0]], dtype=complex))


# ---------------------------------------------------------------- curvature

def test_g21_holomorphic_sectional_curvature():
    man = Grassmann(2, 1)
    u = man.origin()
    e = _offdiag(man, [[1.0]])
    Je = man.J(u, e)
    assert man.metric(u, man.curvature(u, e, Je, Je), e) == pytest.approx(oracles.G21_HOLOMORPHIC_SECTIONAL)


def test_curvature_vanishes_on_repeated_slot(backend, rng):
    u = backend.random_point(rng)
    X, Z = backend.random_tangent(u, rng), backend.random_tangent(u, rng)
    np.testing.assert_allclose(backend.curvature(u, X, X, Z), 0.0, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(seed=seeds, name=st.sampled_from(sorted(BACKENDS)))
def test_kahler_curvature_axioms(seed, name):
    man = BACKENDS[name]
    rng = np.random.default_rng(seed)
    worst = geo.curvature_axioms(man, man.random_point(rng), rng, trials=5)
    assert max(worst.values()) <= 1e-10, worst


def test_constk_commutes_with_j(rng):
    man = ConstK(3, 2.0)
    u = man.random_point(rng)
    X, Y, Z = (man.random_tangent(u, rng) for _ in range(3))
    np.testing.assert_allclose(
        man.curvature(u, X, Y, man.J(u, Z)), man.J(u, man.curvature(u, X, Y, Z)), atol=1e-12
    )


@pytest.mark.parametrize("K", [4.0, 1.0, 2.5])
def test_constk_matches_constant_holomorphic_curvature_formula(K, rng):
    man = ConstK(3, K)
    u = man.random_point(rng)
    X, Y, Z = (man.random_tangent(u, rng) for _ in range(3))
    h, J = (lambda A, B: man.metric(u, A, B)), (lambda A: man.J(u, A))
    expected = (K / 4) * (
        h(Y, Z) * X - h(X, Z) * Y + h(J(Y), Z) * J(X) - h(J(X), Z) * J(Y) + 2 * h(X, J(Y)) * J(Z)
    )
    np.testing.assert_allclose(man.curvature(u, X, Y, Z), expected, atol=1e-12)


def test_grassmann_k0_one_matches_constk_four(rng):
    G, C = Grassmann(3, 1), ConstK(2, 4.0)
    u = G.random_point(rng)
    X, Y, Z = (G.random_tangent(u, rng) for _ in range(3))
    np.testing.assert_allclose(G.curvature(u, X, Y, Z), C.curvature(u, X, Y, Z), atol=1e-12)
    assert G.metric(u, X, Y) == pytest.approx(C.metric(u, X, Y), abs=1e-12)


# ---------------------------------------------------------------- retraction

def test_sphere_retraction_normalises():
    np.testing.assert_allclose(Sphere2().retract(np.array([0.0, 0.0, 2.0])), [0.0, 0.0, 1.0])


def test_grassmann_retraction_near_origin(rng):
    man = Grassmann(4, 2)
    A0 = man.origin()
    noise = man.random_ambient(rng)
    out = man.retract(A0 + 1e-6 * noise)
    assert np.max(np.abs(out - A0)) <= 1e-5
    np.testing.assert_allclose(man.retract(out), out, atol=1e-13)


def test_grassmann_retraction_is_top_eigenspace_projector(rng):
    man = Grassmann(3, 1)
    H = man.random_ambient(rng)
    w, V = np.linalg.eigh(H)
    top = V[:, -1:]
    np.testing.assert_allclose(man.retract(H), top @ top.conj().T, atol=1e-12)


def test_retraction_failure_raises_on_degenerate_spectrum():
    from hasimoto.errors import RetractionError

    with pytest.raises(RetractionError):
        Grassmann(2, 1).retract(np.eye(2, dtype=complex))


# ---------------------------------------------------------------- value types

def test_point_validation():
    with pytest.raises(DomainError):
        geo.ManifoldPoint(Sphere2(), np.array([0.0, 0.0, 1.1]))
    with pytest.raises(DomainError):
        geo.ManifoldPoint(Grassmann(2, 1), np.eye(2))


def test_tangent_validation():
    base = geo.ManifoldPoint(Sphere2(), np.array([0.0, 0.0, 1.0]))
    with pytest.raises(DomainError):
        geo.TangentVector(base, np.array([0.0, 0.0, 1.0]))


def test_checked_operations_agree_with_raw_methods(rng):
    man = Grassmann(3, 1)
    base = geo.ManifoldPoint(man, man.random_point(rng))
    X = geo.tangent_project(base, man.random_ambient(rng))
    Y = geo.tangent_project(base, man.random_ambient(rng))
    assert geo.metric(X, Y) == pytest.approx(man.metric(base.value, X.V, Y.V))
    np.testing.assert_allclose(geo.complex_structure(X).V, man.J(base.value, X.V))
    R = geo.curvature(X, Y, X)
    np.testing.assert_allclose(R.V, man.curvature(base.value, X.V, Y.V, X.V))
    other = geo.ManifoldPoint(man, man.random_point(rng))
    with pytest.raises(DomainError):
        geo.metric(X, geo.tangent_project(other, man.random_ambient(rng)))


def test_descriptor_roundtrip(backend):
    assert geo.manifold_from_descriptor(backend.descriptor()) == backend


def test_unknown_descriptor():
    with pytest.raises(DomainError):
        geo.manifold_from_descriptor({"name": "torus"})


# ---------------------------------------------------------------- parameters

@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(-5, 5), beta=st.floats(0.1, 5), gamma=st.floats(-5, 5))
def test_energy_parameter_map(alpha, beta, gamma):
    p = FlowParams.from_energy(alpha, beta, gamma)
    assert p.a == beta
    assert p.b == beta + 8 * gamma
    assert p.c == 1.5 * (p.a - p.b)
    assert p.lam == -alpha
    assert p.hamiltonian


def test_zero_fourth_order_coefficient_rejected():
    with pytest.raises(ConfigError):
        FlowParams(0.0, 1.0, 0.0, 1.0)


def test_inconsistent_source_rejected():
    with pytest.raises(ConfigError):
        FlowParams(1.0, 1.0, 0.5, 0.0, source=(0.0, 1.0, 0.0))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hasimoto import flow_q
from hasimoto.errors import ConfigError, DomainError
from hasimoto.experiments import gauge_study, ratios, scalar_nls_gap, specialization_suite
from hasimoto.geometry import FlowParams, Grassmann, random_frame
from hasimoto.profiles import gaussian_envelope, random_profile
from hasimoto.tensor_lab import STensorField, s_from_frame, s_grassmann

from . import oracles

L, M = 20.0, 129


def test_d_coefficients():
    assert flow_q.d_coeffs(FlowParams(1.0, 1.0, 0.0, 0.0)) == pytest.approx(oracles.D_COEFFS_110)
    d = flow_q.d_coeffs(FlowParams(1.0, 0.0, 1.5, 1.0))
    assert (d[0], d[3]) == pytest.approx((oracles.D_COEFFS_SPHERE_B0["d1"], oracles.D_COEFFS_SPHERE_B0["d4"]))
    assert flow_q.d_coeffs(FlowParams.from_energy(0.0, 1.0, 0.0))[0] == oracles.D1_ENERGY_BETA1_GAMMA0


@settings(max_examples=30, deadline=None)
@given(beta=st.floats(0.1, 3), gamma=st.floats(-2, 2))
def test_d_coefficients_match_energy_form(beta, gamma):
    d = flow_q.d_coeffs(FlowParams.from_energy(0.0, beta, gamma))
    assert d[0] == pytest.approx(-2 * beta + 16 * gamma, abs=1e-12)
    assert d[1] == pytest.approx(8 * gamma, abs=1e-12)


def test_delta_coefficients():
    d = flow_q.delta_coeffs(1.0, -2.5)
    assert (d[0], d[1], d[4]) == pytest.approx((oracles.DELTA_1, oracles.DELTA_2, oracles.DELTA_5))


# ---------------------------------------------------------------- kernels

def _random_field(man, rng):
    pts = np.stack([man.random_point(rng) for _ in range(5)])
    E = np.stack([random_frame(man, u, rng) for u in pts])
    return s_from_frame(man, pts, E).S


@pytest.mark.parametrize("shape", [(3, 1), (4, 2)])
def test_fast_nonlocal_density_matches_literal_sum(shape, rng):
    man = Grassmann(*shape)
    S = _random_field(man, rng)
    n = man.n
    Q = rng.standard_normal((5, n)) + 1j * rng.standard_normal((5, n))
    Qx = rng.standard_normal((5, n)) + 1j * rng.standard_normal((5, n))
    fast = flow_q.f1_kernel(S, Q, Qx, 0.7, -1.3)
    slow = flow_q.f1_literal(S, Q, Qx, 0.7, -1.3)
    np.testing.assert_allclose(fast, slow, atol=1e-12 * np.max(np.abs(slow)))


@pytest.mark.parametrize("kappa", [1.0, 4.0, 0.3])
def test_scalar_nonlocal_density_collapses(kappa, rng):
    Q = rng.standard_normal((7, 1)) + 1j * rng.standard_normal((7, 1))
    Qx = rng.standard_normal((7, 1)) + 1j * rng.standard_normal((7, 1))
    b, c = 0.4, -0.9
    f1 = flow_q.f1_kernel(np.full((1, 1, 1, 1), kappa / 2, complex), Q, Qx, b, c, const=True)
    m = np.abs(Q[:, 0]) ** 2
    dq4 = 2 * m * 2 * np.real(Qx[:, 0] * np.conj(Q[:, 0]))  # d/dx |Q|^4
    np.testing.assert_allclose(f1[:, 0, 0], -(c / 4) * kappa**2 * dq4, atol=1e-13)


@pytest.mark.parametrize("variant,kw,n", [
    ("riemann", {"kappa": 2.0}, 1),
    ("constk", {"K": 3.0, "n": 2}, 2),
    ("grassmann", {"k0": 2, "m0": 2}, 4),
    ("mns", {"k0": 1, "m0": 2}, 2),
])
@pytest.mark.parametrize("scheme", ["fd", "spectral"])
def test_zero_profile_is_a_fixed_point(variant, kw, n, scheme):
    sysq = flow_q.QSystem(variant, FlowParams(1.0, 0.5, -0.3, 0.7), L, 33, scheme, **kw)
    Q = np.zeros((33, n), complex)
    assert not sysq.rhs(Q).any()
    assert not sysq.step(Q, 1e-3).any()


def test_specializations_agree_on_a_few_profiles():
    out = specialization_suite(np.random.default_rng(5), trials=3, M=257)
    for name, gaps in out.items():
        assert gaps["rhs"] <= 1e-12, (name, gaps)


def test_constant_flag_matches_sampled_field(rng):
    S = s_grassmann(1, 2).astype(complex)
    p = FlowParams(1.0, 0.5, 0.2, -0.4)
    Q = random_profile(L, M, 2, rng).Q
    const = flow_q.QSystem.constant_s(S, p, L, M)
    sampled = flow_q.QSystem("generic", p, L, M, S=STensorField(np.broadcast_to(S, (M,) + S.shape).copy()))
    np.testing.assert_allclose(sampled.nonlinear(Q), const.nonlinear(Q), atol=1e-12)


def test_grassmann_without_nonlocal_terms_ignores_the_anchor(rng):
    p = FlowParams.from_energy(0.3, 1.0, -0.125)
    assert p.b == 0.0
    q = flow_q.QSystem("grassmann", p, L, M, k0=2, m0=2)
    r = flow_q.QSystem("mns", p, L, M, k0=2, m0=2)
    Q = random_profile(L, M, 4, rng).Q
    np.testing.assert_array_equal(q.nonlinear(Q), r.nonlinear(Q))


def test_scalar_fourth_order_nls_scaling():
    assert scalar_nls_gap(np.random.default_rng(2), trials=5) <= 1e-9


def test_scalar_fourth_order_nls_zero():
    ops = flow_q.make_ops("spectral", L, 33)
    assert not flow_q.ode_4shro(np.zeros(33, complex), 1.0, -2.5, ops).any()


# ---------------------------------------------------------------- stepping

@pytest.mark.parametrize("scheme", ["fd", "spectral"])
def test_linear_evolution_conserves_mass(scheme):
    p = FlowParams(1.0, 0.0, 0.0, 0.5)
    sysq = flow_q.QSystem.constant_s(np.zeros((1, 1, 1, 1)), p, L, M, scheme)
    Q = gaussian_envelope(L, M, 1, 0.3, 2.0, 0.5).Q
    m0 = sysq.mass(Q)
    for _ in range(50):
        Q = sysq.step(Q, 1e-2)
    assert abs(sysq.mass(Q) - m0) <= 1e-10 * m0


def test_time_stepping_is_second_order():
    p = FlowParams.from_energy(0.0, 1.0, 0.1)
    sysq = flow_q.QSystem("grassmann", p, L, 65, k0=1, m0=2)
    Q0 = gaussian_envelope(L, 65, 2, 0.3, 2.0, 0.5, seed=1).Q
    T = 0.05

    def run(n):
        Q = Q0
        for _ in range(n):
            Q = sysq.step(Q, T / n)
        return Q

    ref = run(64)
    errs = [np.linalg.norm(run(n) - ref) for n in (4, 8, 16)]
    assert all(3.0 <= r <= 5.5 for r in ratios(errs)), errs


def test_system_validation():
    p = FlowParams(1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ConfigError):
        flow_q.QSystem("bogus", p, L, 33)
    with pytest.raises(ConfigError):
        flow_q.QSystem("generic", p, L, 33)
    with pytest.raises(ConfigError):
        flow_q.make_ops("chebyshev", L, 33)
    sysq = flow_q.QSystem("riemann", p, L, 33)
    with pytest.raises(DomainError):
        sysq.rhs(np.zeros((33, 2), complex))


@pytest.mark.parametrize("scheme", ["fd", "spectral"])
def test_cumulative_integral_of_a_derivative(scheme):
    ops = flow_q.make_ops(scheme, L, 257)
    x = np.linspace(-L, L, 257)
    g = np.exp(-(x / 2) ** 2)
    F = ops.cumint(ops.d(g, 1))
    tol = 1e-12 if scheme == "spectral" else 2e-3  # trapezoid error dx^2/12 * g''
    np.testing.assert_allclose(F, g - g[0], atol=tol)


# ---------------------------------------------------------------- gauge

def test_gauge_is_identity_without_nonlocal_terms():
    p = FlowParams.from_energy(0.0, 1.0, -0.125)
    out = gauge_study(1, 2, p, L, 65, steps=20, dt=1e-3)
    assert out["identity_gauge"] == 0.0


def test_gauge_is_a_pointwise_isometry(rng):
    g = flow_q.GaugeState.identity(2, 3)
    ops = flow_q.make_ops("fd", L, M)
    q = random_profile(L, M, 6, rng).as_matrix(2)
    for _ in range(5):
        g = flow_q.gauge_evolve(g, q, 0.05, FlowParams(1.0, 2.0, -1.5, 0.0), ops)
    q2 = flow_q.gauge_apply(g, q)
    np.testing.assert_allclose(np.linalg.norm(q2, axis=(1, 2)), np.linalg.norm(q, axis=(1, 2)), atol=1e-13)
    assert g.unitarity_defect() <= 1e-13


def test_gauge_maps_onto_the_origin_anchored_system():
    p = FlowParams.from_energy(0.5, 1.0, 0.1)
    out = gauge_study(1, 2, p, L, 65, steps=200, dt=5e-4)
    assert out["unitarity"] <= 1e-12
    assert out["trace_invariance"] <= 1e-12
    assert out["reduced_form_gap"] <= 1e-3 * out["ungauged_gap"]

"""Numerical experiments shared by the command line and the test-suite.

Each function returns plain floats, lists and dicts so that results can be
written to JSON without further conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import flow_geo, flow_q
from .frames import (
    ComplexProfile,
    DiscreteCurve,
    build_frame,
    co_diagonal_lift,
    hasimoto_transform,
    reconstruct,
)
from .errors import ConfigError
from .geometry import (
    ConstK,
    FlowParams,
    Grassmann,
    KahlerManifold,
    Sphere2,
    _ProjectorModel,
    curvature_axioms,
    dagger,
    random_frame,
)
from .profiles import gaussian_envelope, great_circle_bump, random_profile, random_smooth_curve
from .tensor_lab import (
    STensorField,
    contract,
    identity_report,
    s_const_k,
    s_from_frame,
    s_grassmann,
)


def relative_l2(a, b) -> float:
    num = float(np.linalg.norm(np.asarray(a) - np.asarray(b)))
    den = float(np.linalg.norm(b))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def phase_aligned_l2(a, b) -> float:
    """``min_theta |a - e^{i theta} b| / |b|``."""
    a, b = np.asarray(a), np.asarray(b)
    ip = np.vdot(b, a)
    phase = ip / abs(ip) if abs(ip) > 0 else 1.0
    return relative_l2(a, phase * b)


def ratios(errors) -> list[float]:
    return [float(e0 / e1) if e1 > 0 else math.inf for e0, e1 in zip(errors[:-1], errors[1:])]


def closed_form_s(man: KahlerManifold) -> np.ndarray:
    if isinstance(man, Sphere2):
        return np.full((1, 1, 1, 1), man.kappa / 2.0)
    if isinstance(man, ConstK):
        return s_const_k(man.dim, man.K)
    if isinstance(man, Grassmann):
        return s_grassmann(man.k0, man.m0).astype(float)
    raise ConfigError(f"no closed form for {man!r}")


# ---------------------------------------------------------------------------
# Curvature tensors
# ---------------------------------------------------------------------------

def identity_suite(man: KahlerManifold, rng: np.random.Generator, frames: int = 5) -> dict:
    """Worst violation of every identity over random points and random unitary frames."""
    worst: dict[str, float] = {}
    for _ in range(frames):
        u = man.random_point(rng)
        for k, v in curvature_axioms(man, u, rng, trials=4).items():
            worst[k] = max(worst.get(k, 0.0), v)
        field_ = s_from_frame(man, u, random_frame(man, u, rng))
        for name, v in identity_report(field_):
            worst[name] = max(worst.get(name, 0.0), v)
    return worst


def closed_form_identities(man: KahlerManifold) -> dict:
    S = closed_form_s(man)
    return dict(identity_report(STensorField(S.astype(complex))))


def contraction_error(man: KahlerManifold, rng: np.random.Generator, trials: int = 1000) -> float:
    """Max |contract(S, <U>, <V>, <W>) - <R(U, V) W>| over random frames and triples."""
    worst = 0.0
    per_frame = 50
    for start in range(0, trials, per_frame):
        u = man.random_point(rng)
        E = random_frame(man, u, rng)
        S = s_from_frame(man, u, E).S
        count = min(per_frame, trials - start)
        ub = np.broadcast_to(u, (count,) + u.shape)
        U, V, W = (man.random_tangent(ub, rng) for _ in range(3))
        Eb = np.broadcast_to(E, (count,) + E.shape)
        c = lambda X: man.coords(ub, Eb, X)
        lhs = contract(S, c(U), c(V), c(W))
        rhs = c(man.curvature(ub, U, V, W))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def closed_form_agreement(man: _ProjectorModel, L: float, M: int, seed: int) -> dict:
    """S from lifted frames and from transported frames against the closed form."""
    curve = random_smooth_curve(man, L, M, seed)
    ref = closed_form_s(man)
    lift = co_diagonal_lift(curve)
    E_inf = man.canonical_frame()
    # the lifted frame is exactly orthonormal at C A0 C*, which matches the node to discretisation accuracy
    u_hat = lift.C @ man.origin() @ dagger(lift.C)
    E_lift = lift.C[:, None] @ E_inf[None] @ dagger(lift.C)[:, None]
    S_lift = s_from_frame(man, u_hat, E_lift).S
    S_par = s_from_frame(man, curve.points, build_frame(curve).E).S
    jumps = np.max(np.abs(np.diff(S_par, axis=0)), axis=(1, 2, 3, 4)) / curve.dx
    return {
        "lift_frames": float(np.max(np.abs(S_lift - ref))),
        "parallel_frames": float(np.max(np.abs(S_par - ref))),
        "max_dS_dx": float(np.max(jumps)),
        "lift_point_gap": float(np.max(np.abs(u_hat - curve.points))),
    }


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

def roundtrip_error(man: KahlerManifold, L: float, M: int, seed: int) -> float:
    curve = random_smooth_curve(man, L, M, seed)
    Q = hasimoto_transform(curve, build_frame(curve))
    back = reconstruct(Q, man, curve.u_inf)
    return float(np.max(man.distance(curve.points, back.points)))


def block_identity_error(man: _ProjectorModel, L: float, M: int, seed: int) -> float:
    curve = random_smooth_curve(man, L, M, seed)
    Q = hasimoto_transform(curve, build_frame(curve))
    lift = co_diagonal_lift(curve)
    return float(np.max(np.abs(Q.as_matrix(man.k0) + lift.C12)))


# ---------------------------------------------------------------------------
# Transformed systems
# ---------------------------------------------------------------------------

def _random_params(rng) -> FlowParams:
    a = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
    return FlowParams(a, rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2))


def specialization_suite(rng: np.random.Generator, trials: int = 100, L: float = 20.0, M: int = 257,
                         scheme: str = "spectral") -> dict:
    """Relative sup-norm gaps between overlapping kernels, on random data and parameters.

    Each entry holds ``rhs`` (full time derivative) and ``nonlinear`` (the part
    that actually differs between kernels).
    """
    out: dict[str, dict] = {}

    def record(name, A: flow_q.QSystem, B: flow_q.QSystem, Q):
        ra, rb = A.rhs(Q), B.rhs(Q)
        na, nb = A.nonlinear(Q), B.nonlinear(Q)
        e = out.setdefault(name, {"rhs": 0.0, "nonlinear": 0.0})
        e["rhs"] = max(e["rhs"], float(np.max(np.abs(ra - rb)) / np.max(np.abs(rb))))
        e["nonlinear"] = max(e["nonlinear"], float(np.max(np.abs(na - nb)) / np.max(np.abs(nb))))

    Sys = flow_q.QSystem
    for _ in range(trials):
        p = _random_params(rng)
        kappa = rng.uniform(0.25, 4.0)
        Q1 = random_profile(L, M, 1, rng).Q
        record("generic=riemann", Sys.constant_s(flow_q.s_for("riemann", kappa=kappa), p, L, M, scheme),
               Sys("riemann", p, L, M, scheme, kappa=kappa), Q1)
        K = rng.uniform(0.5, 4.0)
        Q3 = random_profile(L, M, 3, rng).Q
        record("generic=constk", Sys.constant_s(flow_q.s_for("constk", n=3, K=K), p, L, M, scheme),
               Sys("constk", p, L, M, scheme, K=K, n=3), Q3)
        Q4 = random_profile(L, M, 4, rng).Q
        record("generic=grassmann", Sys.constant_s(flow_q.s_for("grassmann", k0=2, m0=2), p, L, M, scheme),
               Sys("grassmann", p, L, M, scheme, k0=2, m0=2), Q4)
        record("grassmann(k0=1)=constk(K=4)", Sys("grassmann", p, L, M, scheme, k0=1, m0=3),
               Sys("constk", p, L, M, scheme, K=4.0, n=3), Q3)
        record("grassmann(1,1)=riemann(kappa=4)", Sys("grassmann", p, L, M, scheme, k0=1, m0=1),
               Sys("riemann", p, L, M, scheme, kappa=4.0), Q1)
    return out


def scalar_nls_gap(rng: np.random.Generator, trials: int = 20, L: float = 20.0, M: int = 257,
                   scheme: str = "spectral") -> float:
    """Sphere kernel (lam = 1, c = 3(a-b)/2) against the scalar fourth-order NLS via q = sqrt(kappa) Q / 2."""
    worst = 0.0
    for _ in range(trials):
        a = rng.uniform(0.5, 2.0)
        b = rng.uniform(-2.0, 2.0)
        kappa = rng.uniform(0.5, 4.0)
        p = FlowParams(a, b, 1.5 * (a - b), 1.0)
        sysq = flow_q.QSystem("riemann", p, L, M, scheme, kappa=kappa)
        Q = random_profile(L, M, 1, rng).Q
        s = math.sqrt(kappa) / 2.0
        lhs = s * sysq.rhs(Q)[:, 0]
        rhs = flow_q.ode_4shro(s * Q[:, 0], a, -(5 * a - b) / 2, sysq.ops)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
    return worst


# ---------------------------------------------------------------------------
# Gauge
# ---------------------------------------------------------------------------

def gauge_study(k0: int, m0: int, params: FlowParams, L: float = 20.0, M: int = 129, steps: int = 1000,
                dt: float = 2e-4, seed: int = 0, scheme: str = "fd") -> dict:
    """Integrate the matrix system with the gauge alongside the gauge-reduced system."""
    n = k0 * m0
    base = flow_q.QSystem("grassmann", params, L, M, scheme, k0=k0, m0=m0)
    reduced = flow_q.QSystem("mns", params, L, M, scheme, k0=k0, m0=m0)
    Q = gaussian_envelope(L, M, n, 0.3, 2.0, 0.5, seed=seed).Q
    Q_red = Q.copy()
    g = flow_q.GaugeState.identity(k0, m0)
    trace_gap = 0.0
    abs_gap = 0.0
    for _ in range(steps):
        Q_next = base.step(Q, dt)
        g = flow_q.gauge_evolve(g, base.to_matrix(Q), dt, params, base.ops, q_next=base.to_matrix(Q_next))
        Q = Q_next
        Q_red = reduced.step(Q_red, dt)
    q = base.to_matrix(Q)
    qg = flow_q.gauge_apply(g, q)
    tr = lambda X: np.real(np.trace(X @ dagger(X), axis1=-2, axis2=-1))
    trace_gap = float(np.max(np.abs(tr(qg) - tr(q))))
    abs_gap = float(np.max(np.abs(np.linalg.norm(qg, axis=(1, 2)) - np.linalg.norm(q, axis=(1, 2)))))
    return {
        "unitarity": g.unitarity_defect(),
        "trace_invariance": trace_gap,
        "abs_profile_identity": abs_gap,
        "identity_gauge": float(max(np.max(np.abs(g.y - np.eye(m0))), np.max(np.abs(g.z - np.eye(k0))))),
        "reduced_form_gap": relative_l2(qg, reduced.to_matrix(Q_red)),
        "ungauged_gap": relative_l2(q, reduced.to_matrix(Q_red)),
        "T": steps * dt,
    }


# ---------------------------------------------------------------------------
# Geometric flow against the transformed system
# ---------------------------------------------------------------------------

def q_system_for(man: KahlerManifold, params: FlowParams, L: float, M: int, scheme: str = "fd",
                 variant: str = "closed") -> flow_q.QSystem:
    if variant == "generic":
        return flow_q.QSystem.constant_s(closed_form_s(man), params, L, M, scheme)
    if isinstance(man, Sphere2):
        return flow_q.QSystem("riemann", params, L, M, scheme, kappa=man.kappa)
    if isinstance(man, ConstK):
        return flow_q.QSystem("constk", params, L, M, scheme, K=man.K, n=man.dim)
    if isinstance(man, Grassmann):
        return flow_q.QSystem("grassmann", params, L, M, scheme, k0=man.k0, m0=man.m0)
    raise ConfigError(f"no transformed system for {man!r}")


def initial_curve(man: KahlerManifold, spec: dict, L: float, M: int) -> DiscreteCurve:
    kind = spec.get("kind", "gaussian_envelope")
    if kind == "gaussian_envelope":
        Q0 = gaussian_envelope(L, M, man.n, float(spec.get("amplitude", 0.3)), float(spec.get("width", 2.0)),
                               float(spec.get("carrier", 0.0)), float(spec.get("centre", 0.0)), spec.get("seed"))
        return reconstruct(Q0, man)
    if kind == "great_circle_bump":
        if man.n != 1:
            raise ConfigError("great_circle_bump is a scalar profile")
        Q0 = great_circle_bump(L, M, float(spec.get("amplitude", 0.3)), float(spec.get("width", 2.0)))
        return reconstruct(Q0, man)
    if kind == "random_smooth":
        return random_smooth_curve(man, L, M, int(spec.get("seed", 0)), float(spec.get("size", 0.3)))
    if kind == "zero":
        return reconstruct(ComplexProfile(np.zeros((M, man.n), complex), L), man)
    raise ConfigError(f"unknown initial data kind {kind!r}")


def energy_triple(params: FlowParams) -> tuple[float, float, float] | None:
    if params.source is not None:
        return params.source
    if params.hamiltonian:
        return (-params.lam, params.a, (params.b - params.a) / 8.0)
    return None


@dataclass
class EquivalenceResult:
    M: int
    times: list = field(default_factory=list)
    abs_gap: list = field(default_factory=list)
    phase_gap: list = field(default_factory=list)
    raw_gap: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    mass_geo: list = field(default_factory=list)
    mass_q: list = field(default_factory=list)
    constraint: list = field(default_factory=list)
    geo_steps: int = 0
    q_steps: int = 0

    @property
    def discrepancy(self) -> float:
        return max(self.abs_gap)

    @property
    def energy_drift(self) -> float:
        if not self.energy or self.energy[0] is None:
            return math.nan
        e0 = self.energy[0]
        scale = abs(e0) if e0 != 0 else 1.0
        return max(abs(e - e0) for e in self.energy) / scale

    def summary(self) -> dict:
        return {
            "M": self.M,
            "discrepancy_abs": self.discrepancy,
            "discrepancy_phase_aligned": max(self.phase_gap),
            "discrepancy_raw": max(self.raw_gap),
            "energy_drift": self.energy_drift,
            "max_constraint_violation": max(self.constraint),
            "geo_steps": self.geo_steps,
            "q_steps": self.q_steps,
        }


def equivalence_run(man: KahlerManifold, params: FlowParams, L: float, M: int, T: float,
                    initial: dict, samples: int = 4, sigma: float = 0.2, q_scheme: str = "fd",
                    q_factor: float = 0.05, q_variant: str = "closed") -> EquivalenceResult:
    """Geometric flow then transform, against the transformed system integrated directly."""
    curve0 = initial_curve(man, initial, L, M)
    Q0 = hasimoto_transform(curve0, build_frame(curve0)).Q
    sysq = q_system_for(man, params, L, M, q_scheme, q_variant)
    triple = energy_triple(params)
    res = EquivalenceResult(M)

    dt_geo = flow_geo.stable_dt(curve0.dx, params.a, sigma)
    per_geo = max(1, math.ceil(T / samples / dt_geo))
    h_geo = T / samples / per_geo
    per_q = max(1, math.ceil(T / samples / (q_factor * curve0.dx**2)))
    h_q = T / samples / per_q
    res.geo_steps, res.q_steps = per_geo * samples, per_q * samples

    state = flow_geo.GeoFlowState(curve0, 0.0, params)
    Q = Q0.copy()
    for s in range(samples + 1):
        if s > 0:
            for _ in range(per_geo):
                state = flow_geo.step_geo(state, h_geo)
            for _ in range(per_q):
                Q = sysq.step(Q, h_q)
        curve = state.curve
        Qg = hasimoto_transform(curve, build_frame(curve)).Q
        res.times.append(s * T / samples)
        res.abs_gap.append(relative_l2(np.linalg.norm(Qg, axis=1), np.linalg.norm(Q, axis=1)))
        res.phase_gap.append(phase_aligned_l2(Qg, Q))
        res.raw_gap.append(relative_l2(Qg, Q))
        res.energy.append(flow_geo.energy(curve, *triple) if triple else None)
        res.mass_geo.append(sysq.mass(Qg))
        res.mass_q.append(sysq.mass(Q))
        res.constraint.append(flow_geo.constraint_violation(curve))
        if not np.all(np.isfinite(Q)) or not np.all(np.isfinite(curve.points)):
            raise FloatingPointError("non-finite values during the equivalence run")
    return res

"""Transformed complex systems, their IMEX integrator and the matrix gauge.

Every kernel returns the *nonlinear part* ``N(Q)`` of

    i Q_t + (a d_x^4 + lam d_x^2) Q = N(Q),

and :meth:`QSystem.rhs` assembles the time derivative
``Q_t = i (a d_x^4 + lam d_x^2) Q - i N(Q)``.

Spatial calculus is pluggable. ``"fd"`` uses 4th-order stencils with zero
ghost values and cumulative trapezoids; ``"spectral"`` treats the last node
as the periodic image of the first and integrates Fourier modes exactly,
which keeps product-rule and antiderivative identities at round-off level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import LinAlgError, expm, solve_banded

from . import stencils
from .errors import ConfigError, DomainError
from .geometry import FlowParams, dagger
from .tensor_lab import STensorField, s_const_k, s_grassmann


def d_coeffs(p: FlowParams) -> tuple[float, float, float, float, float, float]:
    a, b, c = p.a, p.b, p.c
    return (-a - b - 2 * c, -a + b, a + b - 2 * c, -b - 2 * c, a - b - 2 * c, a + b)


# ---------------------------------------------------------------------------
# Spatial operators
# ---------------------------------------------------------------------------

_FD = {
    1: np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]),
    2: np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
    3: np.array([1 / 8, -1.0, 13 / 8, 0.0, -13 / 8, 1.0, -1 / 8]),
    4: np.array([-1 / 6, 2.0, -13 / 2, 28 / 3, -13 / 2, 2.0, -1 / 6]),
}


class FiniteDifferenceOps:
    """Dirichlet-truncated stencils; values beyond the grid are taken as zero."""

    name = "fd"

    def __init__(self, L: float, M: int):
        self.L, self.M = float(L), int(M)
        self.dx = 2.0 * self.L / (self.M - 1)

    def d(self, f: np.ndarray, order: int) -> np.ndarray:
        w = _FD[order]
        h = len(w) // 2
        pad = np.zeros((h,) + f.shape[1:], dtype=f.dtype)
        g = np.concatenate([pad, f, pad], axis=0)
        out = np.zeros_like(f)
        for k, wk in enumerate(w):
            if wk:
                out += wk * g[k : k + self.M]
        return out / self.dx**order

    def cumint(self, g: np.ndarray) -> np.ndarray:
        return cumulative_trapezoid(g, dx=self.dx, axis=0, initial=0)

    def _banded(self, a: float, lam: float) -> np.ndarray:
        # symmetric band of a*D4 + lam*D2 on the interior nodes 1..M-2
        m = self.M - 2
        diag = {k: a * _FD[4][3 + k] / self.dx**4 for k in range(-3, 4)}
        for k in range(-2, 3):
            diag[k] += lam * _FD[2][2 + k] / self.dx**2
        ab = np.zeros((7, m))
        for k, v in diag.items():
            ab[3 - k] = v
        return ab

    def make_linear_solver(self, a: float, lam: float, tau: float):
        """Returns ``step(Y, F)`` solving ``(1 - i tau Lop) X = (1 + i tau Lop) Y + F`` with zero boundaries."""
        ab = self._banded(a, lam)
        lhs = -1j * tau * ab.astype(complex)
        lhs[3] += 1.0

        def step(Y, forcing):
            rhs = Y + 1j * tau * self.linear(Y, a, lam) + forcing
            X = np.zeros_like(Y)
            try:
                X[1:-1] = solve_banded((3, 3), lhs, rhs[1:-1])
            except (LinAlgError, ValueError) as exc:
                raise FloatingPointError(f"implicit linear solve failed: {exc}") from None
            return X

        return step

    def linear(self, Q: np.ndarray, a: float, lam: float) -> np.ndarray:
        return a * self.d(Q, 4) + lam * self.d(Q, 2)


class SpectralOps:
    """Fourier calculus on nodes ``0..M-2``; node ``M-1`` is the image of node 0."""

    name = "spectral"

    def __init__(self, L: float, M: int):
        self.L, self.M = float(L), int(M)
        self.dx = 2.0 * self.L / (self.M - 1)
        N = self.M - 1
        self.k = 2.0 * np.pi * np.fft.fftfreq(N, d=self.dx)
        if N % 2 == 0:
            self.k_odd = self.k.copy()
            self.k_odd[N // 2] = 0.0
        else:
            self.k_odd = self.k
        self.x0 = np.arange(self.M) * self.dx  # offsets from the left end

    def _wrap(self, body: np.ndarray) -> np.ndarray:
        return np.concatenate([body, body[:1]], axis=0)

    def _pad(self, arr, ndim):
        return arr.reshape((-1,) + (1,) * (ndim - 1))

    def d(self, f: np.ndarray, order: int) -> np.ndarray:
        k = self.k_odd if order % 2 else self.k
        fh = np.fft.fft(f[:-1], axis=0)
        out = np.fft.ifft(self._pad((1j * k) ** order, f.ndim) * fh, axis=0)
        if not np.iscomplexobj(f):
            out = out.real
        return self._wrap(out)

    def cumint(self, g: np.ndarray) -> np.ndarray:
        N = self.M - 1
        gh = np.fft.fft(g[:-1], axis=0) / N
        mean = gh[0]
        k = self.k_odd.copy()
        k[k == 0] = 1.0
        ratio = gh / self._pad(1j * k, g.ndim)
        ratio[0] = 0.0
        if N % 2 == 0:
            ratio[N // 2] = 0.0
        P = np.fft.ifft(ratio, axis=0) * N
        P = self._wrap(P)
        out = mean[None] * self._pad(self.x0, g.ndim) + (P - P[:1])
        return out.real if not np.iscomplexobj(g) else out

    def linear(self, Q, a, lam):
        return a * self.d(Q, 4) + lam * self.d(Q, 2)

    def make_linear_solver(self, a: float, lam: float, tau: float):
        sym = a * self.k**4 - lam * self.k**2
        fac_plus = 1.0 + 1j * tau * sym
        fac_minus = 1.0 - 1j * tau * sym

        def step(Y, forcing):
            Yh = np.fft.fft(Y[:-1], axis=0)
            Fh = np.fft.fft(forcing[:-1], axis=0)
            Xh = (self._pad(fac_plus, Y.ndim) * Yh + Fh) / self._pad(fac_minus, Y.ndim)
            return self._wrap(np.fft.ifft(Xh, axis=0))

        return step


def make_ops(scheme: str, L: float, M: int):
    if scheme == "fd":
        return FiniteDifferenceOps(L, M)
    if scheme == "spectral":
        return SpectralOps(L, M)
    raise ConfigError(f"unknown spatial scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def _c3(S, X, Y, Z, const):
    spec = "jpqr,mp,mq,mr->mj" if const else "mjpqr,mp,mq,mr->mj"
    return np.einsum(spec, S, X, np.conj(Y), Z, optimize=True)


def _c2(S, X, Y, const):
    # sum_{p,q} S^j_{pqr} X_p conj(Y_q) -> (m, j, r)
    spec = "jpqr,mp,mq->mjr" if const else "mjpqr,mp,mq->mjr"
    return np.einsum(spec, S, X, np.conj(Y), optimize=True)


def f1_kernel(S, Q, Qx, b, c, const=False):
    """Nonlocal density ``f^1_{j,r}`` (shape ``(M, n, n)``), O(n^4) per node."""
    T1 = _c3(S, Qx, Q, Q, const)  # sum S^q_{abg} Qx_a conj(Q_b) Q_g
    T2 = _c3(S, Q, Qx, Q, const)  # sum S^q_{abg} Q_a conj(Qx_b) Q_g
    s1 = _c2(S, Q, T1, const)
    s2 = _c2(S, T1, Q, const)
    s3 = _c2(S, Q, T2, const)
    s4 = _c2(S, T2, Q, const)
    return -(b + 2 * c) * (s1 + s2) + b * (s3 + s4)


def f1_literal(S, Q, Qx, b, c, const=False):
    """Direct five-index evaluation of ``f^1``, kept as an oracle."""
    Sn = S if not const else np.broadcast_to(S, (Q.shape[0],) + S.shape)
    Sc = np.conj(Sn)
    Qc, Qxc = np.conj(Q), np.conj(Qx)
    e = lambda spec, *ops: np.einsum(spec, *ops, optimize=True)
    t1 = e("mjpqr,mqabg,ma,mb,mg,mp->mjr", Sn, Sc, Qxc, Q, Qc, Q)
    t2 = e("mjpqr,mpabg,ma,mb,mg,mq->mjr", Sn, Sn, Qx, Qc, Q, Qc)
    t3 = e("mjpqr,mqabg,ma,mb,mg,mp->mjr", Sn, Sc, Qc, Qx, Qc, Q)
    t4 = e("mjpqr,mpabg,ma,mb,mg,mq->mjr", Sn, Sn, Q, Qxc, Q, Qc)
    return -(b + 2 * c) * (t1 + t2) + b * (t3 + t4)


def nonlinear_generic(Q, field_S: STensorField, params: FlowParams, ops, f1=f1_kernel):
    S = field_S.S
    const = field_S.constant or S.ndim == 4
    if const and S.ndim == 5:
        S = S[0]
    d1, d2, d3, d4, d5, d6 = d_coeffs(params)
    a, b, c, lam = params.a, params.b, params.c, params.lam
    Qx, Qxx = ops.d(Q, 1), ops.d(Q, 2)
    N = (
        d1 * _c3(S, Qxx, Q, Q, const)
        + d2 * _c3(S, Q, Qxx, Q, const)
        + d3 * _c3(S, Qx, Qx, Q, const)
        + d4 * _c3(S, Qx, Q, Qx, const)
        - lam * _c3(S, Q, Q, Q, const)
    )
    dens = f1(S, Q, Qx, b, c, const)
    if not const:
        Sx = stencils.d1(S, ops.dx)
        Sxx = stencils.d2(S, ops.dx)
        N = N + d5 * _c3(Sx, Qx, Q, Q, False) + d6 * _c3(Sx, Q, Qx, Q, False)
        dens = dens + (
            -a * (_c2(Sxx, Qx, Q, False) + _c2(Sxx, Q, Qx, False))
            - 3 * a * _c2(Sx, Qx, Qx, False)
            + lam * _c2(Sx, Q, Q, False)
        )
    return N + np.einsum("mjr,mr->mj", ops.cumint(dens), Q)


def nonlinear_riemann(Q, kappa, params: FlowParams, ops):
    d1, d2, d3, d4, _, _ = d_coeffs(params)
    q = Q[:, 0]
    qx, qxx = ops.d(q, 1), ops.d(q, 2)
    m = np.abs(q) ** 2
    k = kappa
    N = (
        0.5 * k * (d1 * qxx * m + d2 * np.conj(qxx) * q**2 + d3 * np.abs(qx) ** 2 * q + d4 * qx**2 * np.conj(q))
        - 0.5 * params.lam * k * m * q
        - 0.25 * params.c * k**2 * m**2 * q
    )
    return N[:, None]


def nonlinear_constk(Q, K, params: FlowParams, ops):
    d1, d2, d3, d4, _, _ = d_coeffs(params)
    b, c, lam = params.b, params.c, params.lam
    Qx, Qxx = ops.d(Q, 1), ops.d(Q, 2)
    m = np.sum(np.abs(Q) ** 2, axis=1)[:, None]
    dot = lambda X, Y: np.sum(X * np.conj(Y), axis=1)[:, None]  # sum_r X_r conj(Y_r)
    N = (
        0.25 * K * d1 * (m * Qxx + dot(Qxx, Q) * Q)
        + 0.5 * K * d2 * dot(Q, Qxx) * Q
        + 0.25 * K * d3 * (dot(Q, Qx) * Qx + np.sum(np.abs(Qx) ** 2, axis=1)[:, None] * Q)
        + 0.5 * K * d4 * dot(Qx, Q) * Qx
        - 0.5 * K * lam * m * Q
        - (b + 4 * c) * K**2 / 16 * m**2 * Q
    )
    dm = 2.0 * np.real(dot(Qx, Q))
    dens = Q[:, :, None] * np.conj(Q)[:, None, :] * dm[:, :, None]
    return N + b * K**2 / 8 * np.einsum("mjr,mr->mj", ops.cumint(dens), Q)


def _grassmann_blocks(q, ops):
    qs = dagger(q)
    qx, qxx = ops.d(q, 1), ops.d(q, 2)
    qsx = dagger(qx)
    inner_a = qs @ (qx @ qs + q @ qsx) @ q  # q^*(q q^*)_x q
    inner_b = q @ (qsx @ q + qs @ qx) @ qs  # q (q^* q)_x q^*
    return qs, qx, qxx, inner_a, inner_b


def nonlinear_grassmann(q, params: FlowParams, ops, origin: str = "left"):
    """Matrix kernel on ``k0 x m0`` profiles.

    ``origin="left"`` integrates the nonlocal blocks from the left end;
    ``origin="zero"`` integrates from ``x = 0`` (the gauge-reduced form).
    """
    d1, d2, d3, d4, _, _ = d_coeffs(params)
    b, c, lam = params.b, params.c, params.lam
    qs, qx, qxx, ia, ib = _grassmann_blocks(q, ops)
    qxs, qxxs = dagger(qx), dagger(qxx)
    qqs = q @ qs
    N = (
        d1 * (qxx @ qs @ q + qqs @ qxx)
        + 2 * d2 * q @ qxxs @ q
        + d3 * (qx @ qxs @ q + q @ qxs @ qx)
        + 2 * d4 * qx @ qs @ qx
        - 2 * lam * qqs @ q
        + (-2 * b - 4 * c) * qqs @ qqs @ q
    )
    Ia, Ib = ops.cumint(ia), ops.cumint(ib)
    if origin == "zero":
        Ia = Ia - _at_zero(Ia, ops)[None]
        Ib = Ib - _at_zero(Ib, ops)[None]
    return N + 2 * b * (q @ Ia + Ib @ q)


def _at_zero(F, ops):
    x = np.linspace(-ops.L, ops.L, ops.M)
    i = int(np.searchsorted(x, 0.0))
    if abs(x[i]) <= 1e-12 * ops.L:
        return F[i]
    w = -x[i - 1] / (x[i] - x[i - 1])
    return (1 - w) * F[i - 1] + w * F[i]


def ode_4shro(q, gamma1: float, gamma2: float, ops) -> np.ndarray:
    """Time derivative of the scalar fourth-order NLS."""
    g1, g2 = gamma1, gamma2
    dl1, dl2, dl3 = 3 * g1 + 2 * g2, 2 * g1 + g2, 9 * g1 + 4 * g2
    dl4, dl5 = 3.5 * g1 + 2 * g2, g1 + 0.5 * g2
    q = np.asarray(q)
    qx, qxx, q4 = ops.d(q, 1), ops.d(q, 2), ops.d(q, 4)
    m = np.abs(q) ** 2
    X = (
        g1 * q4
        + qxx
        + 2 * m * q
        - 4 * dl1 * m * qxx
        - 4 * dl2 * q**2 * np.conj(qxx)
        - 4 * dl3 * q * np.abs(qx) ** 2
        - 4 * dl4 * qx**2 * np.conj(q)
        - 24 * dl5 * m**2 * q
    )
    return 1j * X


def delta_coeffs(gamma1: float, gamma2: float) -> tuple[float, float, float, float, float]:
    g1, g2 = gamma1, gamma2
    return (3 * g1 + 2 * g2, 2 * g1 + g2, 9 * g1 + 4 * g2, 3.5 * g1 + 2 * g2, g1 + 0.5 * g2)


# ---------------------------------------------------------------------------
# System specification and stepping
# ---------------------------------------------------------------------------

VARIANTS = ("generic", "riemann", "constk", "grassmann", "mns")


@dataclass
class QSystem:
    """Transformed system on a grid.

    ``variant`` picks the kernel; ``S`` (generic), ``kappa`` (riemann), ``K``
    and ``n`` (constk), ``k0`` and ``m0`` (grassmann, mns) parametrise it.
    Profiles are ``(M, n)`` complex arrays, matrix variants flatten
    column-major.
    """

    variant: str
    params: FlowParams
    L: float
    M: int
    scheme: str = "fd"
    S: STensorField | None = None
    kappa: float = 1.0
    K: float = 4.0
    n: int = 1
    k0: int = 1
    m0: int = 1
    ops: object = field(init=False, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        self.ops = make_ops(self.scheme, self.L, self.M)
        if self.variant == "generic":
            if self.S is None:
                raise ConfigError("generic variant needs an S tensor")
            self.n = self.S.n
            if self.S.S.ndim == 5 and self.S.S.shape[0] != self.M:
                raise DomainError("S field is sampled on a different grid")
        elif self.variant == "riemann":
            self.n = 1
        elif self.variant in ("grassmann", "mns"):
            self.n = self.k0 * self.m0
        self._solvers = {}

    @classmethod
    def constant_s(cls, S: np.ndarray, params, L, M, scheme="fd"):
        return cls("generic", params, L, M, scheme, S=STensorField(np.asarray(S, dtype=complex), constant=True))

    def _check(self, Q):
        if Q.shape != (self.M, self.n):
            raise DomainError(f"profile shape {Q.shape} does not match system ({self.M}, {self.n})")

    def to_matrix(self, Q):
        return np.swapaxes(Q.reshape(self.M, self.m0, self.k0), 1, 2)

    def from_matrix(self, q):
        return np.swapaxes(q, 1, 2).reshape(self.M, self.n)

    def nonlinear(self, Q: np.ndarray) -> np.ndarray:
        self._check(Q)
        p, ops = self.params, self.ops
        if self.variant == "generic":
            return nonlinear_generic(Q, self.S, p, ops)
        if self.variant == "riemann":
            return nonlinear_riemann(Q, self.kappa, p, ops)
        if self.variant == "constk":
            return nonlinear_constk(Q, self.K, p, ops)
        origin = "zero" if self.variant == "mns" else "left"
        return self.from_matrix(nonlinear_grassmann(self.to_matrix(Q), p, ops, origin))

    def linear(self, Q):
        return self.ops.linear(Q, self.params.a, self.params.lam)

    def rhs(self, Q: np.ndarray) -> np.ndarray:
        return 1j * self.linear(Q) - 1j * self.nonlinear(Q)

    def _solver(self, tau):
        if tau not in self._solvers:
            self._solvers[tau] = self.ops.make_linear_solver(self.params.a, self.params.lam, tau)
        return self._solvers[tau]

    def step(self, Q: np.ndarray, dt: float) -> np.ndarray:
        """Crank-Nicolson on the linear part, explicit midpoint on the rest."""
        Fn = -1j * self.nonlinear(Q)
        Qh = self._solver(0.25 * dt)(Q, 0.5 * dt * Fn)
        Fh = -1j * self.nonlinear(Qh)
        out = self._solver(0.5 * dt)(Q, dt * Fh)
        if self.scheme == "fd":
            out[0] = out[-1] = 0.0
        return out

    def mass(self, Q) -> float:
        return float(stencils.trapezoid(np.sum(np.abs(Q) ** 2, axis=1), self.ops.dx))


def step_q(Q, system: QSystem, dt: float):
    return system.step(Q, dt)


# ---------------------------------------------------------------------------
# Gauge
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaugeState:
    y: np.ndarray  # m0 x m0
    z: np.ndarray  # k0 x k0
    t: float = 0.0

    @classmethod
    def identity(cls, k0: int, m0: int) -> "GaugeState":
        return cls(np.eye(m0, dtype=complex), np.eye(k0, dtype=complex), 0.0)

    def unitarity_defect(self) -> float:
        dy = np.linalg.norm(dagger(self.y) @ self.y - np.eye(self.y.shape[0]))
        dz = np.linalg.norm(dagger(self.z) @ self.z - np.eye(self.z.shape[0]))
        return float(max(dy, dz))


def gauge_generators(q: np.ndarray, params: FlowParams, ops) -> tuple[np.ndarray, np.ndarray]:
    """``A(t)`` (m0 x m0) and ``B(t)`` (k0 x k0) from a matrix snapshot."""
    coef = 2.0 * params.b
    if coef == 0.0:
        return (np.zeros((q.shape[2], q.shape[2]), complex), np.zeros((q.shape[1], q.shape[1]), complex))
    _, _, _, ia, ib = _grassmann_blocks(q, ops)
    A = coef * 1j * _at_zero(ops.cumint(ia), ops)
    B = coef * 1j * _at_zero(ops.cumint(ib), ops)
    # generators are anti-Hermitian in exact arithmetic
    return 0.5 * (A - dagger(A)), 0.5 * (B - dagger(B))


def gauge_evolve(g: GaugeState, q, dt: float, params: FlowParams, ops, q_next=None) -> GaugeState:
    A, B = gauge_generators(q, params, ops)
    if q_next is not None:
        A2, B2 = gauge_generators(q_next, params, ops)
        A, B = 0.5 * (A + A2), 0.5 * (B + B2)
    if not A.any() and not B.any():
        return GaugeState(g.y, g.z, g.t + dt)
    return GaugeState(expm(dt * A) @ g.y, g.z @ expm(dt * B), g.t + dt)


def gauge_apply(g: GaugeState, q: np.ndarray) -> np.ndarray:
    return g.z @ q @ g.y


def s_for(variant: str, **kw) -> np.ndarray:
    """Closed-form S for the constant-curvature variants."""
    if variant == "riemann":
        return np.full((1, 1, 1, 1), kw["kappa"] / 2.0, dtype=complex)
    if variant == "constk":
        return s_const_k(kw["n"], kw["K"]).astype(complex)
    if variant in ("grassmann", "mns"):
        return s_grassmann(kw["k0"], kw["m0"]).astype(complex)
    raise ConfigError(f"no closed-form S for {variant!r}")

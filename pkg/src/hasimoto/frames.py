"""Parallel frames along discrete curves and the curve <-> Q correspondence.

A curve lives on the uniform grid ``x_i = -L + i*dx`` and is anchored at the
left end, where the frame equals a fixed reference frame. Frames are carried
node to node by a Cayley (implicit midpoint) step of the transport generator
``[P_x, P]`` built from the two tangent projectors, projected onto the new
tangent space and re-orthonormalised with the Hermitian Gram matrix
``h(., .) + i h(., J .)`` so that ``e_{n+p} = J e_p`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import stencils
from .errors import DomainError, FrameError
from .geometry import Grassmann, KahlerManifold, _ProjectorModel, dagger, manifold_from_descriptor

DECAY_TOL = 1e-8
PIVOT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    manifold: KahlerManifold
    L: float
    points: np.ndarray = field(repr=False)
    u_inf: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.points.shape[0]

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.M - 1)

    @property
    def x(self) -> np.ndarray:
        return stencils.grid(self.L, self.M)

    def ux(self) -> np.ndarray:
        """Tangent derivative ``u_x`` at every node."""
        return self.manifold.project(self.points, stencils.d1(self.points, self.dx))

    def decay_report(self) -> dict:
        man = self.manifold
        speed = np.sqrt(np.maximum(man.metric(self.points, self.ux(), self.ux()), 0.0))
        scale = max(1.0, float(np.max(speed)))
        return {
            "anchor": float(man.distance(self.points[0], self.u_inf)),
            "left_speed": float(speed[0]) / scale,
            "right_speed": float(speed[-1]) / scale,
            "constraint": float(np.max(man.point_violation(self.points))),
        }

    def check(self, tol: float = DECAY_TOL) -> None:
        rep = self.decay_report()
        bad = [k for k in ("anchor", "left_speed", "right_speed") if rep[k] > tol]
        if bad:
            raise DomainError(f"curve violates decay/anchoring ({', '.join(bad)}): {rep}")


@dataclass(frozen=True, eq=False)
class ParallelFrame:
    manifold: KahlerManifold
    E: np.ndarray = field(repr=False)  # (M, n, *ambient)
    frame_inf: np.ndarray = field(repr=False)

    def JE(self, points) -> np.ndarray:
        return self.manifold.J(points[:, None], self.E)


@dataclass(frozen=True, eq=False)
class ComplexProfile:
    Q: np.ndarray = field(repr=False)  # (M, n) complex
    L: float

    @property
    def M(self) -> int:
        return self.Q.shape[0]

    @property
    def n(self) -> int:
        return self.Q.shape[1]

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.M - 1)

    @property
    def x(self) -> np.ndarray:
        return stencils.grid(self.L, self.M)

    def mass(self) -> float:
        return float(stencils.trapezoid(np.sum(np.abs(self.Q) ** 2, axis=1), self.dx))

    def as_matrix(self, k0: int) -> np.ndarray:
        """Column-major ``k0 x m0`` view per node (``j = j2*k0 + j1``)."""
        m0 = self.n // k0
        return np.swapaxes(self.Q.reshape(self.M, m0, k0), 1, 2)

    @classmethod
    def from_matrix(cls, q: np.ndarray, L: float) -> "ComplexProfile":
        M, k0, m0 = q.shape
        return cls(np.swapaxes(q, 1, 2).reshape(M, k0 * m0), L)


# ---------------------------------------------------------------------------
# Frame transport
# ---------------------------------------------------------------------------

def orthonormalize(man: KahlerManifold, u, F) -> np.ndarray:
    """Complex Löwdin step: the closest J-paired orthonormal frame to ``F``."""
    amb = len(man.ambient_shape)
    ub = u[None, None]
    G = man.hpair(ub, np.expand_dims(F, 1), np.expand_dims(F, 0))  # G[q, s] = H(f_q, f_s)
    G = 0.5 * (G + dagger(G))
    w, V = np.linalg.eigh(G)
    if w[0] < PIVOT_TOL:
        raise FrameError(f"frame collapsed during re-orthonormalisation (pivot {w[0]:.2e})")
    W = np.conj((V / np.sqrt(w)) @ dagger(V))
    JF = man.J(u[None], F)
    ax = "abcd"[:amb]
    spec = f"qp,q{ax}->p{ax}"
    return np.einsum(spec, W.real, F) + np.einsum(spec, W.imag, JF)


def transport_step(man: KahlerManifold, a, b, E, sweeps: int = 3) -> np.ndarray:
    """Carry the frame ``E`` (tangent at ``a``) to the point ``b``."""
    Pa = lambda V: man.project(a, V)
    Pb = lambda V: man.project(b, V)

    def omega(V):
        D = Pb(V) - Pa(V)
        Pm = 0.5 * (Pa(V) + Pb(V))
        return (Pb(Pm) - Pa(Pm)) - 0.5 * (Pa(D) + Pb(D))

    E_new = E + omega(E)
    for _ in range(sweeps):
        E_new = E + 0.5 * omega(E + E_new)
    return orthonormalize(man, b, Pb(E_new))


def initial_frame(man: KahlerManifold, u0, frame_inf=None) -> np.ndarray:
    frame_inf = man.canonical_frame(u0) if frame_inf is None else np.asarray(frame_inf)
    return orthonormalize(man, u0, man.project(u0, frame_inf))


def build_frame(curve: DiscreteCurve, frame_inf=None) -> ParallelFrame:
    man = curve.manifold
    if frame_inf is None:
        frame_inf = man.canonical_frame(curve.u_inf)
    frame_inf = np.asarray(frame_inf)
    from .tensor_lab import frame_defect

    if float(frame_defect(man, curve.u_inf, frame_inf)) > 1e-8:
        raise FrameError("reference frame is not orthonormal at u_inf")
    E = np.empty((curve.M,) + frame_inf.shape, dtype=frame_inf.dtype)
    E[0] = initial_frame(man, curve.points[0], frame_inf)
    for i in range(curve.M - 1):
        E[i + 1] = transport_step(man, curve.points[i], curve.points[i + 1], E[i])
    return ParallelFrame(man, E, frame_inf)


def hasimoto_transform(curve: DiscreteCurve, frame: ParallelFrame) -> ComplexProfile:
    man = curve.manifold
    Q = man.coords(curve.points, frame.E, curve.ux())
    return ComplexProfile(np.asarray(Q, dtype=complex), curve.L)


def reconstruct(
    profile: ComplexProfile,
    manifold: KahlerManifold,
    u_inf=None,
    frame_inf=None,
    return_frame: bool = False,
):
    """Integrate ``u_x = sum (Re Q_p + Im Q_p J) e_p`` with Heun steps from the left end."""
    man = manifold
    u_inf = man.origin() if u_inf is None else np.asarray(u_inf)
    Q = profile.Q
    if Q.shape[1] != man.n:
        raise DomainError(f"profile has {Q.shape[1]} components, backend needs {man.n}")
    dx = profile.dx
    pts = np.empty((profile.M,) + tuple(man.ambient_shape), dtype=man.dtype)
    E = np.empty((profile.M, man.n) + tuple(man.ambient_shape), dtype=man.dtype)
    pts[0] = u_inf
    E[0] = initial_frame(man, u_inf, frame_inf)
    for i in range(profile.M - 1):
        u, F = pts[i], E[i]
        V = man.combine(u, Q[i], F)
        u_pred = man.retract(u + dx * V)
        F_pred = transport_step(man, u, u_pred, F, sweeps=1)
        V_pred = man.combine(u_pred, Q[i + 1], F_pred)
        pts[i + 1] = man.retract(u + 0.5 * dx * (V + V_pred))
        E[i + 1] = transport_step(man, u, pts[i + 1], F)
    curve = DiscreteCurve(man, profile.L, pts, u_inf)
    if return_frame:
        return curve, ParallelFrame(man, E, man.canonical_frame(u_inf) if frame_inf is None else frame_inf)
    return curve


# ---------------------------------------------------------------------------
# Co-diagonal lifting on Grassmannians
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Lift:
    C: np.ndarray = field(repr=False)  # (M, n0, n0) unitary
    gauge: np.ndarray = field(repr=False)  # C^* C_x per node
    k0: int = 1

    @property
    def C12(self) -> np.ndarray:
        return self.gauge[:, : self.k0, self.k0 :]

    def unitarity_defect(self) -> float:
        I = np.eye(self.C.shape[-1])
        return float(np.max(np.linalg.norm(dagger(self.C) @ self.C - I, axis=(-2, -1))))

    def diagonal_defect(self) -> float:
        k = self.k0
        return float(max(np.max(np.abs(self.gauge[:, :k, :k])), np.max(np.abs(self.gauge[:, k:, k:]))))


def _polar(C):
    U, _, Vh = np.linalg.svd(C)
    return U @ Vh


def co_diagonal_lift(curve: DiscreteCurve) -> Lift:
    """Unitary path with ``C_x = [u_x, u] C`` and ``C(-L) = I``."""
    man = curve.manifold
    if not isinstance(man, _ProjectorModel):
        raise DomainError("co-diagonal lifting needs a projector backend")
    A0 = man.origin()
    if float(man.distance(curve.points[0], A0)) > DECAY_TOL:
        raise DomainError("co-diagonal lifting starts from the origin projector")
    n0, dx = man.n0, curve.dx
    I = np.eye(n0)
    C = np.empty((curve.M, n0, n0), dtype=complex)
    C[0] = I
    P = curve.points
    for i in range(curve.M - 1):
        du = (P[i + 1] - P[i]) / dx
        um = 0.5 * (P[i] + P[i + 1])
        Om = 0.5 * dx * (du @ um - um @ du)
        C[i + 1] = _polar(np.linalg.solve(I - Om, (I + Om) @ C[i]))
    u_hat = C @ A0 @ dagger(C)
    ux = curve.ux()
    gauge = dagger(C) @ (ux @ u_hat - u_hat @ ux) @ C
    return Lift(C, gauge, man.k0)


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def _encode(a: np.ndarray):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.tolist()


def _decode(obj, complex_valued: bool) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if complex_valued:
        return a[..., 0] + 1j * a[..., 1]
    return a


def to_document(curve: DiscreteCurve | None = None, profile: ComplexProfile | None = None) -> dict:
    if curve is None and profile is None:
        raise DomainError("nothing to serialise")
    ref = curve if curve is not None else profile
    doc = {"grid": {"L": float(ref.L), "M": int(ref.M)}}
    if curve is not None:
        doc["backend"] = curve.manifold.descriptor()
        doc["points"] = _encode(curve.points)
        doc["u_inf"] = _encode(curve.u_inf)
    if profile is not None:
        doc["Q"] = _encode(np.asarray(profile.Q, dtype=complex))
    return doc


def from_document(doc: dict) -> tuple[DiscreteCurve | None, ComplexProfile | None]:
    try:
        L, M = float(doc["grid"]["L"]), int(doc["grid"]["M"])
        curve = profile = None
        if "points" in doc:
            man = manifold_from_descriptor(doc["backend"])
            cplx = man.dtype is complex
            pts = _decode(doc["points"], cplx)
            curve = DiscreteCurve(man, L, pts, _decode(doc["u_inf"], cplx))
            if curve.M != M:
                raise DomainError("grid.M does not match the number of points")
        if "Q" in doc:
            profile = ComplexProfile(_decode(doc["Q"], True), L)
    except (KeyError, TypeError, IndexError) as exc:
        raise DomainError(f"malformed curve document: {exc}") from None
    return curve, profile

"""Kähler target manifolds behind one array-level interface.

Three backends are provided:

* :class:`Sphere2` -- the round two-sphere of Gaussian curvature ``kappa``,
  points are unit vectors of R^3 and the metric is the Euclidean one divided
  by ``kappa``.
* :class:`Grassmann` -- the complex Grassmannian ``G_{n0,k0}`` realised as
  rank-``k0`` Hermitian projectors with ``h(X, Y) = Re tr(X Y^*) / 2``.
* :class:`ConstK` -- constant holomorphic sectional curvature ``K`` in complex
  dimension ``n``, realised as ``G_{n+1,1}`` with the metric multiplied by
  ``4 / K``.

All manifold methods act on raw numpy arrays and broadcast over any number of
leading axes, so a whole discrete curve (nodes on axis 0) is processed in one
call. Tangent vectors share the ambient representation of their base point.

The light :class:`ManifoldPoint` / :class:`TangentVector` wrappers and the
module level functions (:func:`metric`, :func:`curvature`, ...) add the base
point bookkeeping and validation used at API boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError, RetractionError

RETRACTION_GAP = 1e-8


def dagger(X: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(X, -1, -2))


def _rtrace(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # Re tr(X Y^*) without forming the product
    return np.real(np.sum(X * np.conj(Y), axis=(-2, -1)))


class KahlerManifold:
    """Common interface. Subclasses fill in the geometric primitives."""

    name: str = "abstract"
    n: int  # complex dimension
    ambient_shape: tuple[int, ...]
    dtype: Any

    # ------------------------------------------------------------------ geometry
    def metric(self, u, X, Y):
        raise NotImplementedError

    def J(self, u, X):
        raise NotImplementedError

    def project(self, u, H):
        raise NotImplementedError

    def curvature(self, u, X, Y, Z):
        raise NotImplementedError

    def retract(self, H):
        raise NotImplementedError

    def ambient_inner(self, X, Y):
        raise NotImplementedError

    # ----------------------------------------------------------------- plumbing
    def origin(self) -> np.ndarray:
        raise NotImplementedError

    def canonical_frame(self, u=None) -> np.ndarray:
        """Orthonormal ``e_1..e_n`` at ``u`` stacked on a new leading axis."""
        raise NotImplementedError

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def random_ambient(self, rng: np.random.Generator, shape=()) -> np.ndarray:
        raise NotImplementedError

    def point_violation(self, u) -> np.ndarray:
        raise NotImplementedError

    def tangent_violation(self, u, V) -> np.ndarray:
        raise NotImplementedError

    def distance(self, u, v) -> np.ndarray:
        """Chordal (ambient norm) distance, broadcast over leading axes."""
        return np.sqrt(np.maximum(self.ambient_inner(u - v, u - v), 0.0))

    def descriptor(self) -> dict:
        raise NotImplementedError

    # ------------------------------------------------------- derived helpers
    def random_tangent(self, u, rng: np.random.Generator) -> np.ndarray:
        H = self.random_ambient(rng, np.shape(u)[: np.ndim(u) - len(self.ambient_shape)])
        return self.project(u, H)

    def hpair(self, u, X, Y):
        """Hermitian pairing ``h(X, Y) + i h(X, JY)``, complex linear in X."""
        return self.metric(u, X, Y) + 1j * self.metric(u, X, self.J(u, Y))

    def scale(self, u, c, X):
        """Action of a complex scalar ``c`` on ``X`` through ``J``."""
        c = np.asarray(c)
        pad = (slice(None),) * c.ndim + (None,) * len(self.ambient_shape)
        return np.real(c)[pad] * X + np.imag(c)[pad] * self.J(u, X)

    def coords(self, u, frame, Xi):
        """Complex coordinates ``<Xi>_j`` against a frame.

        ``frame`` has shape ``(..., n, *ambient)``; the result has shape
        ``(..., n)``.
        """
        Xi = np.expand_dims(Xi, -1 - len(self.ambient_shape))
        ub = np.expand_dims(u, -1 - len(self.ambient_shape))
        return self.hpair(ub, Xi, frame)

    def combine(self, u, coeffs, frame):
        """Inverse of :meth:`coords`: ``sum_p (Re c_p + Im c_p J) e_p``."""
        ub = np.expand_dims(u, -1 - len(self.ambient_shape))
        terms = self.scale(ub, coeffs, frame)
        return np.sum(terms, axis=-1 - len(self.ambient_shape))


@dataclass(frozen=True)
class Sphere2(KahlerManifold):
    """Round sphere with Gaussian curvature ``kappa`` on unit vectors of R^3."""

    kappa: float = 1.0
    name = "sphere2"
    n = 1
    ambient_shape = (3,)
    dtype = float

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("Sphere2 needs a positive curvature")

    def metric(self, u, X, Y):
        return np.sum(X * Y, axis=-1) / self.kappa

    def ambient_inner(self, X, Y):
        return np.sum(X * Y, axis=-1)

    def J(self, u, X):
        u, X = np.broadcast_arrays(u, X)
        return np.cross(u, X)

    def project(self, u, H):
        return H - np.sum(u * H, axis=-1, keepdims=True) * u

    def curvature(self, u, X, Y, Z):
        # (1,3) tensor is invariant under the homothety h -> h / kappa
        yz = np.sum(Y * Z, axis=-1, keepdims=True)
        xz = np.sum(X * Z, axis=-1, keepdims=True)
        return yz * X - xz * Y

    def retract(self, H):
        H = np.asarray(H, dtype=float)
        norm = np.linalg.norm(H, axis=-1, keepdims=True)
        if np.any(norm < RETRACTION_GAP):
            raise RetractionError("sphere retraction of a vector shorter than 1e-8")
        return H / norm

    def origin(self):
        return np.array([0.0, 0.0, 1.0])

    def canonical_frame(self, u=None):
        u = self.origin() if u is None else np.asarray(u, dtype=float)
        axis = np.zeros(3)
        axis[np.argmin(np.abs(u))] = 1.0
        e = self.project(u, axis)
        e = e / np.linalg.norm(e) * np.sqrt(self.kappa)
        return e[None, :]

    def random_point(self, rng):
        v = rng.standard_normal(3)
        return v / np.linalg.norm(v)

    def random_ambient(self, rng, shape=()):
        return rng.standard_normal(tuple(shape) + (3,))

    def point_violation(self, u):
        return np.abs(np.linalg.norm(u, axis=-1) - 1.0)

    def tangent_violation(self, u, V):
        return np.abs(np.sum(u * V, axis=-1))

    def descriptor(self):
        return {"name": self.name, "kappa": float(self.kappa)}


class _ProjectorModel(KahlerManifold):
    """Rank-k0 Hermitian projectors in C^{n0 x n0} with a scaled metric."""

    dtype = complex

    @property
    def m0(self) -> int:
        return self.n0 - self.k0

    @property
    def metric_scale(self) -> float:
        return 1.0

    @property
    def ambient_shape(self):
        return (self.n0, self.n0)

    @property
    def n(self):
        return self.k0 * self.m0

    def metric(self, u, X, Y):
        return 0.5 * self.metric_scale * _rtrace(X, Y)

    def ambient_inner(self, X, Y):
        return _rtrace(X, Y)

    def J(self, u, X):
        return 1j * (u @ X - X @ u)

    def project(self, u, H):
        uH = u @ H
        return uH + H @ u - 2.0 * uH @ u

    def curvature(self, u, X, Y, Z):
        XY = X @ Y - Y @ X
        return XY @ Z - Z @ XY

    def retract(self, H):
        H = np.asarray(H, dtype=complex)
        H = 0.5 * (H + dagger(H))
        w, V = np.linalg.eigh(H)
        gap = w[..., self.m0] - w[..., self.m0 - 1] if self.m0 > 0 else np.inf
        if np.any(gap < RETRACTION_GAP):
            raise RetractionError("spectral gap below 1e-8 at the k0-th eigenvalue")
        top = V[..., :, self.m0:]
        return top @ dagger(top)

    def origin(self):
        A0 = np.zeros((self.n0, self.n0), dtype=complex)
        A0[: self.k0, : self.k0] = np.eye(self.k0)
        return A0

    def offdiag(self, V):
        """Embed a ``k0 x m0`` block (batched) as ``[[0, V], [V^*, 0]]``."""
        V = np.asarray(V, dtype=complex)
        out = np.zeros(V.shape[:-2] + (self.n0, self.n0), dtype=complex)
        out[..., : self.k0, self.k0 :] = V
        out[..., self.k0 :, : self.k0] = dagger(V)
        return out

    def _unitary_for(self, u):
        # columns: top-k0 eigenvectors first so that u = B A0 B^*
        w, V = np.linalg.eigh(0.5 * (u + dagger(u)))
        return np.concatenate([V[:, self.m0 :], V[:, : self.m0]], axis=1)

    def canonical_frame(self, u=None):
        """Frame ``e_j = B offdiag(E_(j1,j2)) B^*`` with ``j = j2*k0 + j1`` (0-based)."""
        E = np.zeros((self.n, self.k0, self.m0), dtype=complex)
        for j in range(self.n):
            j1, j2 = j % self.k0, j // self.k0
            E[j, j1, j2] = 1.0
        frame = self.offdiag(E) / np.sqrt(self.metric_scale)
        if u is not None and not np.allclose(u, self.origin(), atol=1e-14):
            B = self._unitary_for(np.asarray(u))
            frame = B @ frame @ dagger(B)
        return frame

    def random_point(self, rng):
        Z = rng.standard_normal((self.n0, self.n0)) + 1j * rng.standard_normal((self.n0, self.n0))
        B, _ = np.linalg.qr(Z)
        return B @ self.origin() @ dagger(B)

    def random_ambient(self, rng, shape=()):
        shape = tuple(shape) + (self.n0, self.n0)
        Z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return 0.5 * (Z + dagger(Z))

    def point_violation(self, u):
        herm = np.linalg.norm(u - dagger(u), axis=(-2, -1))
        idem = np.linalg.norm(u @ u - u, axis=(-2, -1))
        rank = np.abs(np.trace(u, axis1=-2, axis2=-1) - self.k0)
        return np.maximum(np.maximum(herm, idem), rank)

    def tangent_violation(self, u, V):
        herm = np.linalg.norm(V - dagger(V), axis=(-2, -1))
        tang = np.linalg.norm(V @ u + u @ V - V, axis=(-2, -1))
        return np.maximum(herm, tang)

    def block(self, X):
        """Upper-right ``k0 x m0`` block of ambient matrices."""
        return X[..., : self.k0, self.k0 :]


@dataclass(frozen=True)
class Grassmann(_ProjectorModel):
    """Complex Grassmannian ``G_{n0,k0}`` of rank-``k0`` projectors."""

    n0: int
    k0: int
    name = "grassmann"

    def __post_init__(self):
        if not (1 <= self.k0 < self.n0):
            raise DomainError(f"need 1 <= k0 < n0, got n0={self.n0}, k0={self.k0}")

    def descriptor(self):
        return {"name": self.name, "n0": int(self.n0), "k0": int(self.k0)}


@dataclass(frozen=True)
class ConstK(_ProjectorModel):
    """Constant holomorphic sectional curvature ``K`` in complex dimension ``n``.

    Realised on ``G_{n+1,1}`` with metric ``(4/K) * Re tr(X Y^*) / 2``. A
    homothety of the metric leaves the connection and the (1,3) curvature
    tensor unchanged, so only the metric and the unit frame are rescaled.
    """

    dim: int
    K: float = 4.0
    name = "constk"
    k0 = 1

    def __post_init__(self):
        if self.dim < 1 or not self.K > 0:
            raise DomainError("ConstK needs n >= 1 and K > 0")

    @property
    def n0(self):
        return self.dim + 1

    @property
    def metric_scale(self):
        return 4.0 / self.K

    def descriptor(self):
        return {"name": self.name, "n": int(self.dim), "K": float(self.K)}


def manifold_from_descriptor(desc: dict) -> KahlerManifold:
    name = desc.get("name")
    try:
        if name == "sphere2":
            return Sphere2(float(desc.get("kappa", 1.0)))
        if name == "grassmann":
            return Grassmann(int(desc["n0"]), int(desc["k0"]))
        if name == "constk":
            return ConstK(int(desc["n"]), float(desc.get("K", 4.0)))
    except KeyError as exc:
        raise DomainError(f"backend descriptor missing field {exc}") from None
    raise DomainError(f"unknown backend {name!r}")


# ---------------------------------------------------------------------------
# Checked value types and module level operations
# ---------------------------------------------------------------------------

POINT_TOL = {"sphere2": 1e-12, "grassmann": 1e-10, "constk": 1e-10}
TANGENT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    manifold: KahlerManifold
    value: np.ndarray = field(repr=False)

    def __post_init__(self):
        value = np.asarray(self.value, dtype=self.manifold.dtype)
        if value.shape != tuple(self.manifold.ambient_shape):
            raise DomainError(f"point shape {value.shape} does not match backend")
        viol = float(self.manifold.point_violation(value))
        if viol > POINT_TOL[self.manifold.name]:
            raise DomainError(f"not a point of {self.manifold.name}: violation {viol:.2e}")
        object.__setattr__(self, "value", value)

    def same_as(self, other: "ManifoldPoint") -> bool:
        return self.manifold == other.manifold and (
            self is other or np.array_equal(self.value, other.value)
        )


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: ManifoldPoint
    V: np.ndarray = field(repr=False)

    def __post_init__(self):
        man = self.base.manifold
        V = np.asarray(self.V, dtype=man.dtype)
        if V.shape != tuple(man.ambient_shape):
            raise DomainError("tangent vector shape does not match backend")
        viol = float(man.tangent_violation(self.base.value, V))
        if viol > TANGENT_TOL * max(1.0, float(np.max(np.abs(V)))):
            raise DomainError(f"vector is not tangent: violation {viol:.2e}")
        object.__setattr__(self, "V", V)


def _common_base(*vectors: TangentVector) -> ManifoldPoint:
    base = vectors[0].base
    for v in vectors[1:]:
        if not base.same_as(v.base):
            raise DomainError("tangent vectors live on different base points")
    return base


def metric(X: TangentVector, Y: TangentVector) -> float:
    base = _common_base(X, Y)
    return float(base.manifold.metric(base.value, X.V, Y.V))


def complex_structure(X: TangentVector) -> TangentVector:
    return TangentVector(X.base, X.base.manifold.J(X.base.value, X.V))


def tangent_project(base: ManifoldPoint, H) -> TangentVector:
    man = base.manifold
    H = np.asarray(H)
    if isinstance(man, _ProjectorModel) and not np.allclose(H, dagger(H), atol=1e-12):
        raise DomainError("Grassmann tangent projection needs a Hermitian matrix")
    return TangentVector(base, man.project(base.value, H.astype(man.dtype)))


def curvature(X: TangentVector, Y: TangentVector, Z: TangentVector) -> TangentVector:
    base = _common_base(X, Y, Z)
    man = base.manifold
    return TangentVector(base, man.curvature(base.value, X.V, Y.V, Z.V))


def retract(base: ManifoldPoint, H) -> ManifoldPoint:
    return ManifoldPoint(base.manifold, base.manifold.retract(np.asarray(H)))


@dataclass(frozen=True)
class FlowParams:
    """Coefficients of the fourth-order flow; ``from_energy`` applies the Hamiltonian map."""

    a: float
    b: float
    c: float
    lam: float
    source: tuple[float, float, float] | None = None

    def __post_init__(self):
        from .errors import ConfigError

        if self.a == 0:
            raise ConfigError("the fourth-order coefficient a must be non-zero")
        if self.source is not None:
            alpha, beta, gamma = self.source
            expected = (beta, beta + 8 * gamma, 1.5 * (beta - (beta + 8 * gamma)), -alpha)
            if (self.a, self.b, self.c, self.lam) != expected:
                raise ConfigError("coefficients do not match their (alpha, beta, gamma) source")

    @classmethod
    def from_energy(cls, alpha: float, beta: float, gamma: float) -> "FlowParams":
        b = beta + 8 * gamma
        return cls(beta, b, 1.5 * (beta - b), -alpha, (alpha, beta, gamma))

    @property
    def hamiltonian(self) -> bool:
        return abs(self.c - 1.5 * (self.a - self.b)) <= 1e-14 * max(1.0, abs(self.a), abs(self.b))

    def as_dict(self) -> dict:
        out = {"a": self.a, "b": self.b, "c": self.c, "lambda": self.lam}
        if self.source is not None:
            out["alpha"], out["beta"], out["gamma"] = self.source
        return out


def random_frame(man: KahlerManifold, u, rng: np.random.Generator) -> np.ndarray:
    """Canonical frame at ``u`` rotated by a random element of U(n)."""
    n = man.n
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U, _ = np.linalg.qr(Z)
    E = man.canonical_frame(u)
    u_b = np.broadcast_to(u, (n,) + np.shape(u))
    return man.combine(u_b, U.T, np.broadcast_to(E, (n,) + E.shape))


def curvature_axioms(man: KahlerManifold, u, rng: np.random.Generator, trials: int = 20) -> dict:
    """Largest violation of the Kähler curvature identities over random tangent quadruples."""
    worst = dict.fromkeys(
        ["antisymmetry", "bianchi", "pair_symmetry", "j_commutes", "j_slot", "metric_j_invariant", "j_skew"], 0.0
    )
    R = lambda X, Y, Z: man.curvature(u, X, Y, Z)
    J = lambda X: man.J(u, X)
    h = lambda X, Y: man.metric(u, X, Y)
    for _ in range(trials):
        X, Y, Z, W = (man.random_tangent(u, rng) for _ in range(4))
        checks = {
            "antisymmetry": np.abs(R(X, Y, Z) + R(Y, X, Z)).max(),
            "bianchi": np.abs(R(X, Y, Z) + R(Y, Z, X) + R(Z, X, Y)).max(),
            "pair_symmetry": max(abs(h(R(X, Y, Z), W) - h(R(Z, W, X), Y)),
                                 abs(h(R(X, Y, Z), W) - h(R(W, Z, Y), X))),
            "j_commutes": np.abs(R(X, Y, J(Z)) - J(R(X, Y, Z))).max(),
            "j_slot": max(np.abs(R(J(X), Y, Z) + R(X, J(Y), Z)).max(),
                          np.abs(R(J(X), Y, Z) - R(J(Y), X, Z)).max()),
            "metric_j_invariant": abs(h(J(X), J(Y)) - h(X, Y)),
            "j_skew": abs(h(J(X), Y) + h(X, J(Y))),
        }
        for k, v in checks.items():
            worst[k] = max(worst[k], float(v))
    return worst

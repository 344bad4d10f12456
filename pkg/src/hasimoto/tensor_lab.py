"""Frame-relative curvature coefficients and their algebraic identities.

Arrays are indexed ``S[..., j, p, q, r]`` (0-based, leading node axes allowed)
and hold the complex coefficients

    R^A = <R(e_p, e_q) e_r>_j,   R^B = <R(e_p, J e_q) e_r>_j,
    S = (R^A + i R^B) / 2,       T = (-R^A + i R^B) / 2,

with ``<Xi>_j = h(Xi, e_j) + i h(Xi, J e_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FrameError
from .geometry import KahlerManifold

FRAME_TOL = 1e-8


@dataclass(frozen=True)
class STensorField:
    """Per-node S tensor with optional directly computed R^A and R^B."""

    S: np.ndarray
    RA: np.ndarray | None = None
    RB: np.ndarray | None = None
    constant: bool = False

    @property
    def n(self) -> int:
        return self.S.shape[-1]

    @property
    def T(self) -> np.ndarray:
        if self.RA is not None and self.RB is not None:
            return 0.5 * (-self.RA + 1j * self.RB)
        return np.swapaxes(self.S, -3, -2)

    @property
    def R_A(self) -> np.ndarray:
        return self.RA if self.RA is not None else self.S - self.T

    @property
    def R_B(self) -> np.ndarray:
        return self.RB if self.RB is not None else -1j * (self.S + self.T)


def frame_defect(man: KahlerManifold, u, frame) -> np.ndarray:
    """Max deviation of the Hermitian Gram matrix from the identity, per node."""
    amb = len(man.ambient_shape)
    ub = np.expand_dims(u, (-1 - amb, -2 - amb))
    G = man.hpair(ub, np.expand_dims(frame, -1 - amb), np.expand_dims(frame, -2 - amb))
    n = G.shape[-1]
    return np.max(np.abs(G - np.eye(n)), axis=(-2, -1))


def s_from_frame(man: KahlerManifold, u, frame, check: bool = True) -> STensorField:
    """Evaluate R^A, R^B and S from a frame ``(..., n, *ambient)`` at ``u``."""
    u = np.asarray(u)
    frame = np.asarray(frame)
    amb = len(man.ambient_shape)
    n = frame.shape[-1 - amb]
    if check:
        defect = float(np.max(frame_defect(man, u, frame)))
        if defect > FRAME_TOL:
            raise FrameError(f"frame is not orthonormal (defect {defect:.2e})")

    def slot(k):
        # place the frame index on axis k of a (p, q, r) block
        axes = [-1 - amb - i for i in range(3) if i != 2 - k]
        return np.expand_dims(frame, tuple(axes))

    ub = np.expand_dims(u, tuple(-1 - amb - i for i in range(3)))
    X, Y, Z = slot(0), slot(1), slot(2)
    JY = man.J(ub, Y)
    RA_vec = man.curvature(ub, X, Y, Z)
    RB_vec = man.curvature(ub, X, JY, Z)
    # coordinates against e_j land on a new trailing axis; move it in front
    RA = np.moveaxis(man.coords(ub, _bcast_frame(frame, amb), RA_vec), -1, -4)
    RB = np.moveaxis(man.coords(ub, _bcast_frame(frame, amb), RB_vec), -1, -4)
    S = 0.5 * (RA + 1j * RB)
    return STensorField(S=S, RA=RA, RB=RB)


def _bcast_frame(frame, amb):
    # (..., n, *amb) -> (..., 1, 1, 1, n, *amb) so it pairs with (p, q, r) blocks
    return np.expand_dims(frame, tuple(-2 - amb - i for i in range(3)))


def s_const_k(n: int, K: float) -> np.ndarray:
    d = np.eye(n)
    return K / 4.0 * (
        np.einsum("qr,pj->jpqr", d, d) + np.einsum("pq,rj->jpqr", d, d)
    )


def s_grassmann(k0: int, m0: int) -> np.ndarray:
    """Closed form for the canonical Grassmann frame; entries are integers."""
    n = k0 * m0
    idx = np.arange(n)
    row, col = idx % k0, idx // k0
    R = row[:, None] == row[None, :]
    C = col[:, None] == col[None, :]
    first = np.einsum("pq,rj,qr,pj->jpqr", C, C, R, R)
    second = np.einsum("rq,pj,qp,rj->jpqr", C, C, R, R)
    return (first.astype(np.int64) + second.astype(np.int64))


def contract(S, U, V, W):
    """``<R(U, V) W>_j`` from frame coordinates of U, V, W."""
    S = np.asarray(S)
    U, V, W = (np.asarray(a) for a in (U, V, W))
    n = S.shape[-1]
    if S.shape[-4:] != (n, n, n, n) or not (U.shape[-1] == V.shape[-1] == W.shape[-1] == n):
        raise DomainError("contract: shape mismatch between S and the vectors")
    B = U[..., :, None] * np.conj(V[..., None, :]) - V[..., :, None] * np.conj(U[..., None, :])
    return np.einsum("...jpqr,...pq,...r->...j", S, B, W)


def _perm(X, spec):
    return np.einsum(spec, X)


IDENTITIES = ("R1", "R2", "R3", "R4", "R6", "R7", "R8", "TtoS", "tsu3")


def identity_report(field: STensorField | np.ndarray) -> list[tuple[str, float]]:
    """Sup-norm violation of each algebraic identity, in a fixed order."""
    if not isinstance(field, STensorField):
        field = STensorField(np.asarray(field))
    S, T, A, B = field.S, field.T, field.R_A, field.R_B
    # X^{q}_{r j p} and X^{p}_{j r q} re-indexed to position (j, p, q, r)
    rot1 = "...qrjp->...jpqr"
    rot2 = "...pjrq->...jpqr"
    sup = lambda X: float(np.max(np.abs(X))) if X.size else 0.0
    out = [
        ("R1", sup(A + np.swapaxes(A, -3, -2))),
        ("R2", sup(B - np.swapaxes(B, -3, -2))),
        ("R3", sup(A + _perm(A, "...jqrp->...jpqr") + _perm(A, "...jrpq->...jpqr"))),
        ("R4", sup(A - 1j * (_perm(B, "...jqrp->...jpqr") - _perm(B, "...jrpq->...jpqr")))),
        ("R6", max(sup(A.real - _perm(A, rot1).real), sup(A.real - _perm(A, rot2).real))),
        ("R7", max(sup(B.imag - _perm(B, rot1).imag), sup(B.imag - _perm(B, rot2).imag))),
        ("R8", max(sup(A.imag - _perm(B, rot1).real), sup(A.imag + _perm(B, rot2).real))),
        ("TtoS", sup(T - np.swapaxes(S, -3, -2))),
        ("tsu3", sup(S - np.swapaxes(S, -3, -1))),
    ]
    return out

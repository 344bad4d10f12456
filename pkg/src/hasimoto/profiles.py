"""Named initial data: smooth test curves and decaying complex profiles."""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.special import erf

from . import stencils
from .frames import ComplexProfile, DiscreteCurve
from .geometry import KahlerManifold, Sphere2, _ProjectorModel, dagger


def _ramps(x, rng, count):
    centres = rng.uniform(-5.0, 5.0, count)
    widths = rng.uniform(1.5, 3.0, count)
    return 0.5 * (1.0 + erf((x[:, None] - centres) / widths))  # (M, count)


def random_smooth_curve(man: KahlerManifold, L: float, M: int, seed: int, size: float = 1.0,
                        terms: int = 2) -> DiscreteCurve:
    """Curve from the origin rotated by a smooth, eventually constant generator.

    ``u(x) = exp(i H(x)) A0 exp(-i H(x))`` on projector backends and a
    rotation vector field on the sphere; ``H`` switches on through erf ramps
    so ``u_x`` has Gaussian tails at both ends.
    """
    rng = np.random.default_rng(seed)
    x = stencils.grid(L, M)
    ramps = _ramps(x, rng, terms)
    if isinstance(man, Sphere2):
        axes = rng.standard_normal((terms, 3)) * size
        rotvec = ramps @ axes
        pts = Rotation.from_rotvec(rotvec).apply(man.origin())
        return DiscreteCurve(man, L, pts, man.origin())
    if isinstance(man, _ProjectorModel):
        Hk = man.random_ambient(rng, (terms,)) * (size / np.sqrt(man.n0))
        H = np.einsum("mk,kab->mab", ramps, Hk)
        w, V = np.linalg.eigh(H)
        U = (V * np.exp(1j * w)[:, None, :]) @ dagger(V)
        A0 = man.origin()
        pts = U @ A0 @ dagger(U)
        pts = 0.5 * (pts + dagger(pts))
        pts[0] = A0
        return DiscreteCurve(man, L, pts, A0)
    raise TypeError(f"no smooth-curve generator for {man!r}")


def gaussian_envelope(L: float, M: int, n: int, amplitude: float, width: float,
                      carrier: float = 0.0, centre: float = 0.0, seed: int | None = None) -> ComplexProfile:
    """``amplitude * exp(-((x-c)/width)^2) * exp(i carrier x)`` per component.

    With a seed, each component gets a random complex weight (weights have unit
    Euclidean norm, so the pointwise norm never exceeds ``amplitude``), a centre
    shift in [-1, 1] and a carrier shift in [-0.25, 0.25].
    """
    x = stencils.grid(L, M)[:, None]
    if seed is None:
        w = np.zeros(n, dtype=complex)
        w[0] = 1.0
        shift = np.zeros(n)
        dk = np.zeros(n)
    else:
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w /= np.linalg.norm(w)
        shift = rng.uniform(-1.0, 1.0, n)
        dk = rng.uniform(-0.25, 0.25, n)
    env = amplitude * np.exp(-(((x - centre - shift) / width) ** 2)) * np.exp(1j * (carrier + dk) * x)
    return ComplexProfile(env * w[None, :], L)


def random_profile(L: float, M: int, n: int, rng: np.random.Generator, bumps: int = 3) -> ComplexProfile:
    """Sum of Gaussian wave packets, spectrally resolved on the default grids."""
    x = stencils.grid(L, M)
    Q = np.zeros((M, n), dtype=complex)
    for _ in range(bumps):
        c = rng.uniform(-5.0, 5.0)
        w = rng.uniform(1.5, 2.5)
        k = rng.uniform(-1.5, 1.5)
        amp = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * 0.5
        Q += np.exp(-(((x - c) / w) ** 2))[:, None] * np.exp(1j * k * x)[:, None] * amp[None, :]
    return ComplexProfile(Q, L)


def great_circle_bump(L: float, M: int, amplitude: float = 1.0, width: float = 2.0) -> ComplexProfile:
    """Real scalar profile; reconstructs to an arc of a great circle on the sphere."""
    x = stencils.grid(L, M)
    return ComplexProfile((amplitude * np.exp(-((x / width) ** 2)))[:, None].astype(complex), L)

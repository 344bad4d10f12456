"""Finite-difference helpers along the node axis (axis 0)."""

from __future__ import annotations

import numpy as np


def grid(L: float, M: int) -> np.ndarray:
    return np.linspace(-L, L, M)


def d1(f: np.ndarray, dx: float) -> np.ndarray:
    """First derivative: 4th-order centred inside, 2nd order on two boundary layers."""
    f = np.asarray(f)
    M = f.shape[0]
    if M < 5:
        raise ValueError("need at least 5 nodes")
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dx)
    out[1] = (f[2] - f[0]) / (2.0 * dx)
    out[-2] = (f[-1] - f[-3]) / (2.0 * dx)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)
    return out


def trapezoid(f: np.ndarray, dx: float) -> np.ndarray:
    """Trapezoid rule over axis 0."""
    return dx * (np.sum(f, axis=0) - 0.5 * (f[0] + f[-1]))


def d2(f: np.ndarray, dx: float) -> np.ndarray:
    """Second derivative: 4th-order centred inside, 2nd order on two boundary layers."""
    f = np.asarray(f)
    out = np.empty_like(f)
    out[2:-2] = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / (12.0 * dx**2)
    out[1] = (f[2] - 2.0 * f[1] + f[0]) / dx**2
    out[-2] = (f[-1] - 2.0 * f[-2] + f[-3]) / dx**2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / dx**2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / dx**2
    return out

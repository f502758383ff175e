"""Classical RK4 over flat lists of arrays."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

Arrays = Sequence[np.ndarray]


def _axpy(y: Arrays, a: float, k: Arrays) -> list[np.ndarray]:
    return [yi + a * ki for yi, ki in zip(y, k)]


def rk4_step(f: Callable[[list[np.ndarray]], list[np.ndarray]], y: Arrays, dt: float) -> list[np.ndarray]:
    """One step of the classical fourth-order Runge-Kutta method."""
    y = list(y)
    k1 = f(y)
    k2 = f(_axpy(y, 0.5 * dt, k1))
    k3 = f(_axpy(y, 0.5 * dt, k2))
    k4 = f(_axpy(y, dt, k3))
    return [
        yi + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
    ]

"""Classical fixed-step Runge-Kutta integration."""
from __future__ import annotations

import numpy as np


def rk4_step(f, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_linear_propagator(A: np.ndarray, dt: float) -> np.ndarray:
    """One RK4 step of ``y' = A y`` as a matrix (degree-4 Taylor polynomial of ``exp(A dt)``)."""
    n = A.shape[0]
    h = dt * A
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, 5):
        term = term @ h / k
        out = out + term
    return out

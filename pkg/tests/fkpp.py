"""Reference value for the homogeneous maximum from the travelling-front equation.

``u(x, t) = P(max at time t > x)`` solves ``u_t = u_xx / 2 + u (1 - u)`` with
``u(x, 0) = 1{x < 0}``; the mean of the maximum is read off from ``u``.
"""
import numpy as np


def expected_homogeneous_max(t: float, dx: float = 0.02, left: float = -12.0) -> float:
    x = np.arange(left, 1.5 * t + 8.0, dx)
    u = (x < 0).astype(float)
    n = int(np.ceil(t / (0.4 * dx * dx)))
    dt = t / n
    lap = np.zeros_like(u)
    for _ in range(n):
        lap[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
        u = u + dt * (0.5 * lap / (dx * dx) + u * (1.0 - u))
    return float((u[x >= 0].sum() - (1.0 - u[x < 0]).sum()) * dx)

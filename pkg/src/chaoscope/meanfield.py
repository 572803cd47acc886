"""Nonlinear mean-field equation dF/dt = K0 F + Q(F, F) and tensor-power helpers."""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .core import apply_K0, mean_field_Q


@dataclass
class MeanFieldTrajectory:
    """Mean-field solution sampled on a uniform time grid."""

    times: np.ndarray          # shape (n_t,)
    states: np.ndarray         # shape (n_t, S)

    def __post_init__(self):
        self._spline = None

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def at(self, t):
        """State at time t: grid value when t is on the grid, cubic interpolation otherwise."""
        idx = int(round((t - self.times[0]) / self.dt)) if self.dt else 0
        if 0 <= idx < len(self.times) and abs(self.times[idx] - t) < 1e-12:
            return self.states[idx]
        if self._spline is None:
            self._spline = CubicSpline(self.times, self.states, axis=0)
        return self._spline(t)

    def to_csv(self, path):
        S = self.states.shape[1]
        header = "t," + ",".join(f"F{i + 1}" for i in range(S))
        rows = np.column_stack([self.times, self.states])
        np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.17g")


def mean_field_rhs(kernel, k0, f):
    rhs = mean_field_Q(kernel, f, f)
    if k0 is not None and np.any(k0.k0):
        rhs = rhs + k0.k0 @ f
    return rhs


def solve_mean_field(kernel, k0, f0, t_final, dt):
    """RK4 trajectory of the mean-field equation on a uniform grid."""
    f0 = np.asarray(f0, dtype=float)
    if abs(f0.sum() - 1.0) > 1e-10 or f0.min() < -1e-12:
        raise ValueError("f0 must be a probability vector")
    n_steps = max(1, int(round(t_final / dt))) if t_final > 0 else 0
    h = t_final / n_steps if n_steps else 0.0
    times = np.linspace(0.0, t_final, n_steps + 1)
    states = np.empty((n_steps + 1, f0.size))
    states[0] = f0
    f = f0.copy()
    for n in range(n_steps):
        k1 = mean_field_rhs(kernel, k0, f)
        k2 = mean_field_rhs(kernel, k0, f + 0.5 * h * k1)
        k3 = mean_field_rhs(kernel, k0, f + 0.5 * h * k2)
        k4 = mean_field_rhs(kernel, k0, f + h * k3)
        f = f + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[n + 1] = f
    if abs(f.sum() - 1.0) > 1e-10:
        raise RuntimeError(f"mean-field normalization drift {f.sum() - 1.0:.3e}")
    if f.min() < -1e-10:
        raise RuntimeError(f"mean-field positivity violation {f.min():.3e}")
    return MeanFieldTrajectory(times, states)


def tensor_power(F, j):
    """Literal outer power F^(x j); order 0 gives the scalar 1."""
    F = np.asarray(F, dtype=float)
    if j == 0:
        return np.float64(1.0)
    out = F
    for _ in range(j - 1):
        out = np.multiply.outer(out, F)
    return out

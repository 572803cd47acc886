"""Exact integration of the N-particle master equation on S^N and marginal extraction."""

import os
from dataclasses import dataclass

import numpy as np

from .core import DimensionError, apply_T, l1_norm

DEFAULT_MEM_CAP = 2**24


def mem_cap():
    return int(os.environ.get("CHAOSCOPE_MEM_CAP", DEFAULT_MEM_CAP))


class MemoryCapError(MemoryError):
    pass


class PositivityError(RuntimeError):
    pass


@dataclass
class FullState:
    """Probability vector over S^N, stored as an (S,)*N array."""

    N: int
    data: np.ndarray

    @classmethod
    def factorized(cls, f0, N):
        f0 = np.asarray(f0, dtype=float)
        if abs(f0.sum() - 1.0) > 1e-12 or f0.min() < 0:
            raise ValueError("f0 must be a probability vector")
        data = f0
        for _ in range(N - 1):
            data = np.multiply.outer(data, f0)
        return cls(N, data)

    @classmethod
    def from_table(cls, S, N, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.size != S**N:
            raise DimensionError(f"table has {flat.size} entries, expected {S**N}")
        return cls(N, flat.reshape((S,) * N))

    @property
    def S(self):
        return self.data.shape[0]


def master_rhs(kernel, k0, F):
    """(K0^N + (1/N) sum_{i<j} V_ij) F, pair sum written out literally."""
    N = F.ndim
    out = np.zeros_like(F)
    for i in range(1, N + 1):
        for j in range(i + 1, N + 1):
            out += apply_T(kernel, F, i, j)
    out /= N
    if k0 is not None and np.any(k0.k0):
        from .core import apply_K0

        out += apply_K0(k0, F)
    return out


def evolve_master(kernel, k0, F0: FullState, t_final, dt):
    """RK4 integration of the master equation; checks mass and positivity on exit."""
    S, N = F0.S, F0.N
    if S**N > mem_cap():
        raise MemoryCapError(f"S^N = {S**N} exceeds memory cap {mem_cap()}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = F0.data.astype(float).copy()
    mass0 = F.sum()
    t = 0.0
    n_steps = int(round(t_final / dt))
    h = t_final / n_steps if n_steps else 0.0
    for _ in range(n_steps):
        k1 = master_rhs(kernel, k0, F)
        k2 = master_rhs(kernel, k0, F + 0.5 * h * k1)
        k3 = master_rhs(kernel, k0, F + 0.5 * h * k2)
        k4 = master_rhs(kernel, k0, F + h * k3)
        F += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    if abs(F.sum() - mass0) > 1e-9:
        raise RuntimeError(f"total probability drifted by {F.sum() - mass0:.3e}")
    if F.min() < -1e-10:
        raise PositivityError(f"negative probability {F.min():.3e}; reduce dt")
    return FullState(N, F)


def marginal(F: FullState, j):
    """Sum out particles j+1..N; returns an order-j probability tensor."""
    if not (1 <= j <= F.N):
        raise ValueError(f"marginal order {j} out of range 1..{F.N}")
    if j == F.N:
        return F.data.copy()
    return F.data.sum(axis=tuple(range(j, F.N)))


def check_symmetry(F: FullState, n_samples=32, rng=None):
    """Max asymmetry of F over sampled particle transpositions (sup norm)."""
    rng = np.random.default_rng(rng)
    N = F.N
    pairs = [(i, k) for i in range(N) for k in range(i + 1, N)]
    if len(pairs) > n_samples:
        idx = rng.choice(len(pairs), size=n_samples, replace=False)
        pairs = [pairs[q] for q in idx]
    worst = 0.0
    for i, k in pairs:
        worst = max(worst, float(np.max(np.abs(F.data - np.swapaxes(F.data, i, k)))))
    return worst


def default_dt(kernel, N):
    from .core import operator_norm_V

    nv = operator_norm_V(kernel)
    return min(1e-3, 0.1 / (nv * N)) if nv > 0 else 1e-3


def propagation_norm_check(F: FullState):
    return l1_norm(F.data)

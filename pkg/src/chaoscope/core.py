"""Finite-state two-body algebra: pair kernels, slot operators and L1 machinery.

States live on a discrete label set {0..S-1}.  An order-j tensor is a dense
numpy array of shape (S,)*j; contraction ("ell") is plain summation and the
L1 norm is the sum of absolute entries.
"""

from dataclasses import dataclass, field

import numpy as np

L1_SYM_TOL = 1e-12


class DimensionError(ValueError):
    pass


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class StateSpace:
    """Discrete velocity labels 0..S-1."""

    S: int

    def __post_init__(self):
        if self.S < 2:
            raise ValueError(f"state space needs S >= 2, got {self.S}")


@dataclass(frozen=True)
class OneBodyGenerator:
    """One-body rate matrix with zero column sums (mass conserving)."""

    k0: np.ndarray

    def __post_init__(self):
        k0 = np.asarray(self.k0, dtype=float)
        object.__setattr__(self, "k0", k0)
        if k0.ndim != 2 or k0.shape[0] != k0.shape[1]:
            raise DimensionError("k0 must be a square matrix")
        if np.max(np.abs(k0.sum(axis=0))) > 1e-12:
            raise KernelError("k0 column sums must vanish")
        off = k0 - np.diag(np.diag(k0))
        if off.min() < -1e-12:
            raise KernelError("k0 off-diagonal entries must be nonnegative")

    @classmethod
    def zero(cls, S):
        return cls(np.zeros((S, S)))


@dataclass(frozen=True)
class PairKernel:
    """Two-body collision rate tensor lam[a, b, a2, b2]: rate of (a,b) -> (a2,b2).

    The induced generator on order-2 tensors is

        V(A)[a, b] = sum_{a',b'} lam[a', b', a, b] A[a', b'] - r[a, b] A[a, b]

    with total outgoing rate r[a, b] = sum_{a2, b2} lam[a, b, a2, b2].  It is
    conservative (output sums to zero) by construction and must respect the
    exchange symmetry lam[a,b,a2,b2] = lam[b,a,b2,a2].
    """

    S: int
    lam: np.ndarray
    preset: str = "weighted"
    beta: float = 1.0
    # generator as a matrix on flattened order-2 tensors, built once
    _gen: np.ndarray = field(init=False, repr=False, compare=False)
    # generator contracted over its second output slot (for C-type operators)
    _gen_c: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        object.__setattr__(self, "lam", lam)
        S = self.S
        if lam.shape != (S, S, S, S):
            raise DimensionError(f"lambda table must have shape {(S,) * 4}")
        if lam.min() < 0:
            raise KernelError("lambda table must be entrywise nonnegative")
        if np.max(np.abs(lam - lam.transpose(1, 0, 3, 2))) > 1e-12:
            raise KernelError("lambda violates exchange symmetry lam[a,b,a2,b2] == lam[b,a,b2,a2]")
        r = lam.sum(axis=(2, 3))
        gen = lam.reshape(S * S, S * S).T - np.diag(r.ravel())
        object.__setattr__(self, "_gen", gen)
        gen_c = gen.reshape(S, S, S * S).sum(axis=1)
        object.__setattr__(self, "_gen_c", gen_c)

    @classmethod
    def uniform(cls, S, beta=1.0):
        """Full re-randomization: every outcome pair at rate beta/S^2."""
        lam = np.full((S, S, S, S), beta / S**2)
        return cls(S, lam, preset="uniform", beta=beta)

    @classmethod
    def swap(cls, S, beta=1.0):
        """Pure exchange (a,b) -> (b,a) at rate beta; fixes exchangeable products."""
        lam = np.zeros((S, S, S, S))
        for a in range(S):
            for b in range(S):
                lam[a, b, b, a] = beta
        return cls(S, lam, preset="swap", beta=beta)

    @classmethod
    def weighted(cls, S, lam, beta=1.0):
        return cls(S, np.asarray(lam, dtype=float), preset="weighted", beta=beta)


def make_kernel(preset, S, beta=1.0, lam=None):
    if preset == "uniform":
        return PairKernel.uniform(S, beta)
    if preset == "swap":
        return PairKernel.swap(S, beta)
    if preset == "weighted":
        if lam is None:
            raise KernelError("weighted preset requires an explicit lambda table")
        return PairKernel.weighted(S, np.asarray(lam, dtype=float).reshape(S, S, S, S), beta)
    raise KernelError(f"unknown kernel preset {preset!r}")


def apply_pair_generator(kernel, A):
    """V(A) for an order-2 tensor A (gain minus loss); output sums to zero."""
    A = np.asarray(A, dtype=float)
    S = kernel.S
    if A.shape != (S, S):
        raise DimensionError(f"expected order-2 tensor of shape {(S, S)}, got {A.shape}")
    return (kernel._gen @ A.ravel()).reshape(S, S)


def _pair_perms(j, i, r):
    """Permutation bringing 0-based axes (i, r) to the front, and its inverse."""
    perm = [i, r] + [q for q in range(j) if q != i and q != r]
    inv = [0] * j
    for pos, ax in enumerate(perm):
        inv[ax] = pos
    return tuple(perm), tuple(inv)


def apply_T(kernel, A, i, r):
    """Act with V on slots (i, r) of an order-j tensor, identity elsewhere.

    Slots are 1-based with 1 <= i < r <= j.
    """
    A = np.asarray(A, dtype=float)
    j = A.ndim
    if not (1 <= i < r <= j):
        raise ValueError(f"need 1 <= i < r <= order, got i={i}, r={r}, order={j}")
    S = kernel.S
    if A.shape != (S,) * j:
        raise DimensionError(f"tensor shape {A.shape} does not match S={S}")
    perm, inv = _pair_perms(j, i - 1, r - 1)
    front = A.transpose(perm).reshape(S * S, -1)
    out = (kernel._gen @ front).reshape((S,) * j)
    return out.transpose(inv)


def apply_T_sum(kernel, A):
    """T_j(A) = sum over pairs i < r of the slot-(i,r) action of V."""
    j = np.asarray(A).ndim
    out = np.zeros_like(A, dtype=float)
    for i in range(1, j + 1):
        for r in range(i + 1, j + 1):
            out += apply_T(kernel, A, i, r)
    return out


def apply_C(kernel, A, i):
    """C_{i,j+1}(A): V on slots (i, j+1) of an order-(j+1) tensor, then contract the last slot.

    Implemented with the generator pre-contracted over the dropped output slot;
    identical to apply_T followed by summation over the last axis.
    """
    A = np.asarray(A, dtype=float)
    jp1 = A.ndim
    if jp1 < 2:
        raise DimensionError("apply_C needs a tensor of order >= 2")
    if not (1 <= i <= jp1 - 1):
        raise ValueError(f"slot i={i} out of range for order {jp1 - 1} output")
    S = kernel.S
    if A.shape != (S,) * jp1:
        raise DimensionError(f"tensor shape {A.shape} does not match S={S}")
    perm, _ = _pair_perms(jp1, i - 1, jp1 - 1)
    front = A.transpose(perm).reshape(S * S, -1)
    out = (kernel._gen_c @ front).reshape((S,) * (jp1 - 1))
    if i == 1:
        return out
    inv = [0] * (jp1 - 1)
    for pos, ax in enumerate(q for q in perm if q != jp1 - 1):
        inv[ax] = pos
    return out.transpose(inv)


def apply_C_sum(kernel, A):
    """C_{j+1}(A) = sum_i C_{i,j+1}(A)."""
    jp1 = np.asarray(A).ndim
    out = np.zeros((kernel.S,) * (jp1 - 1))
    for i in range(1, jp1):
        out += apply_C(kernel, A, i)
    return out


def mean_field_Q(kernel, F, G):
    """Q(F, G): contract the second slot of V(F x G)."""
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    if F.shape != (kernel.S,) or G.shape != (kernel.S,):
        raise DimensionError("Q expects two length-S vectors")
    return apply_pair_generator(kernel, np.outer(F, G)).sum(axis=1)


def operator_norm_V(kernel):
    """Exact L1 -> L1 norm of V on order-2 tensors (max absolute column sum)."""
    return float(np.abs(kernel._gen).sum(axis=0).max())


def apply_K0(k0, A):
    """K0^j(A): the one-body generator summed over every slot."""
    A = np.asarray(A, dtype=float)
    j = A.ndim
    out = np.zeros_like(A)
    for i in range(j):
        front = np.moveaxis(A, i, 0).reshape(k0.k0.shape[0], -1)
        out += np.moveaxis((k0.k0 @ front).reshape(A.shape), 0, i)
    return out


def l1_norm(A):
    """Sum of absolute entries (scalar inputs allowed)."""
    return float(np.abs(np.asarray(A, dtype=float)).sum())


def symmetrize(A):
    """Average over all slot permutations."""
    from itertools import permutations

    A = np.asarray(A, dtype=float)
    j = A.ndim
    if j <= 1:
        return A
    acc = np.zeros_like(A)
    perms = list(permutations(range(j)))
    for p in perms:
        acc += A.transpose(p)
    return acc / len(perms)


def symmetry_defect(A):
    """Max deviation of A from its transposition images (0 for symmetric tensors)."""
    A = np.asarray(A, dtype=float)
    j = A.ndim
    worst = 0.0
    for i in range(j):
        for r in range(i + 1, j):
            axes = list(range(j))
            axes[i], axes[r] = axes[r], axes[i]
            worst = max(worst, float(np.max(np.abs(A - A.transpose(axes)))))
    return worst


def check_state(A, tol=1e-10):
    """Validate a probability tensor: nonnegative, normalized, symmetric."""
    A = np.asarray(A, dtype=float)
    if A.min() < -tol:
        raise ValueError(f"negative weight {A.min():.3e} beyond tolerance")
    if abs(A.sum() - 1.0) > tol:
        raise ValueError(f"normalization drift {A.sum() - 1.0:.3e}")
    if symmetry_defect(A) > L1_SYM_TOL * 10**2:
        raise ValueError("state is not permutation symmetric")
    return A

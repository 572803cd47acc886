"""Inclusion-exclusion correlation errors, their inversion, and chaos distances.

For a family of symmetric marginals F_1..F_jmax and a reference one-body state
F, the order-j correlation error is the alternating sum over subsets K of
{1..j} of tensors carrying F on the slots in K and the marginal F_{j-|K|} on
the rest.  Subsets are enumerated by bitmask; slot placement uses symmetry of
the inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import l1_norm, symmetry_defect
from .meanfield import tensor_power

SYM_INPUT_TOL = 1e-10


@dataclass
class CorrelationFamily:
    """E_0..E_jmax (E_0 is the scalar 1) plus the reference state F."""

    F: np.ndarray
    E: list = field(default_factory=list)

    @property
    def j_max(self):
        return len(self.E) - 1

    def norms(self):
        return [l1_norm(e) for e in self.E]


def _place_subset(vec_tensor, sym_tensor, mask, j):
    """Order-j tensor with vec factors on the bitmask slots and sym_tensor on the rest.

    vec_tensor is an outer power of the one-body state matching popcount(mask);
    sym_tensor is symmetric so the remaining slots can be filled in order.
    """
    k = bin(mask).count("1")
    if k == 0:
        return np.asarray(sym_tensor, dtype=float)
    if k == j:
        return np.asarray(vec_tensor, dtype=float)
    out = np.multiply.outer(vec_tensor, sym_tensor)
    slots = [s for s in range(j) if mask >> s & 1]
    return np.moveaxis(out, list(range(k)), slots)


def correlation_error(marginals, F):
    """Build the correlation family from marginals F_1..F_jmax and the state F."""
    F = np.asarray(F, dtype=float)
    j_max = len(marginals)
    for j, m in enumerate(marginals, start=1):
        m = np.asarray(m)
        if m.ndim != j:
            raise ValueError(f"marginal #{j} has order {m.ndim}")
        if symmetry_defect(m) > SYM_INPUT_TOL:
            raise ValueError(f"marginal of order {j} is not symmetric")
    powers = [tensor_power(F, k) for k in range(j_max + 1)]
    E = [np.float64(1.0)]
    for j in range(1, j_max + 1):
        acc = np.zeros((F.size,) * j)
        for mask in range(1 << j):
            k = bin(mask).count("1")
            if k == j:
                term = powers[j]
            else:
                term = _place_subset(powers[k], marginals[j - k - 1], mask, j)
            acc += (-1.0) ** k * term
        E.append(acc)
    return CorrelationFamily(F=F, E=E)


def reconstruct_marginal(family, j):
    """Invert the inclusion-exclusion: F_j = sum over subsets of F-powers times E."""
    if j > family.j_max:
        raise ValueError(f"order {j} exceeds family j_max {family.j_max}")
    F = family.F
    powers = [tensor_power(F, k) for k in range(j + 1)]
    acc = np.zeros((F.size,) * j)
    for mask in range(1 << j):
        k = bin(mask).count("1")
        if k == j:
            acc += powers[j]
        else:
            acc += _place_subset(powers[k], family.E[j - k], mask, j)
    return acc


def chaos_distance(F_j, F):
    """L1 distance between a marginal and the matching tensor power of F."""
    F_j = np.asarray(F_j, dtype=float)
    return l1_norm(F_j - tensor_power(F, F_j.ndim))

"""BBGKY hierarchy and the closed evolution system for correlation errors.

The correlation system couples E_{j-2}..E_{j+1} through four operators built
from the pair generator: one preserving the order (D), one raising it (D1) and
two lowering it (Dm1, Dm2), plus inhomogeneous terms at the bottom orders.
Slot-decorated products like "F on slot i, A on the remaining slots" are
realized by outer products followed by axis moves; the inputs are symmetric so
this is exact.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import (
    apply_C,
    apply_C_sum,
    apply_K0,
    apply_T,
    apply_T_sum,
    l1_norm,
    mean_field_Q,
)
from .correlation import correlation_error
from .master import evolve_master, marginal


@dataclass
class HierarchyConfig:
    N: int
    j_max: int
    kernel: object
    k0: object = None
    trajectory: object = None   # mean-field trajectory supplying F(t)

    def __post_init__(self):
        if self.j_max < 1:
            raise ValueError("j_max must be >= 1")
        if self.j_max > self.N:
            raise ValueError(f"j_max {self.j_max} exceeds N {self.N}")

    @property
    def alpha(self):
        return lambda j: (self.N - j) / self.N


def alpha(j, N):
    return (N - j) / N


def place(vec_slots, A, m):
    """Order-m tensor with one-body vectors on given 1-based slots, symmetric A on the rest.

    vec_slots: list of (slot, vector) pairs with distinct slots.
    """
    if not vec_slots:
        return np.asarray(A, dtype=float)
    vec_slots = sorted(vec_slots, key=lambda p: p[0])
    out = np.asarray(A, dtype=float)
    for _, vec in reversed(vec_slots):
        out = np.multiply.outer(vec, out)
    # vectors sit on axes 0..k-1; route them to their slots, A fills the rest in order
    targets = [s - 1 for s, _ in vec_slots]
    rest = [q for q in range(m) if q not in targets]
    perm = [0] * m
    for pos, ax in enumerate(targets + rest):
        perm[ax] = pos
    return out.transpose(perm)


def bbgky_rhs(cfg, marginals, j):
    """d/dt F_j from the marginal hierarchy; marginals is the list F_1..F_{j+1} (F_{j+1} needed for j < N)."""
    N, kernel, k0 = cfg.N, cfg.kernel, cfg.k0
    Fj = np.asarray(marginals[j - 1], dtype=float)
    out = apply_T_sum(kernel, Fj) / N
    if k0 is not None and np.any(k0.k0):
        out += apply_K0(k0, Fj)
    if j < N:
        if len(marginals) < j + 1:
            raise ValueError(f"bbgky_rhs at order {j} needs F_{j + 1}")
        out += alpha(j, N) * apply_C_sum(kernel, np.asarray(marginals[j], dtype=float))
    return out


def _pair_T(kernel, A, i, s):
    return apply_T(kernel, A, min(i, s), max(i, s))


def op_D(cfg, A, F, j):
    """Order-preserving operator of the correlation system."""
    N, kernel = cfg.N, cfg.kernel
    a = alpha(j, N)
    A = np.asarray(A, dtype=float)
    placed = [place([(s, F)], A, j + 1) for s in range(1, j + 1)]
    AF = np.multiply.outer(A, F)
    out = np.zeros_like(A)
    for i in range(1, j + 1):
        out += a * apply_C(kernel, placed[i - 1] + AF, i)
    if j >= 2:
        for i in range(1, j + 1):
            for s in range(1, j + 1):
                if s == i:
                    continue
                out -= apply_C(kernel, placed[s - 1], i) / N
    return out


def op_D1(cfg, A, j):
    """Order-raising operator: alpha(j, N) C_{j+1} acting on an order-(j+1) tensor."""
    return alpha(j, cfg.N) * apply_C_sum(cfg.kernel, np.asarray(A, dtype=float))


def op_Dm1(cfg, A, F, j):
    """Order-lowering operator (by one); A has order j-1, output order j.  Needs j >= 2."""
    N, kernel = cfg.N, cfg.kernel
    Q = mean_field_Q(kernel, F, F)
    A = np.asarray(A, dtype=float)
    out = np.zeros((kernel.S,) * j)
    for i in range(1, j + 1):
        out -= (j / N) * place([(i, Q)], A, j)
    placed_i = [place([(i, F)], A, j) for i in range(1, j + 1)]
    placed_s_top = [place([(s, F), (j + 1, F)], A, j + 1) for s in range(1, j + 1)]
    placed_pair = {}
    for i in range(1, j + 1):
        for s in range(i + 1, j + 1):
            placed_pair[(i, s)] = place([(i, F), (s, F)], A, j + 1)
    for i in range(1, j + 1):
        for s in range(1, j + 1):
            if s == i:
                continue
            out += _pair_T(kernel, placed_i[i - 1], i, s) / N
            out -= apply_C(kernel, placed_pair[(min(i, s), max(i, s))], i) / N
            out -= apply_C(kernel, placed_s_top[s - 1], i) / N
    return out


def op_Dm2(cfg, A, F, j):
    """Order-lowering operator (by two); A has order j-2, output order j.  Needs j >= 3."""
    N, kernel = cfg.N, cfg.kernel
    Q = mean_field_Q(kernel, F, F)
    A = np.asarray(A, dtype=float)
    out = np.zeros((kernel.S,) * j)
    for i in range(1, j + 1):
        for s in range(i + 1, j + 1):
            # the (i,s) and (s,i) halves of the ordered sum coincide
            out += _pair_T(kernel, place([(i, F), (s, F)], A, j), i, s) / N
    for i in range(1, j + 1):
        for s in range(1, j + 1):
            if s == i:
                continue
            out -= place([(i, Q), (s, F)], A, j) / N
    return out


def bottom_Dm1(cfg, F):
    """Inhomogeneity at order one: -(1/N) Q(F, F)."""
    return -mean_field_Q(cfg.kernel, F, F) / cfg.N


def bottom_Dm2(cfg, F):
    """Inhomogeneity at order two: (1/N)(T_{1,2}(F x F) - Q x F - F x Q)."""
    kernel = cfg.kernel
    Q = mean_field_Q(kernel, F, F)
    FF = np.outer(F, F)
    return (apply_T(kernel, FF, 1, 2) - np.outer(Q, F) - np.outer(F, Q)) / cfg.N


def correlation_rhs(cfg, E, F, j):
    """d/dt E_j; E is the list [E_0(=1), E_1, ..] (missing top orders read as zero)."""
    N, kernel, k0 = cfg.N, cfg.kernel, cfg.k0
    Ej = np.asarray(E[j], dtype=float)
    out = apply_T_sum(kernel, Ej) / N if j >= 2 else np.zeros_like(Ej)
    if k0 is not None and np.any(k0.k0):
        out += apply_K0(k0, Ej)
    out += op_D(cfg, Ej, F, j)
    if j < N and j + 1 < len(E):
        out += op_D1(cfg, E[j + 1], j)
    if j == 1:
        out += bottom_Dm1(cfg, F)
    else:
        out += op_Dm1(cfg, E[j - 1], F, j)
    if j == 2:
        out += bottom_Dm2(cfg, F)
    elif j >= 3:
        out += op_Dm2(cfg, E[j - 2], F, j)
    return out


@dataclass
class FamilyTrajectory:
    times: np.ndarray
    families: list                  # list over times of [E_0..E_jmax]
    truncated: bool = False

    def norms_table(self):
        """Rows (t, j, l1 norm of E_j)."""
        rows = []
        for t, fam in zip(self.times, self.families):
            for j in range(1, len(fam)):
                rows.append((t, j, l1_norm(fam[j])))
        return rows


def _family_rhs(cfg, E, t):
    F = np.asarray(cfg.trajectory.at(t), dtype=float)
    return [np.zeros(())] + [correlation_rhs(cfg, E, F, j) for j in range(1, len(E))]


def integrate_correlation_hierarchy(cfg, E0, t_final, dt, store_every=None):
    """RK4 on the coupled family E_1..E_jmax; truncation closes with E_{jmax+1} = 0."""
    if cfg.trajectory is None:
        raise ValueError("hierarchy integration needs a mean-field trajectory")
    if cfg.trajectory.times[-1] < t_final - 1e-12:
        raise ValueError("mean-field trajectory does not cover the requested time span")
    E = [np.float64(1.0)] + [np.asarray(e, dtype=float).copy() for e in E0[1:]]
    n_steps = max(1, int(round(t_final / dt))) if t_final > 0 else 0
    h = t_final / n_steps if n_steps else 0.0
    times = [0.0]
    families = [[np.float64(1.0)] + [e.copy() for e in E[1:]]]
    if store_every is None:
        store_every = n_steps if n_steps else 1
    t = 0.0
    for n in range(n_steps):
        k1 = _family_rhs(cfg, E, t)
        E2 = [E[0]] + [E[q] + 0.5 * h * k1[q] for q in range(1, len(E))]
        k2 = _family_rhs(cfg, E2, t + 0.5 * h)
        E3 = [E[0]] + [E[q] + 0.5 * h * k2[q] for q in range(1, len(E))]
        k3 = _family_rhs(cfg, E3, t + 0.5 * h)
        E4 = [E[0]] + [E[q] + h * k3[q] for q in range(1, len(E))]
        k4 = _family_rhs(cfg, E4, t + h)
        for q in range(1, len(E)):
            E[q] = E[q] + (h / 6.0) * (k1[q] + 2 * k2[q] + 2 * k3[q] + k4[q])
        t += h
        if (n + 1) % store_every == 0 or n == n_steps - 1:
            times.append(t)
            families.append([np.float64(1.0)] + [e.copy() for e in E[1:]])
    return FamilyTrajectory(np.array(times), families, truncated=cfg.j_max < cfg.N)


def family_from_full_state(F0, j_max, F_ref):
    """Initial correlation family from an explicit N-particle state."""
    margs = [marginal(F0, j) for j in range(1, j_max + 1)]
    return correlation_error(margs, F_ref)


def verify_equivalence(cfg_kernel, k0, F0, f_ref0, t_checkpoints, dt, N=None, j_max=None):
    """Two-pipeline comparison of the correlation errors.

    Pipeline A evolves the full master equation and applies inclusion-exclusion
    to exact marginals; pipeline B integrates the correlation system directly.
    Returns a dict {(j, t): L1 discrepancy}.
    """
    from .meanfield import solve_mean_field

    N = N if N is not None else F0.N
    j_max = j_max if j_max is not None else N
    t_checkpoints = sorted(t_checkpoints)
    t_final = t_checkpoints[-1]
    traj = solve_mean_field(cfg_kernel, k0, f_ref0, t_final, dt)
    cfg = HierarchyConfig(N=N, j_max=j_max, kernel=cfg_kernel, k0=k0, trajectory=traj)

    fam0 = family_from_full_state(F0, j_max, np.asarray(f_ref0, dtype=float))
    discrepancies = {}
    state = F0
    E = [np.float64(1.0)] + [e.copy() for e in fam0.E[1:]]
    t_prev = 0.0
    for t_chk in t_checkpoints:
        span = t_chk - t_prev
        if span > 0:
            state = evolve_master(cfg_kernel, k0, state, span, dt)
            # continue the hierarchy integration on a shifted clock
            shifted = _ShiftedTrajectory(traj, t_prev)
            sub_cfg = HierarchyConfig(N=N, j_max=j_max, kernel=cfg_kernel, k0=k0, trajectory=shifted)
            run = integrate_correlation_hierarchy(sub_cfg, E, span, dt)
            E = run.families[-1]
        margs = [marginal(state, j) for j in range(1, j_max + 1)]
        fam_a = correlation_error(margs, traj.at(t_chk))
        for j in range(1, j_max + 1):
            discrepancies[(j, t_chk)] = l1_norm(fam_a.E[j] - E[j])
        t_prev = t_chk
    return discrepancies


@dataclass
class _ShiftedTrajectory:
    base: object
    offset: float

    def at(self, t):
        return self.base.at(t + self.offset)

    @property
    def times(self):
        return self.base.times - self.offset

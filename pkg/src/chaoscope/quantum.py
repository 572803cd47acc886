"""Finite-dimensional quantum side: N-qudit von Neumann evolution, partial
traces, the Hartree mean-field flow, and trace-norm correlation errors."""

import math
import os
from dataclasses import dataclass

import numpy as np

HERM_TOL = 1e-10
DEFAULT_DIM_CAP = 256


def dim_cap():
    return int(os.environ.get("CHAOSCOPE_MEM_CAP", DEFAULT_DIM_CAP))


class QuantumInputError(ValueError):
    pass


def _check_hermitian(M, tol=1e-8, what="matrix"):
    M = np.asarray(M, dtype=complex)
    if np.max(np.abs(M - M.conj().T)) > tol:
        raise QuantumInputError(f"{what} is not Hermitian within {tol}")
    return M


@dataclass
class DensityMatrix:
    """Trace-one positive Hermitian matrix on (C^d)^(x n)."""

    n: int
    d: int
    data: np.ndarray

    def __post_init__(self):
        D = self.d**self.n
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (D, D):
            raise QuantumInputError(f"density matrix must be {D}x{D}")
        _check_hermitian(self.data, HERM_TOL, "density matrix")
        if abs(np.trace(self.data).real - 1.0) > HERM_TOL:
            raise QuantumInputError("density matrix trace must be one")
        w = np.linalg.eigvalsh(self.data)
        if w.min() < -HERM_TOL:
            raise QuantumInputError(f"density matrix has eigenvalue {w.min():.3e}")

    @classmethod
    def pure(cls, psi, n=1, d=None):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        if d is None:
            d = round(psi.size ** (1.0 / n))
        return cls(n, d, np.outer(psi, psi.conj()))

    @classmethod
    def product(cls, rho1, n):
        """n-fold tensor power of a one-qudit state."""
        data = rho1.data
        for _ in range(n - 1):
            data = np.kron(data, rho1.data)
        return cls(n, rho1.d, data)


@dataclass
class PairHamiltonian:
    """Swap-symmetric Hermitian two-body coupling on C^d x C^d."""

    d: int
    V: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        self.V = _check_hermitian(self.V, HERM_TOL, "pair coupling")
        if self.V.shape != (self.d**2, self.d**2):
            raise QuantumInputError(f"pair coupling must be {self.d ** 2}x{self.d ** 2}")
        if not (0 < self.hbar <= 1):
            raise QuantumInputError("hbar must lie in (0, 1]")
        Sw = swap_matrix(self.d)
        if np.max(np.abs(Sw @ self.V @ Sw - self.V)) > HERM_TOL:
            raise QuantumInputError("pair coupling must be swap symmetric")

    @classmethod
    def default_qubit(cls, g=0.5, hbar=1.0):
        """g * (sigma_z x sigma_z + swap) / 2: swap symmetric and genuinely entangling."""
        sz = np.diag([1.0, -1.0])
        V = g * (np.kron(sz, sz) + swap_matrix(2)) / 2.0
        return cls(2, V, hbar)

    def sup_norm(self):
        return float(np.max(np.abs(np.linalg.eigvalsh(self.V))))


def swap_matrix(d):
    Sw = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            Sw[a * d + b, b * d + a] = 1.0
    return Sw


def _embed_pair(V, i, j, n, d):
    """Lift a two-body operator to sites (i, j) of an n-site chain (0-based)."""
    D = d**n
    eye = np.eye(d ** (n - 2)) if n > 2 else np.array([[1.0]])
    # build in the frame (i, j, rest of the sites in order), then permute back
    big = np.kron(V, eye).reshape((d,) * n + (d,) * n)
    perm_sites = [i, j] + [q for q in range(n) if q not in (i, j)]
    inv = [0] * n
    for pos, site in enumerate(perm_sites):
        inv[site] = pos
    big = big.transpose(tuple(inv) + tuple(n + q for q in inv))
    return big.reshape(D, D)


def build_hamiltonian(h0, pairV, n):
    """H = sum_i h0_i + (1/N) sum_{i<j} V_ij on n qudits."""
    d = pairV.d
    D = d**n
    if D > 256:
        raise QuantumInputError(f"d^n = {D} exceeds the dense-evolution cap 256")
    h0 = _check_hermitian(h0, HERM_TOL, "one-body Hamiltonian") if h0 is not None else np.zeros((d, d))
    H = np.zeros((D, D), dtype=complex)
    for i in range(n):
        ops = [np.eye(d)] * n
        ops[i] = h0
        term = ops[0]
        for o in ops[1:]:
            term = np.kron(term, o)
        H += term
    for i in range(n):
        for j in range(i + 1, n):
            H += _embed_pair(pairV.V, i, j, n, d) / n
    return H


def evolve_von_neumann(h0, pairV, rho0: DensityMatrix, t_final, dt=None):
    """Exact evolution rho(t) = U rho0 U^dagger with U = exp(-i H t / hbar).

    H is time independent, so one dense diagonalization replaces time stepping;
    dt is accepted for interface parity and ignored.
    """
    H = build_hamiltonian(h0, pairV, rho0.n)
    w, P = np.linalg.eigh(H)
    phases = np.exp(-1j * w * t_final / pairV.hbar)
    U = (P * phases) @ P.conj().T
    out = U @ rho0.data @ U.conj().T
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(rho0.n, rho0.d, out)


def partial_trace(rho: DensityMatrix, keep):
    """Trace out qudits keep+1..n, returning the leading-keep marginal."""
    if not (1 <= keep <= rho.n):
        raise QuantumInputError(f"keep={keep} out of range 1..{rho.n}")
    d, n = rho.d, rho.n
    if keep == n:
        return DensityMatrix(n, d, rho.data.copy())
    dk = d**keep
    dr = d ** (n - keep)
    block = rho.data.reshape(dk, dr, dk, dr)
    out = np.trace(block, axis1=1, axis2=3)
    return DensityMatrix(keep, d, out)


def mean_field_hamiltonian(pairV, rho1):
    """h_rho = Tr_2 [ V (I x rho) ], the effective one-body coupling."""
    d = pairV.d
    Vt = pairV.V.reshape(d, d, d, d)
    return np.einsum("acbd,dc->ab", Vt, rho1, optimize=True)


def _hartree_rhs(h0, pairV, rho):
    h_eff = h0 + mean_field_hamiltonian(pairV, rho)
    return (h_eff @ rho - rho @ h_eff) / (1j * pairV.hbar)


def solve_hartree(h0, pairV, rho0: DensityMatrix, t_final, dt, check_consistency=True):
    """RK4 integration of the nonlinear one-body mean-field equation.

    At every accepted step the partial-trace identity defining the nonlinear
    term (contracting the pair commutator against rho x rho) is asserted.
    """
    d = pairV.d
    h0 = _check_hermitian(h0, HERM_TOL, "one-body Hamiltonian") if h0 is not None else np.zeros((d, d))
    n_steps = max(1, int(round(t_final / dt))) if t_final > 0 else 0
    h = t_final / n_steps if n_steps else 0.0
    rho = rho0.data.copy()
    times = [0.0]
    states = [rho.copy()]
    for step in range(n_steps):
        k1 = _hartree_rhs(h0, pairV, rho)
        k2 = _hartree_rhs(h0, pairV, rho + 0.5 * h * k1)
        k3 = _hartree_rhs(h0, pairV, rho + 0.5 * h * k2)
        k4 = _hartree_rhs(h0, pairV, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        times.append((step + 1) * h)
        states.append(rho.copy())
        if check_consistency:
            two = np.kron(rho, rho)
            comm = (pairV.V @ two - two @ pairV.V) / (1j * pairV.hbar)
            lhs = np.trace(comm.reshape(d, d, d, d), axis1=1, axis2=3)
            h_eff = mean_field_hamiltonian(pairV, rho)
            rhs = (h_eff @ rho - rho @ h_eff) / (1j * pairV.hbar)
            if np.max(np.abs(lhs - rhs)) > 1e-8:
                raise RuntimeError("mean-field nonlinearity lost consistency with the pair commutator")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise RuntimeError("Hartree trace drift")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-9:
        raise RuntimeError("Hartree Hermiticity drift")
    return times, states


def trace_norm(A):
    """Sum of the absolute eigenvalues of a Hermitian matrix."""
    A = _check_hermitian(A, 1e-8, "trace-norm argument")
    return float(np.abs(np.linalg.eigvalsh(A)).sum())


def _kron_chain(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def quantum_correlation_error(marginals, rho):
    """Inclusion-exclusion correlation operators from marginals rho_1..rho_jmax.

    marginals are DensityMatrix objects on 1..j_max qudits; rho is the one-qudit
    reference state.  Returns a list of Hermitian matrices E_0..E_jmax with
    E_0 = 1.
    """
    d = rho.d
    eye = np.eye(d)
    E = [np.complex128(1.0)]
    j_max = len(marginals)
    for j in range(1, j_max + 1):
        D = d**j
        acc = np.zeros((D, D), dtype=complex)
        for mask in range(1 << j):
            k = bin(mask).count("1")
            # F factors on the masked slots, the (j-k)-marginal spread on the rest
            factors = [rho.data if (mask >> s) & 1 else eye for s in range(j)]
            Fpart = _kron_chain(factors)
            if k == j:
                term = Fpart
            else:
                rest_slots = [s for s in range(j) if not (mask >> s) & 1]
                term = Fpart @ _spread(marginals[j - k - 1].data, rest_slots, j, d)
            acc += (-1.0) ** k * term
        acc = 0.5 * (acc + acc.conj().T)
        E.append(acc)
    return E


def _spread(M, slots, j, d):
    """Embed an operator on len(slots) qudits into slots of a j-qudit space."""
    k = len(slots)
    big = np.kron(M, np.eye(d ** (j - k))) if k < j else M
    if k == j:
        return big
    perm_sites = list(slots) + [q for q in range(j) if q not in slots]
    inv = [0] * j
    for pos, site in enumerate(perm_sites):
        inv[site] = pos
    big = big.reshape((d,) * j + (d,) * j)
    big = big.transpose(tuple(inv) + tuple(j + q for q in inv))
    return big.reshape(d**j, d**j)


def check_quantum_chaos(distances, constants, normV_inf, hbar, N):
    """Trace-norm chaos bound with the literal exponent 2 D1 t |V|_inf / hbar."""
    from .bounds import CheckRow, exp_or_inf, log_le

    rows = []
    for (j, t), v in sorted(distances.items()):
        log_bound = (
            math.log(constants.D2)
            + 2.0 * constants.D1 * t * normV_inf / hbar
            + 2 * math.log(j)
            - math.log(N)
        )
        rows.append(
            CheckRow(j=j, t=t, value=v, bound=exp_or_inf(log_bound), passed=log_le(v, log_bound))
        )
    return rows


def save_matrix(path, rho: DensityMatrix):
    """Binary dump: int32 d, int32 n, then row-major complex pairs (little endian)."""
    with open(path, "wb") as fh:
        np.array([rho.d, rho.n], dtype="<i4").tofile(fh)
        inter = np.empty(rho.data.size * 2)
        inter[0::2] = rho.data.real.ravel()
        inter[1::2] = rho.data.imag.ravel()
        inter.astype("<f8").tofile(fh)


def load_matrix(path):
    with open(path, "rb") as fh:
        d, n = np.fromfile(fh, dtype="<i4", count=2)
        raw = np.fromfile(fh, dtype="<f8")
    D = int(d) ** int(n)
    data = raw[0::2] + 1j * raw[1::2]
    return DensityMatrix(int(n), int(d), data.reshape(D, D))

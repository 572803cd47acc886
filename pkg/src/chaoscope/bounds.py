"""Closed-form constants, the subset-alpha identity, and the scaling-bound checkers."""

import json
import math
from dataclasses import asdict, dataclass
from itertools import combinations


@dataclass(frozen=True)
class BoundsConstants:
    C0: float
    B0: float
    C1: float
    C2: float
    B1: float
    B2: float
    D1: float
    D2: float

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def compute_constants(C0=1.0, B0=1.0):
    """Evaluate the explicit constant chain in double precision.

    C2 is linear in C0; B2 needs C1 > 2, which holds by a wide margin.
    """
    if C0 < 1:
        raise ValueError("C0 must be >= 1")
    if B0 <= 0:
        raise ValueError("B0 must be positive")
    two_e = 2.0 * math.e
    base = 16.0 * two_e ** (1.0 + 1.0 / (12.0 * math.e))
    C2 = base * C0
    C1 = 4.0 * base / abs(math.log(1.0 - 1.0 / (24.0 * math.e)))
    B1 = 2.0 * C1
    assert C1 > 2.0, "B2 formula requires C1 > 2"
    B2 = B0 + 0.5 + 16.0 * C2**2 / (C1 - 2.0)
    D2 = max(B2, 8.0 * (math.e * C2) ** 2)
    D1 = max(B1, 2.0 * C1)
    return BoundsConstants(C0=C0, B0=B0, C1=C1, C2=C2, B1=B1, B2=B2, D1=D1, D2=D2)


def alpha(j, N):
    """(N - j) / N."""
    if not (0 <= j <= N):
        raise ValueError(f"need 0 <= j <= N, got j={j}, N={N}")
    return (N - j) / N


def subset_alpha_identity(j, N, r):
    """Both sides of the alternating subset sum over alpha(j - k, N).

    The left side enumerates all subsets of an r-element set explicitly; the
    right side is alpha(j, N) for r = 0, -1/N for r = 1 and 0 otherwise.
    """
    if not (0 <= r <= j <= N):
        raise ValueError(f"need 0 <= r <= j <= N, got r={r}, j={j}, N={N}")
    if r > 24:
        raise ValueError("subset enumeration capped at r <= 24")
    lhs = 0.0
    labels = range(r)
    for k in range(r + 1):
        for _ in combinations(labels, k):
            lhs += (-1.0) ** k * alpha(j - k, N)
    if r == 0:
        rhs = alpha(j, N)
    elif r == 1:
        rhs = -1.0 / N
    else:
        rhs = 0.0
    return lhs, rhs


@dataclass
class CheckRow:
    j: int
    t: float
    value: float
    bound: float
    passed: bool


MAX_EXP = 700.0  # log of the largest finite double, rounded down


def exp_or_inf(log_bound):
    """exp(log_bound), saturating to +inf instead of overflowing."""
    return math.exp(log_bound) if log_bound < MAX_EXP else math.inf


def log_le(value, log_bound):
    """value <= exp(log_bound), evaluated without forming the exponential."""
    if value <= 0.0:
        return True
    return math.log(value) <= log_bound


class HypothesisViolation(RuntimeError):
    pass


def check_main_theorem(norms, constants, normV, N):
    """Check the size-of-chaos bound on a table {(j, t): l1 norm of E_j}.

    Refuses when the t = 0 entries violate the initial-data hypothesis
    C0^j (j/sqrt(N))^j (and B0/N for j = 1 when present).
    """
    c = constants
    for (j, t), v in norms.items():
        if t == 0.0:
            hyp = c.C0**j * (j / math.sqrt(N)) ** j
            if v > hyp * (1 + 1e-12):
                raise HypothesisViolation(
                    f"initial data violates the hypothesis at j={j}: {v:.3e} > {hyp:.3e}"
                )
            if j == 1 and v > c.B0 / N * (1 + 1e-12):
                raise HypothesisViolation(
                    f"initial E_1 norm {v:.3e} exceeds B0/N = {c.B0 / N:.3e}"
                )
    rows = []
    for (j, t), v in sorted(norms.items()):
        # the exponentials overflow doubles for realistic (t, normV); work in logs
        log_bound = j * (math.log(c.C2) + c.C1 * t * normV + math.log(j / math.sqrt(N)))
        if j == 1:
            log_bound = min(log_bound, math.log(c.B2) + c.B1 * t * normV - math.log(N))
        rows.append(
            CheckRow(j=j, t=t, value=v, bound=exp_or_inf(log_bound), passed=log_le(v, log_bound))
        )
    return rows


def check_corollary(distances, constants, normV, N):
    """Check the chaos-distance bound on a table {(j, t): ||F_j - F^(x j)||_1}."""
    c = constants
    rows = []
    for (j, t), v in sorted(distances.items()):
        log_bound = math.log(c.D2) + c.D1 * t * normV + 2 * math.log(j) - math.log(N)
        rows.append(
            CheckRow(j=j, t=t, value=v, bound=exp_or_inf(log_bound), passed=log_le(v, log_bound))
        )
    return rows


def report_json(rows):
    return json.dumps(
        [{"j": r.j, "t": r.t, "value": r.value, "bound": r.bound, "pass": r.passed} for r in rows],
        indent=2,
    )


def all_pass(rows):
    return all(r.passed for r in rows)

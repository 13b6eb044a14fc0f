"""Quantitative norm chain certifying square-root growth of the minimax value.

For the corner martingale of the all-ones matrix, a weighted column-stacked
test matrix A splits exactly as A = B + C against any projection e:
B compresses through e and scales like the half-supremum m of the
compressed norms, C lives on the complement of e.  Quasi-norm bounds on
A, B, C (for exponents p < 1/2) combine through the p-triangle inequality
into the lower bound m >= delta * sqrt(N), valid once the complement trace
is below an explicit threshold t'.  The constants come from closed-form
bounds on the upper-triangular all-ones matrices T_n.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .algebra import (CertificationError, Operator, Projection, TracialAlgebra,
                      UNNORMALIZED, product_algebra)
from .construction import corner_column, corner_ones, ones_martingale
from .schatten import lp_norm, operator_norm

REL_TOL = 1e-9


def triangular_ones(n: int) -> Operator:
    """Upper-triangular all-ones matrix in M_n under the unnormalized trace."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return TracialAlgebra(n, UNNORMALIZED).operator(np.triu(np.ones((n, n))))


@dataclasses.dataclass
class TnBoundsRow:
    n: int
    p: float
    lower: float
    value: float
    upper: float

    @property
    def passed(self) -> bool:
        return (self.lower <= self.value * (1 + REL_TOL)
                and self.value <= self.upper * (1 + REL_TOL))


def triangular_norm_bounds(n: int, p: float) -> TnBoundsRow:
    """Sandwich (n/2)^(1/p) <= ||T_n||_p <= (2n/(1-2^(p-1)))^(1/p) for 0 < p < 1.

    The lower bound comes from the p-triangle inequality applied to
    T_n - S T_n = Id with a norm-one shift S; the upper bound from the
    dyadic recursion of :func:`dyadic_norm_recursion`.
    """
    if not (0 < p < 1):
        raise ValueError(f"the sandwich requires 0 < p < 1, got p={p}")
    value = lp_norm(triangular_ones(n), p)
    lower = (n / 2.0) ** (1.0 / p)
    upper = (2.0 * n / (1.0 - 2.0 ** (p - 1.0))) ** (1.0 / p)
    return TnBoundsRow(n=n, p=p, lower=lower, value=value, upper=upper)


@dataclasses.dataclass
class DyadicRecursionReport:
    p: float
    v: list[float]
    limit_bound: float
    base_ok: bool
    recursion_ok: bool
    bound_ok: bool

    @property
    def passed(self) -> bool:
        return self.base_ok and self.recursion_ok and self.bound_ok


def dyadic_norm_recursion(kmax: int, p: float) -> DyadicRecursionReport:
    """Check v_k = 2^-k ||T_(2^k)||_p^p against its one-step recursion.

    Cutting T_(2m) into two diagonal copies of T_m plus an all-ones block
    and applying the p-triangle inequality gives
    v_(k+1) <= v_k + 2^(k(p-1)-1), hence v_k <= 1/(1 - 2^(p-1)).
    """
    if not (0 < p < 1):
        raise ValueError(f"recursion requires 0 < p < 1, got p={p}")
    v = [2.0 ** -k * lp_norm(triangular_ones(2 ** k), p) ** p
         for k in range(kmax + 1)]
    base_ok = abs(v[0] - 1.0) <= REL_TOL
    recursion_ok = all(
        v[k + 1] <= (v[k] + 2.0 ** (k * (p - 1.0) - 1.0)) * (1 + REL_TOL)
        for k in range(kmax))
    limit = 1.0 / (1.0 - 2.0 ** (p - 1.0))
    bound_ok = all(vk <= limit * (1 + REL_TOL) for vk in v)
    return DyadicRecursionReport(p=p, v=v, limit_bound=limit, base_ok=base_ok,
                                 recursion_ok=recursion_ok, bound_ok=bound_ok)


# ---------------------------------------------------------------------------
# Certified constants
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class ChainConstants:
    """Closed-form constants of the chain, valid for 0 < p < 1/2.

    ``c`` is the lower constant for A, ``big_c`` the upper constant for C.
    ``t_prime`` solves big_c^p t^(1/2) = c^p / 2, the largest complement
    trace for which the chain still forces growth, and ``delta`` is the
    resulting coefficient of sqrt(N) in the certified lower bound.
    """

    p: float
    c: float
    big_c: float
    t_prime: float
    delta: float

    @classmethod
    def for_exponent(cls, p: float) -> "ChainConstants":
        if not (0 < p < 0.5):
            raise ValueError(f"chain constants need 0 < p < 1/2, got p={p}")
        c = 2.0 ** -(1.0 + 2.0 / p)
        big_c = (2.0 / (1.0 - 2.0 ** (2.0 * p - 1.0))) ** (1.0 / (2.0 * p))
        t_prime = (c ** p / (2.0 * big_c ** p)) ** 2
        delta = (c ** p / 2.0) ** (1.0 / p) / 2.0
        return cls(p=p, c=c, big_c=big_c, t_prime=t_prime, delta=delta)


@dataclasses.dataclass(frozen=True)
class ChainCertificate:
    p: float
    t: float
    t_prime: float
    delta: float
    applies: bool


def certified_lower_bound(p: float, t: float) -> ChainCertificate:
    """Constants (t', delta) such that the minimax value of the corner
    martingale is at least delta * sqrt(N) whenever the complement-trace
    budget satisfies t <= t', in any tracial algebra containing the factor.
    """
    k = ChainConstants.for_exponent(p)
    return ChainCertificate(p=p, t=t, t_prime=k.t_prime, delta=k.delta,
                            applies=t <= k.t_prime)


# ---------------------------------------------------------------------------
# The A = B + C decomposition
# ---------------------------------------------------------------------------

def _pair_algebra(N: int) -> TracialAlgebra:
    """(M_N, normalized) tensor (M_N, unnormalized): trace weight 1/N."""
    return product_algebra(TracialAlgebra(N), TracialAlgebra(N, UNNORMALIZED))


def test_matrix(N: int) -> Operator:
    """A = sum_n n * (column block eta_n) (x) e_(1,n), the chain's test matrix."""
    alg = _pair_algebra(N)
    total = np.zeros((N * N, N * N), dtype=complex)
    for n in range(1, N + 1):
        unit = np.zeros((N, N))
        unit[0, n - 1] = 1.0
        total += n * np.kron(corner_column(N, n).entries, unit)
    return alg.operator(total)


def half_sup(terms: Sequence[Operator], e: Projection) -> float:
    """Half of the largest operator norm among the compressed terms."""
    return 0.5 * max(operator_norm(t @ e.op) for t in terms)


def test_matrix_split(N: int, e: Projection, m: float
                      ) -> tuple[Operator, Operator, list[float]]:
    """Split A = B + C against the projection ``e`` at scale ``m``.

    B routes each term through the contraction U_n = e Y_n / (2m) and the
    compression e (x) e_(1,1); C is the complement part.  The split is an
    exact entrywise identity; the contractions are genuine contractions
    exactly when 2m dominates every compressed norm ||Y_n e||, which holds
    when m is the half-supremum.  Returns (B, C, contraction norms).
    """
    if e.algebra.dim != N:
        raise ValueError("projection must live in the base factor")
    alg = _pair_algebra(N)
    emat = e.matrix
    comp = np.eye(N) - emat
    unit11 = np.zeros((N, N)); unit11[0, 0] = 1.0
    inner = np.zeros((N * N, N * N), dtype=complex)
    cpart = np.zeros((N * N, N * N), dtype=complex)
    u_norms = []
    for n in range(1, N + 1):
        y = corner_ones(N, n).entries
        eta = corner_column(N, n).entries
        u = (emat @ y) / (2.0 * m) if m > 0 else np.zeros((N, N))
        u_norms.append(float(np.linalg.norm(u, 2)))
        unit = np.zeros((N, N)); unit[0, n - 1] = 1.0
        inner += np.kron(u @ eta, unit)
        cpart += n * np.kron(eta, unit)
    if max(u_norms) > 1.0 + REL_TOL:
        raise CertificationError(
            f"contraction violation: ||U_n|| = {max(u_norms):.12f} > 1; "
            "the pair (e, m) is invalid")
    B = alg.operator(2.0 * m * np.kron(emat, unit11) @ inner)
    C = alg.operator(np.kron(comp, unit11) @ cpart)
    return B, C, u_norms


@dataclasses.dataclass
class ChainReport:
    """Numbers and verdicts for one run of the chain against one projection."""

    N: int
    p: float
    t: float
    corank: int
    m: float
    norm_a: float
    norm_b: float
    norm_c: float
    bound_a: float          # c_p N, lower bound for ||A||_p
    bound_b: float          # 2 m sqrt(N), upper bound for ||B||_p
    bound_c: float          # C_p t^(1/(2p)) N, upper bound for ||C||_p
    identity_err: float
    max_contraction: float
    t_prime: float
    delta: float
    certificate_applies: bool
    certified_value: float  # delta * sqrt(N)
    assertions: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())


def verify_chain(N: int, p: float, t: float, e: Projection) -> ChainReport:
    """Assert the full inequality chain for one admissible projection.

    Checks, with norms in (M_N, normalized) (x) (M_N, unnormalized):
    the lower bound on ||A||_p, the compression bound on ||B||_p, the
    complement bound on ||C||_p, the p-triangle step linking them, and
    (whenever t <= t') the implied growth m >= delta sqrt(N).  All five
    hold for every projection of normalized corank at most t, optimal
    or not.
    """
    consts = ChainConstants.for_exponent(p)
    if e.normalized_corank > t + 1e-12:
        raise ValueError(
            f"corank violation: tau(1-e) = {e.normalized_corank} exceeds t = {t}")
    terms = [corner_ones(N, n) for n in range(1, N + 1)]
    m = half_sup(terms, e)
    A = test_matrix(N)
    B, C, u_norms = test_matrix_split(N, e, m)
    identity_err = float(np.max(np.abs(A.entries - (B.entries + C.entries))))
    na, nb, nc = lp_norm(A, p), lp_norm(B, p), lp_norm(C, p)
    bound_a = consts.c * N
    bound_b = 2.0 * m * math.sqrt(N)
    bound_c = consts.big_c * t ** (1.0 / (2.0 * p)) * N
    certified = consts.delta * math.sqrt(N)
    applies = t <= consts.t_prime
    assertions = {
        "lower_a": na >= bound_a * (1 - REL_TOL),
        "upper_b": nb <= bound_b * (1 + REL_TOL) + 1e-15,
        "upper_c": nc <= bound_c * (1 + REL_TOL) + 1e-15,
        "p_triangle": na ** p <= (nb ** p + nc ** p) * (1 + REL_TOL),
        "growth": (m >= certified * (1 - REL_TOL)) if applies else True,
        "identity": identity_err <= 1e-9,
    }
    return ChainReport(N=N, p=p, t=t, corank=e.corank, m=m,
                       norm_a=na, norm_b=nb, norm_c=nc,
                       bound_a=bound_a, bound_b=bound_b, bound_c=bound_c,
                       identity_err=identity_err,
                       max_contraction=max(u_norms),
                       t_prime=consts.t_prime, delta=consts.delta,
                       certificate_applies=applies, certified_value=certified,
                       assertions=assertions)

"""Explicit martingale family on matrix algebras and its signed series.

The basic object is the all-ones rank-one matrix in the normalized trace,
its corner-filtration martingale (a growing all-ones corner plus the
complementary identity), and the factorially indexed, sign-weighted series
of its p-normalized copies on a truncated product algebra.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence

import numpy as np

from .algebra import CertificationError, NORMALIZED, Operator, TracialAlgebra
from .condexp import (FactorFiltration, ProductFiltration,
                      TruncatedProductAlgebra, product_cond_exp)


def ones_column(N: int) -> Operator:
    """Matrix whose first column is all ones (sum of the column matrix units)."""
    m = np.zeros((N, N), dtype=complex)
    m[:, 0] = 1.0
    return TracialAlgebra(N, NORMALIZED).operator(m)


def ones_matrix(N: int) -> Operator:
    """All-ones N x N matrix; rank one with trace-norm 1 under the normalized trace."""
    xi = ones_column(N)
    return xi @ xi.H


def scaled_ones_matrix(N: int, p: float) -> Operator:
    """All-ones matrix scaled by N^(1/p - 1) so its p-norm is exactly 1."""
    if p <= 0:
        raise ValueError("p must be positive")
    return float(N) ** (1.0 / p - 1.0) * ones_matrix(N)


def corner_ones(N: int, n: int) -> Operator:
    """Rank-one all-ones block on the first ``n`` coordinates inside M_N."""
    m = np.zeros((N, N), dtype=complex)
    m[:n, :n] = 1.0
    return TracialAlgebra(N, NORMALIZED).operator(m)


def corner_column(N: int, n: int) -> Operator:
    """First column filled with ones down to row ``n`` inside M_N."""
    m = np.zeros((N, N), dtype=complex)
    m[:n, 0] = 1.0
    return TracialAlgebra(N, NORMALIZED).operator(m)


# ---------------------------------------------------------------------------
# Martingale sequences
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class MartingaleSequence:
    """Operators adapted to a filtration, one term per level."""

    algebra: TracialAlgebra
    terms: tuple[Operator, ...]
    filtration: object
    levels: tuple[int, ...]

    def __post_init__(self):
        if len(self.terms) != len(self.levels):
            raise ValueError("one level per term required")

    def __len__(self) -> int:
        return len(self.terms)

    def validate(self, tol: float = 1e-9) -> None:
        """Check adaptedness and the martingale property, level by level."""
        for lv, term in zip(self.levels, self.terms):
            fixed = self.filtration.cond_exp(lv, term)
            err = np.max(np.abs(fixed.entries - term.entries))
            if err > tol:
                raise CertificationError(
                    f"term at level {lv} is not fixed by its expectation (err {err:.2e})")
        for (lv, term), nxt in zip(zip(self.levels, self.terms), self.terms[1:]):
            back = self.filtration.cond_exp(lv, nxt)
            err = np.max(np.abs(back.entries - term.entries))
            if err > tol:
                raise CertificationError(
                    f"martingale property fails at level {lv} (err {err:.2e})")


def ones_martingale(N: int) -> MartingaleSequence:
    """Levels 1..N of the corner filtration applied to the all-ones matrix.

    The closed form at level n is the all-ones corner of side n plus the
    identity on the remaining coordinates; it is block diagonal with
    operator norm exactly n.
    """
    filt = FactorFiltration(N)
    terms = []
    for n in range(1, N + 1):
        m = np.zeros((N, N), dtype=complex)
        m[:n, :n] = 1.0
        m[np.arange(n, N), np.arange(n, N)] = 1.0
        terms.append(filt.ambient.operator(m))
    return MartingaleSequence(algebra=filt.ambient, terms=tuple(terms),
                              filtration=filt, levels=tuple(range(1, N + 1)))


# ---------------------------------------------------------------------------
# Signed factorial series on a truncated product algebra
# ---------------------------------------------------------------------------

def _factorial(n: int) -> int:
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


def _assign_slots(trunc: TruncatedProductAlgebra, terms: Sequence[int]) -> dict[int, int]:
    """Map each series index N to an unused factor slot of size N factorial."""
    available: dict[int, list[int]] = {}
    for slot, size in enumerate(trunc.factors):
        available.setdefault(size, []).append(slot)
    assignment = {}
    for N in terms:
        size = _factorial(N)
        if size not in available or not available[size]:
            raise ValueError(f"no factor slot of size {size} available for term {N}")
        if trunc.sign_count < size:
            raise ValueError(
                f"sign coordinate {size} not retained (m={trunc.sign_count})")
        assignment[N] = available[size].pop(0)
    return assignment


def signed_ones_series(trunc: TruncatedProductAlgebra, p: float,
                       terms: Iterable[int]) -> Operator:
    """Partial sum sum_N eps_(N!) N^-2 X_(p, N!) embedded in the truncation.

    Each summand occupies its own factor slot (of size N factorial) and the
    sign coordinate with the same factorial index; untouched tensor slots
    carry the identity.
    """
    terms = sorted(set(int(N) for N in terms))
    assignment = _assign_slots(trunc, terms)
    total = np.zeros((trunc.dim, trunc.dim), dtype=complex)
    for N in terms:
        size = _factorial(N)
        sign = np.diag(trunc.sign_values(size))
        block = scaled_ones_matrix(size, p).entries
        emb = trunc.embed(sign_part=sign, factor_parts={assignment[N]: block})
        total += emb.entries / (N * N)
    return trunc.algebra.operator(total)


def flip_sign_coordinate(trunc: TruncatedProductAlgebra, k: int, X: Operator) -> Operator:
    """Trace-preserving involution negating the k-th sign coordinate."""
    perm = trunc.flip_permutation(k)
    P = trunc.embed(sign_part=perm)
    return P @ X @ P


@dataclasses.dataclass
class FlipIdentityReport:
    N: int
    p: float
    terms: tuple[int, ...]
    identity_err: float
    commute_err: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.identity_err <= self.tol and self.commute_err <= self.tol


def sign_flip_identity_check(trunc: TruncatedProductAlgebra, p: float, N: int,
                             terms: Iterable[int] | None = None,
                             tol: float = 1e-10,
                             rng: np.random.Generator | None = None) -> FlipIdentityReport:
    """Check that flipping the N!-th sign isolates one series term exactly.

    Flipping the sign coordinate N! negates exactly one summand, so
    ``eps_(N!) (S - flip(S)) = (2 / N^2) X_(p, N!)`` holds entrywise on any
    partial sum containing the term N.  Also checks that the flip commutes
    with every level of the product conditional expectation.
    """
    rng = rng or np.random.default_rng(0)
    terms = tuple(sorted(set(terms))) if terms is not None else (N,)
    if N not in terms:
        raise ValueError(f"term {N} must be part of the partial sum")
    series = signed_ones_series(trunc, p, terms)
    flipped = flip_sign_coordinate(trunc, _factorial(N), series)
    size = _factorial(N)
    assignment = _assign_slots(trunc, terms)
    lhs = (2.0 / N ** 2) * trunc.embed(
        factor_parts={assignment[N]: scaled_ones_matrix(size, p).entries})
    eps = trunc.embed(sign_part=np.diag(trunc.sign_values(size)))
    rhs = eps @ (series - flipped)
    identity_err = float(np.max(np.abs(lhs.entries - rhs.entries)))

    filt = ProductFiltration(trunc)
    commute_err = 0.0
    X = trunc.algebra.operator(
        rng.standard_normal((trunc.dim, trunc.dim))
        + 1j * rng.standard_normal((trunc.dim, trunc.dim)))
    for lv in filt.levels:
        a = flip_sign_coordinate(trunc, size, product_cond_exp(trunc, lv, X))
        b = product_cond_exp(trunc, lv, flip_sign_coordinate(trunc, size, X))
        commute_err = max(commute_err, float(np.max(np.abs(a.entries - b.entries))))
    return FlipIdentityReport(N=N, p=p, terms=terms, identity_err=identity_err,
                              commute_err=commute_err, tol=tol)

"""Conditional expectations for block filtrations on matrix algebras.

Two settings are covered.  Inside a single factor of side length N, the
level-n subalgebra is the upper-left n x n corner plus the diagonal of the
complement; the associated conditional expectation is the Schur mask that
keeps the corner and the complementary diagonal and zeroes everything else.
On a truncated product algebra (a classical sign component tensored with
finitely many matrix factors) the level-n expectation acts slotwise.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Sequence

import numpy as np

from .algebra import (DEFAULT_DIM_CAP, NORMALIZED, Operator, TracialAlgebra,
                      random_operator, trace)
from .schatten import lp_norm


def _corner_mask(N: int, level: int) -> np.ndarray:
    """0/1 mask keeping the level x level corner and the rest of the diagonal."""
    m = np.zeros((N, N))
    m[:level, :level] = 1.0
    np.fill_diagonal(m, 1.0)
    return m


@dataclasses.dataclass(frozen=True)
class FactorFiltrationLevel:
    """Level ``level`` of the corner-plus-diagonal filtration inside M_N."""

    ambient: int
    level: int

    def __post_init__(self):
        if not (1 <= self.level <= self.ambient):
            raise ValueError(
                f"level must satisfy 1 <= n <= {self.ambient}, got {self.level}")


def factor_cond_exp(lvl: FactorFiltrationLevel, X: Operator) -> Operator:
    """Conditional expectation onto the corner-plus-diagonal subalgebra.

    Keeps the upper-left block of side ``lvl.level``, replaces the
    lower-right block by its diagonal, zeroes the off-diagonal blocks.
    Trace preserving, unital and idempotent by construction.
    """
    N = lvl.ambient
    if X.algebra.dim != N:
        raise ValueError(f"operator dim {X.algebra.dim} does not match level ambient {N}")
    return Operator(X.entries * _corner_mask(N, lvl.level), X.algebra)


# ---------------------------------------------------------------------------
# Truncated product algebra: sign component (x) matrix factors
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class TruncatedProductAlgebra:
    """Finite truncation of (signs) (x) (product of matrix factors).

    ``sign_count`` classical +-1 coordinates are represented as the diagonal
    subalgebra of a 2^m-dimensional slot; the matrix factors follow in
    ascending slot order.  The Kronecker convention puts the sign slot
    first and lets earlier slots vary slowest; within the sign slot,
    coordinate 1 is the slowest bit.  The trace is the uniform average over
    sign configurations tensored with the normalized factor traces, i.e.
    the normalized trace of the full matrix.
    """

    sign_count: int
    factors: tuple[int, ...]
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(int(n) for n in self.factors))
        if self.sign_count < 0 or any(n < 1 for n in self.factors):
            raise ValueError("malformed truncation descriptor")
        if self.dim > self.dim_cap:
            raise ValueError(f"truncation dimension {self.dim} exceeds cap {self.dim_cap}")

    @property
    def sign_dim(self) -> int:
        return 2 ** self.sign_count

    @property
    def dim(self) -> int:
        return self.sign_dim * math.prod(self.factors)

    @property
    def algebra(self) -> TracialAlgebra:
        return TracialAlgebra(self.dim, NORMALIZED)

    # -- embeddings ---------------------------------------------------------
    def embed(self, sign_part: np.ndarray | None = None,
              factor_parts: dict[int, np.ndarray] | None = None) -> Operator:
        """Kronecker-assemble an operator, identity on unspecified slots."""
        mats = [np.eye(self.sign_dim, dtype=complex) if sign_part is None
                else np.asarray(sign_part, dtype=complex)]
        factor_parts = factor_parts or {}
        for k, n in enumerate(self.factors):
            mats.append(np.asarray(factor_parts.get(k, np.eye(n)), dtype=complex))
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return self.algebra.operator(out)

    def sign_values(self, k: int) -> np.ndarray:
        """Values of the k-th sign coordinate over the 2^m configurations."""
        if not (1 <= k <= self.sign_count):
            raise ValueError(f"sign coordinate {k} not retained (m={self.sign_count})")
        out = np.ones(1)
        for coord in range(1, self.sign_count + 1):
            out = np.kron(out, np.array([1.0, -1.0]) if coord == k else np.ones(2))
        return out

    def epsilon(self, k: int) -> Operator:
        """The k-th sign coordinate as a diagonal operator."""
        return self.embed(sign_part=np.diag(self.sign_values(k)))

    def flip_permutation(self, k: int) -> np.ndarray:
        """Permutation of sign configurations negating coordinate k."""
        if not (1 <= k <= self.sign_count):
            raise ValueError(f"sign coordinate {k} not retained (m={self.sign_count})")
        idx = np.arange(self.sign_dim)
        bit = 1 << (self.sign_count - k)
        perm = np.zeros((self.sign_dim, self.sign_dim))
        perm[idx ^ bit, idx] = 1.0
        return perm


def product_cond_exp(alg: TruncatedProductAlgebra, n: int, X: Operator) -> Operator:
    """Level-``n`` conditional expectation on the truncated product algebra.

    Acts as the identity on the sign slot and on factors of size <= n, and
    as the corner-plus-diagonal expectation at level n on larger factors.
    Level 0 projects onto the classical component: identity on the sign
    slot, trace times identity on every factor.
    """
    if n < 0:
        raise ValueError("level must be >= 0")
    if X.algebra.dim != alg.dim:
        raise ValueError("operator does not live in the truncated algebra")
    dims = [alg.sign_dim, *alg.factors]
    if n == 0:
        t = X.entries.reshape(dims + dims)
        f = len(alg.factors)
        # Partial trace over every factor slot, then tensor back identities.
        for slot in range(f):
            t = np.trace(t, axis1=1, axis2=2 + (f - slot))
        t /= math.prod(alg.factors)
        out = t  # shape (sign_dim, sign_dim)
        for nk in alg.factors:
            out = np.kron(out, np.eye(nk))
        return X.algebra.operator(out)
    mask = np.ones((alg.sign_dim, alg.sign_dim))
    for nk in alg.factors:
        mask = np.kron(mask, np.ones((nk, nk)) if nk <= n else _corner_mask(nk, n))
    return Operator(X.entries * mask, X.algebra)


# ---------------------------------------------------------------------------
# Filtration descriptors
# ---------------------------------------------------------------------------

class FactorFiltration:
    """Levels 0..N of the corner filtration inside one factor M_N.

    Level 0 is the diagonal subalgebra (the natural bottom of the corner
    filtration: a 0 x 0 corner plus the full diagonal), which coincides
    with level 1.
    """

    def __init__(self, N: int, trace_mode: str = NORMALIZED):
        self.N = N
        self.ambient = TracialAlgebra(N, trace_mode)

    @property
    def levels(self) -> range:
        return range(0, self.N + 1)

    def cond_exp(self, n: int, X: Operator) -> Operator:
        if not (0 <= n <= self.N):
            raise ValueError(f"level {n} out of range 0..{self.N}")
        return Operator(X.entries * _corner_mask(self.N, n), X.algebra)


class ProductFiltration:
    """Levels 0..max(factors) on a truncated product algebra."""

    def __init__(self, truncation: TruncatedProductAlgebra):
        self.truncation = truncation
        self.ambient = truncation.algebra

    @property
    def levels(self) -> range:
        return range(0, max(self.truncation.factors) + 1)

    def cond_exp(self, n: int, X: Operator) -> Operator:
        return product_cond_exp(self.truncation, n, X)


# ---------------------------------------------------------------------------
# Axiom checker for candidate conditional expectations
# ---------------------------------------------------------------------------

AXIOMS = ("trace_preservation", "unitality", "idempotence", "positivity",
          "bimodule", "lp_contractivity")


@dataclasses.dataclass
class AxiomResult:
    axiom: str
    passed: bool
    worst: float
    detail: str = ""


@dataclasses.dataclass
class CondExpAxiomReport:
    results: dict[str, AxiomResult]
    trials: int
    tol: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failures(self) -> list[AxiomResult]:
        return [r for r in self.results.values() if not r.passed]


def check_condexp_axioms(E: Callable[[Operator], Operator], alg: TracialAlgebra,
                         trials: int = 20, rng: np.random.Generator | None = None,
                         tol: float = 1e-8,
                         p_list: Sequence[float] = (1, 2, math.inf)) -> CondExpAxiomReport:
    """Stress a candidate conditional expectation on random inputs.

    Checks trace preservation, unitality, idempotence, positivity on A*A
    inputs, the bimodule property E(aXb) = a E(X) b for a, b in the range
    of E, and L_p contractivity for the given exponents.  Reports the worst
    violation per axiom together with the trial where it happened.
    """
    rng = rng or np.random.default_rng(0)
    worst = {name: (0.0, "") for name in AXIOMS}

    def note(axiom, value, detail):
        if value > worst[axiom][0]:
            worst[axiom] = (float(value), detail)

    one = alg.identity()
    note("unitality", np.max(np.abs(E(one).entries - one.entries)), "identity input")
    for k in range(trials):
        X = random_operator(alg, rng)
        EX = E(X)
        note("trace_preservation", abs(trace(EX) - trace(X)), f"trial {k}")
        note("idempotence", np.max(np.abs(E(EX).entries - EX.entries)), f"trial {k}")
        A = random_operator(alg, rng)
        pos = E(A.H @ A)
        wmin = np.linalg.eigvalsh(0.5 * (pos.entries + pos.entries.conj().T))[0]
        note("positivity", max(0.0, -float(wmin)), f"trial {k}")
        a, b = E(random_operator(alg, rng)), E(random_operator(alg, rng))
        lhs = E(a @ X @ b).entries
        rhs = (a @ EX @ b).entries
        scale = 1.0 + np.max(np.abs(rhs))
        note("bimodule", np.max(np.abs(lhs - rhs)) / scale, f"trial {k}")
        for p in p_list:
            nl, nr = lp_norm(EX, p), lp_norm(X, p)
            note("lp_contractivity", max(0.0, nl - nr) / (1.0 + nr), f"trial {k}, p={p}")

    results = {name: AxiomResult(name, w <= tol, w, d)
               for name, (w, d) in worst.items()}
    return CondExpAxiomReport(results=results, trials=trials, tol=tol)

"""Dense complex matrix algebras with traces, tensors, and projection calculus.

Everything downstream works with three objects: a :class:`TracialAlgebra`
(a matrix size plus a trace convention), an :class:`Operator` (a dense
complex square matrix tagged with its algebra), and a :class:`Projection`
(a Hermitian idempotent with certified {0, 1} spectrum).  All spectral
computations funnel through the Hermitian eigendecomposition; singular
values of a general matrix are square roots of eigenvalues of A*A.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence

import numpy as np

# Hard ceiling on tensor-product dimensions; keeps every experiment desk scale.
DEFAULT_DIM_CAP = 4096

# Validation tolerance for projections (Hermiticity, idempotence, spectrum).
PROJECTION_TOL = 1e-9

NORMALIZED = "normalized"
UNNORMALIZED = "unnormalized"
WEIGHTED = "weighted"


class CertificationError(RuntimeError):
    """A numerical certificate (an asserted inequality or identity) failed."""


@dataclasses.dataclass(frozen=True)
class TracialAlgebra:
    """Full matrix algebra of a fixed side length with a diagonal-weight trace.

    ``trace_mode`` is ``"normalized"`` (trace of identity is 1),
    ``"unnormalized"`` (trace of identity is ``dim``), or ``"weighted"``
    with an explicit per-diagonal-entry ``weight``.  The weighted mode is
    what mixed tensor products produce: the product trace weight is the
    product of the factor weights, so trace(A (x) B) = trace(A) trace(B)
    holds for every combination of conventions.
    """

    dim: int
    trace_mode: str = NORMALIZED
    weight: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        if self.trace_mode == NORMALIZED:
            w = 1.0 / self.dim
        elif self.trace_mode == UNNORMALIZED:
            w = 1.0
        elif self.trace_mode == WEIGHTED:
            if self.weight is None or self.weight <= 0:
                raise ValueError("weighted trace_mode needs a positive weight")
            w = float(self.weight)
        else:
            raise ValueError(f"unknown trace_mode {self.trace_mode!r}")
        object.__setattr__(self, "weight", w)

    def operator(self, entries) -> "Operator":
        return Operator(np.asarray(entries, dtype=complex), self)

    def identity(self) -> "Operator":
        return self.operator(np.eye(self.dim))

    def zero(self) -> "Operator":
        return self.operator(np.zeros((self.dim, self.dim)))


@dataclasses.dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix living in a fixed tracial algebra."""

    entries: np.ndarray
    algebra: TracialAlgebra

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        d = self.algebra.dim
        if arr.shape != (d, d):
            raise ValueError(f"entries shape {arr.shape} does not match algebra dim {d}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    # -- Arithmetic stays inside the ambient algebra -------------------------
    def _coerce(self, other: "Operator") -> np.ndarray:
        if not isinstance(other, Operator):
            raise TypeError(f"expected Operator, got {type(other).__name__}")
        if other.algebra.dim != self.algebra.dim:
            raise ValueError("operators live in algebras of different dimension")
        return other.entries

    def __add__(self, other):
        return Operator(self.entries + self._coerce(other), self.algebra)

    def __sub__(self, other):
        return Operator(self.entries - self._coerce(other), self.algebra)

    def __neg__(self):
        return Operator(-self.entries, self.algebra)

    def __mul__(self, scalar):
        return Operator(self.entries * complex(scalar), self.algebra)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return Operator(self.entries @ self._coerce(other), self.algebra)

    @property
    def H(self) -> "Operator":
        """Adjoint (conjugate transpose)."""
        return Operator(self.entries.conj().T, self.algebra)

    def is_selfadjoint(self, tol: float = PROJECTION_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= tol)


def trace(A: Operator) -> complex:
    """Trace of ``A`` under its algebra convention (weighted diagonal sum)."""
    return complex(A.algebra.weight * np.trace(A.entries))


def matrix_unit(alg: TracialAlgebra, i: int, j: int) -> Operator:
    """Matrix unit with a single 1 at row ``i``, column ``j`` (1-based)."""
    if not (1 <= i <= alg.dim and 1 <= j <= alg.dim):
        raise IndexError(f"matrix unit indices ({i}, {j}) out of range for dim {alg.dim}")
    m = np.zeros((alg.dim, alg.dim), dtype=complex)
    m[i - 1, j - 1] = 1.0
    return Operator(m, alg)


def product_algebra(a: TracialAlgebra, b: TracialAlgebra,
                    dim_cap: int = DEFAULT_DIM_CAP) -> TracialAlgebra:
    """Tensor-product algebra; the trace weight multiplies factorwise."""
    d = a.dim * b.dim
    if d > dim_cap:
        raise ValueError(f"tensor dimension {d} exceeds cap {dim_cap}")
    w = a.weight * b.weight
    if np.isclose(w, 1.0 / d, rtol=1e-12, atol=0):
        return TracialAlgebra(d, NORMALIZED)
    if np.isclose(w, 1.0, rtol=1e-12, atol=0):
        return TracialAlgebra(d, UNNORMALIZED)
    return TracialAlgebra(d, WEIGHTED, weight=w)


def tensor(A: Operator, B: Operator, dim_cap: int = DEFAULT_DIM_CAP) -> Operator:
    """Kronecker product in the product algebra (first factor varies slowest)."""
    alg = product_algebra(A.algebra, B.algebra, dim_cap=dim_cap)
    return Operator(np.kron(A.entries, B.entries), alg)


# ---------------------------------------------------------------------------
# Spectral primitives
# ---------------------------------------------------------------------------

def hermitian_eigh(A: Operator, tol: float = PROJECTION_TOL):
    """Eigendecomposition of a Hermitian operator, after a symmetry check."""
    dev = np.max(np.abs(A.entries - A.entries.conj().T))
    if dev > tol:
        raise ValueError(f"operator is not Hermitian (deviation {dev:.3e})")
    h = 0.5 * (A.entries + A.entries.conj().T)
    w, v = np.linalg.eigh(h)
    return w, v


@dataclasses.dataclass(frozen=True, eq=False)
class Projection:
    """Orthogonal projection with validated {0, 1} spectrum.

    Construction re-symmetrizes, rounds eigenvalues to {0, 1} and rebuilds
    the matrix, so chains of meets and compressions do not drift.
    """

    op: Operator

    def __post_init__(self):
        e = self.op.entries
        if np.max(np.abs(e - e.conj().T)) > PROJECTION_TOL:
            raise ValueError("projection candidate is not Hermitian within 1e-9")
        if np.max(np.abs(e @ e - e)) > PROJECTION_TOL:
            raise ValueError("projection candidate is not idempotent within 1e-9")

    @classmethod
    def from_hermitian(cls, A: Operator) -> "Projection":
        """Round a near-projection to an exact one; reject spectra off {0, 1}."""
        w, v = hermitian_eigh(A)
        dist = np.minimum(np.abs(w), np.abs(w - 1.0))
        if np.max(dist) > PROJECTION_TOL:
            raise ValueError(
                f"eigenvalue {w[np.argmax(dist)]:.6g} is not within 1e-9 of {{0, 1}}")
        keep = w > 0.5
        rebuilt = (v[:, keep] @ v[:, keep].conj().T) if np.any(keep) \
            else np.zeros_like(A.entries)
        return cls(Operator(rebuilt, A.algebra))

    @classmethod
    def from_frame(cls, alg: TracialAlgebra, frame: np.ndarray) -> "Projection":
        """Projection onto the column span of an orthonormal ``dim x r`` frame."""
        if frame.shape[0] != alg.dim:
            raise ValueError("frame rows must match the algebra dimension")
        if frame.shape[1] == 0:
            return cls(alg.zero())
        return cls.from_hermitian(Operator(frame @ frame.conj().T, alg))

    @classmethod
    def diagonal(cls, alg: TracialAlgebra, kept: Iterable[int]) -> "Projection":
        """Diagonal 0/1 projection keeping the given 0-based coordinates."""
        mask = np.zeros(alg.dim)
        mask[list(kept)] = 1.0
        return cls(alg.operator(np.diag(mask)))

    @classmethod
    def identity(cls, alg: TracialAlgebra) -> "Projection":
        return cls(alg.identity())

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def algebra(self) -> TracialAlgebra:
        return self.op.algebra

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    @property
    def corank(self) -> int:
        return self.algebra.dim - self.rank

    @property
    def normalized_corank(self) -> float:
        """Normalized trace of the complement, corank / dim."""
        return self.corank / self.algebra.dim

    def complement(self) -> "Projection":
        return Projection(self.op.algebra.identity() - self.op)

    def __le__(self, other: "Projection") -> bool:
        """Order as positive operators: e <= f iff fe = e."""
        return bool(np.max(np.abs(other.matrix @ self.matrix - self.matrix)) <= 1e-8)


def spectral_projection(H: Operator, interval: Sequence[float]) -> Projection:
    """Projection onto eigenvectors of Hermitian ``H`` with eigenvalue in ``interval``.

    Eigenvalues within 1e-9 of an endpoint are assigned to the interval
    (closed-interval convention).
    """
    lo, hi = float(interval[0]), float(interval[1])
    w, v = hermitian_eigh(H)
    keep = (w >= lo - PROJECTION_TOL) & (w <= hi + PROJECTION_TOL)
    if not np.any(keep):
        return Projection(H.algebra.zero())
    return Projection.from_hermitian(
        Operator(v[:, keep] @ v[:, keep].conj().T, H.algebra))


def projection_meet(e1: Projection, e2: Projection) -> Projection:
    """Projection onto range(e1) intersected with range(e2).

    The intersection is the kernel of (1 - e1) + (1 - e2), a PSD operator,
    so its eigenvectors with eigenvalue ~0 span exactly the common range.
    """
    if e1.algebra.dim != e2.algebra.dim:
        raise ValueError("projections live in algebras of different dimension")
    s = (e1.complement().op + e2.complement().op)
    w, v = hermitian_eigh(s, tol=1e-8)
    keep = w <= PROJECTION_TOL
    if not np.any(keep):
        return Projection(e1.algebra.zero())
    return Projection.from_hermitian(
        Operator(v[:, keep] @ v[:, keep].conj().T, e1.algebra))


def meet_all(projections: Sequence[Projection]) -> Projection:
    """Iterated meet of a non-empty family of projections."""
    out = projections[0]
    for e in projections[1:]:
        out = projection_meet(out, e)
    return out


# ---------------------------------------------------------------------------
# Random sampling helpers (used by searches, grids and tests)
# ---------------------------------------------------------------------------

def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def haar_frame(d: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """First ``r`` columns of a Haar unitary: a uniform orthonormal frame."""
    return haar_unitary(d, rng)[:, :r]


def random_operator(alg: TracialAlgebra, rng: np.random.Generator) -> Operator:
    z = rng.standard_normal((alg.dim, alg.dim)) + 1j * rng.standard_normal((alg.dim, alg.dim))
    return alg.operator(z)


def random_selfadjoint(alg: TracialAlgebra, rng: np.random.Generator) -> Operator:
    z = random_operator(alg, rng)
    return 0.5 * (z + z.H)


def random_projection(alg: TracialAlgebra, rank: int, rng: np.random.Generator) -> Projection:
    """Haar-uniform rank-``rank`` projection."""
    if rank == 0:
        return Projection(alg.zero())
    if rank == alg.dim:
        return Projection.identity(alg)
    return Projection.from_frame(alg, haar_frame(alg.dim, rank, rng))

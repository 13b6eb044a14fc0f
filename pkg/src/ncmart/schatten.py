"""Schatten p-(quasi-)norms for 0 < p <= inf under weighted trace conventions.

For an operator A in an algebra with trace weight w the norm is
``(sum_k w * s_k^p)^(1/p)`` over the singular values s_k, with the max
singular value at p = inf.  For p < 1 this is a quasi-norm satisfying the
p-triangle inequality ||A+B||_p^p <= ||A||_p^p + ||B||_p^p.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .algebra import CertificationError, Operator

# Relative threshold below which singular values are reported as exactly 0;
# keeps 0^p well defined for p < 1 on rank-deficient matrices.
SV_ZERO_RTOL = 1e-12


@dataclasses.dataclass(frozen=True)
class PExponent:
    """Integrability exponent with regime flags.

    ``is_quasi_norm`` marks p < 1 (only the p-triangle inequality holds);
    ``chain_admissible`` marks p < 1/2, the range admissible for the
    compression/complement norm chain.
    """

    value: float

    def __post_init__(self):
        if not (self.value > 0):
            raise ValueError(f"exponent must be positive, got {self.value}")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    @property
    def is_quasi_norm(self) -> bool:
        return self.value < 1.0

    @property
    def chain_admissible(self) -> bool:
        return self.value < 0.5

    @property
    def reciprocal(self) -> float:
        return 0.0 if self.is_infinite else 1.0 / self.value


def as_exponent(p) -> PExponent:
    return p if isinstance(p, PExponent) else PExponent(float(p))


def singular_values(A: Operator) -> np.ndarray:
    """Descending singular values; tiny ones are snapped to exactly 0.

    Computed by full SVD rather than through eigenvalues of A*A: squaring
    doubles the condition number and lifts true zeros to ~sqrt(eps), which
    is far above the 1e-12 snapping threshold and would pollute quasi-norms
    of rank-deficient matrices.
    """
    s = np.linalg.svd(A.entries, compute_uv=False)
    if s.size and s[0] > 0:
        s = s.copy()
        s[s < SV_ZERO_RTOL * s[0]] = 0.0
    return s


def operator_norm(A: Operator) -> float:
    """Largest singular value."""
    s = singular_values(A)
    return float(s[0]) if s.size else 0.0


def lp_norm(A: Operator, p) -> float:
    """Trace-weighted Schatten p-(quasi-)norm of ``A``."""
    p = as_exponent(p)
    s = singular_values(A)
    if p.is_infinite:
        return float(s[0]) if s.size else 0.0
    nz = s[s > 0]
    if nz.size == 0:
        return 0.0
    w = A.algebra.weight
    return float((w * np.sum(nz ** p.value)) ** (1.0 / p.value))


def holder_split_bound(A: Operator, B: Operator, p, r, q,
                       tol: float = 1e-9) -> tuple[float, float]:
    """Return (||AB||_p, ||A||_r ||B||_q) and certify the Hoelder inequality.

    The exponents are taken explicitly (the caller controls the split
    1/p = 1/r + 1/q); a mismatch is an error, not silently repaired.
    """
    p, r, q = as_exponent(p), as_exponent(r), as_exponent(q)
    if abs(p.reciprocal - (r.reciprocal + q.reciprocal)) > 1e-12:
        raise ValueError(
            f"exponent mismatch: 1/{p.value} != 1/{r.value} + 1/{q.value}")
    lhs = lp_norm(A @ B, p)
    rhs = lp_norm(A, r) * lp_norm(B, q)
    if lhs > rhs * (1.0 + tol):
        raise CertificationError(
            f"Hoelder inequality violated: {lhs} > {rhs} at p={p.value}")
    return lhs, rhs

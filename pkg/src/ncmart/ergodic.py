"""Markov operators, ergodic averages and unitary-conjugation averaging.

A Markov operator here is a trace-preserving unital (completely) positive
map stored as a dense matrix acting on row-major vectorized operators.
The module builds convex combinations of filtration expectations, matches
their ergodic averages against the expectations level by level, truncates
operator sequences through spectral projections with a meet, and averages
diagonal-unitary conjugations through closed-form Dirichlet factors.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from typing import Callable, Sequence

import numpy as np

from .algebra import (Operator, Projection, TracialAlgebra, meet_all,
                      random_operator, spectral_projection, trace)
from .condexp import FactorFiltration
from .schatten import lp_norm, operator_norm, singular_values


def _vec(m: np.ndarray) -> np.ndarray:
    return m.reshape(-1)


def _unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d)


def superop_matrix(fn: Callable[[Operator], Operator], alg: TracialAlgebra) -> np.ndarray:
    """Dense d^2 x d^2 matrix of a linear map, in the row-major vec basis."""
    d = alg.dim
    s = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        for l in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[k, l] = 1.0
            s[:, k * d + l] = _vec(fn(alg.operator(unit)).entries)
    return s


@dataclasses.dataclass(eq=False)
class MarkovOperator:
    """Linear map on a tracial algebra, as a matrix on vectorized operators."""

    superop: np.ndarray
    algebra: TracialAlgebra
    metadata: dict

    def apply(self, X: Operator) -> Operator:
        if X.algebra.dim != self.algebra.dim:
            raise ValueError("operator dimension mismatch")
        return self.algebra.operator(_unvec(self.superop @ _vec(X.entries), self.algebra.dim))

    __call__ = apply


@dataclasses.dataclass
class MarkovInvariantReport:
    unital_err: float
    trace_err: float
    positivity_defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.unital_err, self.trace_err, self.positivity_defect) <= self.tol


def validate_markov(T: MarkovOperator, trials: int = 20,
                    rng: np.random.Generator | None = None,
                    tol: float = 1e-9) -> MarkovInvariantReport:
    """Check unitality, trace preservation, and positivity on A*A inputs."""
    rng = rng or np.random.default_rng(0)
    alg = T.algebra
    one = alg.identity()
    unital = float(np.max(np.abs(T.apply(one).entries - one.entries)))
    trace_err, pos = 0.0, 0.0
    for _ in range(trials):
        X = random_operator(alg, rng)
        trace_err = max(trace_err, abs(trace(T.apply(X)) - trace(X)))
        A = random_operator(alg, rng)
        out = T.apply(A.H @ A).entries
        wmin = np.linalg.eigvalsh(0.5 * (out + out.conj().T))[0]
        pos = max(pos, -float(wmin))
    return MarkovInvariantReport(unital_err=unital, trace_err=trace_err,
                                 positivity_defect=max(0.0, pos), tol=tol)


def convex_markov(alphas: Sequence[float], filtration) -> MarkovOperator:
    """Convex combination of filtration expectations with identity remainder.

    The increments of ``alphas`` weight the expectations at levels
    0, 1, 2, ...; mass not covered by the last alpha goes to the identity
    (the top level acts as the identity anyway).  Built this way, the map
    is automatically unital, trace preserving and positive.
    """
    alphas = [float(a) for a in alphas]
    if not alphas or abs(alphas[0]) > 0:
        raise ValueError("alphas must start at 0")
    if any(b <= a for a, b in zip(alphas, alphas[1:])) or alphas[-1] > 1 + 1e-15:
        raise ValueError("alphas must be strictly increasing and bounded by 1")
    alg = filtration.ambient
    top = max(filtration.levels)
    d = alg.dim
    s = np.zeros((d * d, d * d), dtype=complex)
    for n in range(len(alphas) - 1):
        weight = alphas[n + 1] - alphas[n]
        s += weight * superop_matrix(
            lambda X, lv=min(n, top): filtration.cond_exp(lv, X), alg)
    s += (1.0 - alphas[-1]) * np.eye(d * d)
    return MarkovOperator(superop=s, algebra=alg,
                          metadata={"kind": "convex_filtration",
                                    "alphas": tuple(alphas),
                                    "filtration": filtration})


def ergodic_average(T: MarkovOperator, x: Operator, n: int) -> Operator:
    """(1/n) sum of the first n forward orbits T^k x, by iterated application."""
    if n < 1:
        raise ValueError("n must be >= 1")
    acc = np.array(x.entries)
    y = x
    for _ in range(n - 1):
        y = T.apply(y)
        acc += y.entries
    return T.algebra.operator(acc / n)


# ---------------------------------------------------------------------------
# Matching ergodic averages to filtration levels
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class SubsequenceRow:
    level: int
    m: int
    error: float
    hit: bool


@dataclasses.dataclass
class SubsequenceReport:
    p: float
    tol: float
    scan_cap: int
    rows: list[SubsequenceRow]

    @property
    def total_error(self) -> float:
        return sum(r.error for r in self.rows)

    @property
    def all_hit(self) -> bool:
        return all(r.hit for r in self.rows)


def _partial_sum_ladder(superop: np.ndarray, cap: int):
    """Binary ladder of (T^(2^j), sum_(k < 2^j) T^k) as matrices."""
    powers, sums = [superop], [np.eye(superop.shape[0], dtype=complex)]
    while 2 ** len(powers) <= cap:
        p, s = powers[-1], sums[-1]
        sums.append(s + p @ s)
        powers.append(p @ p)
    return powers, sums


def _partial_sum(m: int, powers, sums, dim2: int):
    """(T^m, sum_(k<m) T^k) assembled from the binary ladder."""
    P = np.eye(dim2, dtype=complex)
    S = np.zeros((dim2, dim2), dtype=complex)
    for j, bit in enumerate(bin(m)[:1:-1]):
        if bit == "1":
            S = S + P @ sums[j]
            P = P @ powers[j]
    return P, S


def find_subsequence(T: MarkovOperator, X: Operator, p: float, tol: float,
                     scan_cap: int = 10 ** 6,
                     growth: float = 1.25) -> SubsequenceReport:
    """Scan for average lengths matching each filtration expectation.

    For every level n, scans m upward (geometric checkpoints, cap
    ``scan_cap``) until the p-norm distance between the length-m ergodic
    average of X and the level-n expectation of X drops to ``tol``;
    reports the first hit, or the best checkpoint when the cap is reached
    (per level, not fatal).  The summed achieved errors are exposed for
    comparison against 1.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    filtration = T.metadata.get("filtration")
    if filtration is None:
        raise ValueError("the Markov operator does not carry a filtration")
    alg = T.algebra
    d = alg.dim
    targets = {n: filtration.cond_exp(n, X) for n in filtration.levels}

    checkpoints = []
    m = 1
    while m <= scan_cap:
        checkpoints.append(m)
        m = max(m + 1, int(math.ceil(m * growth)))
    powers, sums = _partial_sum_ladder(T.superop, scan_cap)
    vx = _vec(X.entries)

    best: dict[int, SubsequenceRow] = {}
    pending = set(targets)
    for m in checkpoints:
        if not pending:
            break
        _, S = _partial_sum(m, powers, sums, d * d)
        avg = alg.operator(_unvec(S @ vx, d) / m)
        for n in list(pending):
            err = lp_norm(avg - targets[n], p)
            row = best.get(n)
            if row is None or err < row.error:
                best[n] = SubsequenceRow(level=n, m=m, error=float(err), hit=err <= tol)
            if err <= tol:
                pending.discard(n)
    rows = [best[n] for n in sorted(best)]
    return SubsequenceReport(p=p, tol=tol, scan_cap=scan_cap, rows=rows)


# ---------------------------------------------------------------------------
# Spectral truncation with projection meet
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class TruncateMeetRow:
    index: int
    norm_bound: float          # ||Z_n e_n||
    complement_trace: float    # tau(1 - e_n)
    markov_rhs: float          # lambda^-p ||Z_n||_p^p

    def ok(self, lam: float, tol: float) -> bool:
        return (self.norm_bound <= lam * (1 + tol)
                and self.complement_trace <= self.markov_rhs * (1 + tol) + 1e-15)


@dataclasses.dataclass
class TruncateMeetReport:
    t: float
    p: float
    lam: float
    rows: list[TruncateMeetRow]
    meet_complement_trace: float
    meet_complement_bound: float   # sum of the individual complement traces
    meet_norms: list[float]        # ||Z_n e|| for the meet e
    tol: float

    @property
    def passed(self) -> bool:
        return (all(r.ok(self.lam, self.tol) for r in self.rows)
                and self.meet_complement_trace <= self.meet_complement_bound * (1 + self.tol) + 1e-15
                and all(v <= self.lam * (1 + self.tol) for v in self.meet_norms))


def _absolute_value(Z: Operator) -> Operator:
    """|Z| = (Z* Z)^(1/2) through the Hermitian eigendecomposition."""
    m = Z.entries
    w, v = np.linalg.eigh(m.conj().T @ m)
    return Z.algebra.operator(v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T)


def truncate_and_meet(Z_list: Sequence[Operator], t: float, p: float,
                      tol: float = 1e-9) -> tuple[Projection, TruncateMeetReport]:
    """Spectral truncation of each Z_n at t^(-1/p), then the meet.

    Each e_n projects onto the part of |Z_n| below lambda = t^(-1/p), so
    ||Z_n e_n|| <= lambda while the Markov inequality bounds the discarded
    trace by lambda^-p ||Z_n||_p^p.  The meet e of all e_n keeps the norm
    bounds simultaneously and its complement trace is subadditive, which
    upper-bounds the rearrangement value of the sequence by lambda.
    """
    if not (0.0 < t < 1.0):
        raise ValueError("t must lie in (0, 1)")
    if p < 1:
        raise ValueError("p must be >= 1")
    lam = t ** (-1.0 / p)
    projections, rows = [], []
    for idx, Z in enumerate(Z_list):
        e_n = spectral_projection(_absolute_value(Z), (0.0, lam))
        projections.append(e_n)
        rows.append(TruncateMeetRow(
            index=idx,
            norm_bound=operator_norm(Z @ e_n.op),
            complement_trace=float(trace(e_n.complement().op).real),
            markov_rhs=lam ** -p * lp_norm(Z, p) ** p))
    e = meet_all(projections)
    report = TruncateMeetReport(
        t=t, p=p, lam=lam, rows=rows,
        meet_complement_trace=float(trace(e.complement().op).real),
        meet_complement_bound=sum(r.complement_trace for r in rows),
        meet_norms=[operator_norm(Z @ e.op) for Z in Z_list],
        tol=tol)
    return e, report


# ---------------------------------------------------------------------------
# Diagonal-unitary conjugation averages
# ---------------------------------------------------------------------------

def unitary_phases(N: int, K: int) -> np.ndarray:
    """Phases K^(k - N) mod 1 for k = 1..N (the top coordinate wraps to 0)."""
    if K < 2:
        raise ValueError("K must be an integer >= 2")
    return np.array([float(K) ** (k - N) % 1.0 for k in range(1, N + 1)])


def diagonal_unitary(N: int, K: int) -> Operator:
    """Diagonal unitary with geometrically spaced phases exp(2 pi i K^(k-N)).

    Written with exponents reduced mod 1, so the k = N entry is exactly 1
    and the distance to the identity is 2 |sin(pi max_k phase_k)|
    = 2 sin(pi / K).
    """
    return TracialAlgebra(N).operator(np.diag(np.exp(2j * math.pi * unitary_phases(N, K))))


def conj_average(U: Operator, x: Operator, L: int) -> Operator:
    """Average of the first L unitary conjugations of x, in closed form.

    For diagonal U, conjugation multiplies entry (i, j) by a phase, so the
    length-L average multiplies it by the geometric mean
    (1/L) sum_l exp(2 pi i l (phi_i - phi_j)), evaluated as a closed-form
    Dirichlet factor instead of L explicit conjugations.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    diag = np.diag(U.entries)
    if np.max(np.abs(U.entries - np.diag(diag))) > 1e-12:
        raise ValueError("conj_average needs a diagonal unitary")
    phases = np.angle(diag) / (2.0 * math.pi)
    delta = phases[:, None] - phases[None, :]
    factor = np.ones_like(delta, dtype=complex)
    frac = delta - np.round(delta)
    off = np.abs(frac) > 1e-12
    w = np.exp(2j * math.pi * delta[off])
    factor[off] = (w ** L - 1.0) / (L * (w - 1.0))
    return x.algebra.operator(x.entries * factor)


def _dirichlet_factor(num: int, den: int, L: int) -> complex:
    """(1/L) sum_(l<L) exp(2 pi i l num/den) with exact integer reduction.

    Integer arithmetic decides exactly whether L * num/den or num/den is an
    integer, which avoids evaluating sines of astronomically large
    arguments when L is a large power of K.
    """
    if num % den == 0:
        return 1.0 + 0.0j
    if (num * L) % den == 0:
        return 0.0 + 0.0j
    w = cmath.exp(2j * math.pi * ((num % den) / den))
    wl = cmath.exp(2j * math.pi * (((num * L) % den) / den))
    return (wl - 1.0) / (L * (w - 1.0))


@dataclasses.dataclass
class UnitaryApproxRow:
    K: int
    trials_passed: int
    trials: int
    worst_ratio: float         # max over trials of lhs / ||x||_p
    unitary_distance: float    # ||U - 1||
    distance_target: float     # 2^-N


@dataclasses.dataclass
class UnitaryApproxReport:
    N: int
    p: float
    rows: list[UnitaryApproxRow]
    minimal_K: int | None


def unitary_approx_check(N: int, K_values: Sequence[int], p: float = 1.0,
                         trials: int = 100, seed: int = 0,
                         stop_at_first: bool = False) -> UnitaryApproxReport:
    """Sweep K for the level-by-level conjugation-average approximation.

    For each K, draws random x and sums over n = 0..N the p-norm distance
    between the level-(N-n) expectation of x and the length-K^n average of
    conjugations by the diagonal unitary; the displayed target is that the
    sum stays below ||x||_p.  Averages are evaluated entrywise through
    exact-integer Dirichlet factors, never through K^n explicit products.
    Failure to find a working K is a reported outcome, not an error.
    With ``stop_at_first`` the sweep ends at the smallest working K.
    """
    filt = FactorFiltration(N)
    alg = filt.ambient
    rng = np.random.default_rng(seed)
    xs = [random_operator(alg, rng) for _ in range(trials)]
    rows = []
    minimal = None
    for K in K_values:
        # Numerators of the phases over the common denominator K^(N-1);
        # the k = N coordinate wraps to 0 exactly as in unitary_phases.
        c = [K ** (k - 1) if k < N else 0 for k in range(1, N + 1)]
        den = K ** (N - 1) if N > 1 else 1
        factors = []
        for n in range(N + 1):
            L = K ** n
            f = np.array([[_dirichlet_factor(ci - cj, den, L) for cj in c] for ci in c])
            factors.append(f)
        passed, worst = 0, 0.0
        for x in xs:
            lhs = 0.0
            for n in range(N + 1):
                avg = alg.operator(x.entries * factors[n])
                lhs += lp_norm(avg - filt.cond_exp(N - n, x), p)
            ratio = lhs / lp_norm(x, p)
            worst = max(worst, ratio)
            if ratio <= 1.0 + 1e-12:
                passed += 1
        u_dist = float(2.0 * abs(math.sin(math.pi * np.max(unitary_phases(N, K)))))
        rows.append(UnitaryApproxRow(K=K, trials_passed=passed, trials=trials,
                                     worst_ratio=worst, unitary_distance=u_dist,
                                     distance_target=2.0 ** -N))
        if minimal is None and passed == trials:
            minimal = K
            if stop_at_first:
                break
    return UnitaryApproxReport(N=N, p=p, rows=rows, minimal_K=minimal)

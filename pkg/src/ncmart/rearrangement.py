"""Maximal non-increasing rearrangement of an operator sequence.

For a sequence (Y_n) and a trace budget t, the quantity of interest is the
infimum over projections e with tau(1 - e) <= t of sup_n ||Y_n e||.  Any
feasible projection gives an upper bound; exact minimization is available
over diagonal projections by enumeration, and a randomized Grassmannian
search with plane-rotation descent handles general projections.  Certified
lower bounds come from the norm chain in :mod:`ncmart.chain`.
"""

from __future__ import annotations

import dataclasses
import math
from itertools import combinations
from typing import Sequence

import numpy as np

from .algebra import CertificationError, Projection
from .chain import certified_lower_bound
from .construction import MartingaleSequence, ones_martingale

METHODS = ("diag_exhaustive", "grassmann_search", "spectral_heuristic",
           "analytic_certificate")

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def feasible_corank(dim: int, t: float) -> int:
    """Largest corank whose normalized trace stays within the budget t."""
    if not (0.0 < t < 1.0):
        raise ValueError(f"t must lie in (0, 1), got {t}")
    return int(math.floor(dim * t))


def _as_terms(seq) -> tuple:
    """Accept a MartingaleSequence or any sequence of Operators."""
    if isinstance(seq, MartingaleSequence):
        return seq.algebra, seq.terms
    terms = tuple(seq)
    if not terms:
        raise ValueError("the sequence must contain at least one operator")
    return terms[0].algebra, terms


def mu_eval(seq, e: Projection) -> float:
    """sup over terms of the operator norm of Y_n e.

    For any projection of normalized corank at most t this is an upper
    bound on the rearrangement value at budget t.  ``seq`` may be a
    MartingaleSequence or a plain sequence of operators.
    """
    alg, terms = _as_terms(seq)
    if e.algebra.dim != alg.dim:
        raise ValueError("projection and sequence live in different dimensions")
    emat = e.matrix
    return max(float(np.linalg.svd(term.entries @ emat, compute_uv=False)[0])
               for term in terms)


@dataclasses.dataclass
class MuEstimate:
    """Outcome of one rearrangement computation.

    A witness is carried exactly for upper bounds, and then the value is
    the witness evaluation.  Certified lower bounds carry no witness.
    """

    t: float
    value: float
    witness: Projection | None
    direction: str              # "upper_bound" | "certified_lower_bound"
    method: str                 # one of METHODS
    iterations: int
    seed: int

    def __post_init__(self):
        if self.direction == "upper_bound" and self.witness is None:
            raise ValueError("upper bounds must carry a witness projection")
        if self.direction == "certified_lower_bound" and self.witness is not None:
            raise ValueError("certified lower bounds carry no witness")


# ---------------------------------------------------------------------------
# Exact minimization over diagonal projections
# ---------------------------------------------------------------------------

def _diag_value(terms: Sequence, kept: np.ndarray) -> float:
    """Objective for a diagonal projection given the kept column indices."""
    if kept.size == 0:
        return 0.0
    return max(float(np.linalg.svd(term.entries[:, kept], compute_uv=False)[0])
               for term in terms)


def mu_diag_exhaustive(seq: MartingaleSequence, t: float,
                       max_candidates: int = 200_000) -> MuEstimate:
    """Exact minimum of the objective over diagonal 0/1 projections.

    Enumerates drop sets of size exactly floor(dim * t); dropping fewer
    coordinates can never help because shrinking the projection shrinks
    every norm, so the restricted minimum is attained at full corank.
    The result upper-bounds the unrestricted rearrangement value.
    """
    d = seq.algebra.dim
    if d > 20:
        raise ValueError(f"diagonal enumeration is limited to dim <= 20, got {d}")
    k = feasible_corank(d, t)
    if math.comb(d, k) > max_candidates:
        raise ValueError(f"enumeration of {math.comb(d, k)} candidates is too large")
    best_val, best_drop, count = math.inf, (), 0
    for drop in combinations(range(d), k):
        kept = np.setdiff1d(np.arange(d), drop)
        val = _diag_value(seq.terms, kept)
        count += 1
        if val < best_val - 1e-15:
            best_val, best_drop = val, drop
    kept = np.setdiff1d(np.arange(d), best_drop)
    witness = Projection.diagonal(seq.algebra, kept)
    return MuEstimate(t=t, value=mu_eval(seq, witness), witness=witness,
                      direction="upper_bound", method="diag_exhaustive",
                      iterations=count, seed=0)


# ---------------------------------------------------------------------------
# Randomized search over general projections
# ---------------------------------------------------------------------------

class _MaxNormObjective:
    """max_n ||T_n V|| for an orthonormal frame V, by warm-started power iteration.

    Iterates on the compressed Gram forms V* T_n* T_n V without building
    them; the per-term top eigenvector estimates persist across calls, so
    the nearby frames probed by a line search converge in a few sweeps.
    Approximate by design: winners are re-evaluated exactly by mu_eval.
    """

    def __init__(self, terms: Sequence):
        mats = np.stack([t.entries for t in terms])
        self.gram = np.einsum("nij,nik->njk", mats.conj(), mats)
        self.count, self.dim = self.gram.shape[0], self.gram.shape[1]
        self._z = None
        self.evals = 0

    def __call__(self, V: np.ndarray, max_sweeps: int = 60) -> float:
        n, r = self.count, V.shape[1]
        z = self._z
        if z is None or z.shape != (n, r):
            rng = np.random.default_rng(0x5eed)
            z = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
        lam = np.zeros(n)
        for sweep in range(max_sweeps):
            z = z / np.maximum(np.linalg.norm(z, axis=1, keepdims=True), 1e-300)
            u = z @ V.T
            w = np.matmul(self.gram, u[:, :, None])[:, :, 0]
            z_next = w @ V.conj()
            lam_next = np.abs(np.einsum("nr,nr->n", z.conj(), z_next))
            if sweep >= 6 and np.max(np.abs(lam_next - lam)) <= 1e-9 * max(1.0, float(lam_next.max())):
                lam, z = lam_next, z_next
                break
            lam, z = lam_next, z_next
        self._z = z
        self.evals += 1
        return float(math.sqrt(max(float(np.max(lam)), 0.0)))


def _rotate(V: np.ndarray, i: int, j: int, theta: float, phi: float) -> np.ndarray:
    """Apply a plane rotation to ambient coordinates i, j of the frame."""
    c, s = math.cos(theta), math.sin(theta)
    w = V.copy()
    w[i] = c * V[i] - s * np.exp(-1j * phi) * V[j]
    w[j] = s * np.exp(1j * phi) * V[i] + c * V[j]
    return w


def _golden_section(f, a: float, b: float, evals: int = 10):
    """Golden-section scan of f on [a, b] with a fixed evaluation budget."""
    x1 = b - _GOLD * (b - a)
    x2 = a + _GOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    seen = [(x1, f1), (x2, f2)]
    for _ in range(evals - 2):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLD * (b - a)
            f1 = f(x1)
            seen.append((x1, f1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLD * (b - a)
            f2 = f(x2)
            seen.append((x2, f2))
    return min(seen, key=lambda q: q[1])


def _spectral_starts(objective: _MaxNormObjective, r: int) -> list[np.ndarray]:
    """For each term, the frame discarding the top eigenvectors of T_n* T_n."""
    starts = []
    for g in objective.gram:
        _, v = np.linalg.eigh(g)
        starts.append(np.ascontiguousarray(v[:, :r]))
    return starts


def _diag_start(seq: MartingaleSequence, objective: _MaxNormObjective,
                t: float, k: int) -> tuple[np.ndarray, Projection | None]:
    """Best diagonal witness (exact for small dims, score-based otherwise)."""
    d = seq.algebra.dim
    if d <= 20 and math.comb(d, k) <= 20_000:
        est = mu_diag_exhaustive(seq, t)
        kept = np.flatnonzero(np.abs(np.diag(est.witness.matrix)) > 0.5)
        return np.eye(d, dtype=complex)[:, kept], est.witness
    # Coordinates scoring highest across the normalized Gram forms get dropped.
    scale = np.maximum(np.linalg.norm(objective.gram, 2, axis=(1, 2)), 1e-300)
    score = np.real(np.einsum("nkk->k", objective.gram / scale[:, None, None]))
    kept = np.sort(np.argsort(score)[:d - k])
    return np.eye(d, dtype=complex)[:, kept], Projection.diagonal(seq.algebra, kept)


def mu_search(seq: MartingaleSequence, t: float, budget: int = 2000,
              seed: int = 0, extra_starts: Sequence[np.ndarray] = ()) -> MuEstimate:
    """Randomized minimization over rank d - floor(d t) projections.

    Multi-start: one spectral start per term (discarding top eigenvectors
    of T_n* T_n), the best diagonal witness, any caller-supplied frames,
    and random orthonormal frames up to a tenth of the budget.  The best
    few candidates are refined by two-coordinate plane rotations with
    golden-section line search on the rotation angle; frames stay exactly
    on the projection manifold.  Deterministic for fixed seed and budget.
    The returned value is the exact evaluation of the best witness among
    the descended frame, the diagonal witness and the supplied frames.
    """
    d = seq.algebra.dim
    k = feasible_corank(d, t)
    if k == 0:
        witness = Projection.identity(seq.algebra)
        return MuEstimate(t=t, value=mu_eval(seq, witness), witness=witness,
                          direction="upper_bound", method="grassmann_search",
                          iterations=1, seed=seed)
    r = d - k
    rng = np.random.default_rng(seed)
    objective = _MaxNormObjective(seq.terms)

    starts = _spectral_starts(objective, r)
    diag_frame, diag_witness = _diag_start(seq, objective, t, k)
    starts.append(diag_frame)
    for extra in extra_starts:
        if extra.shape != (d, r):
            raise ValueError(f"extra start has shape {extra.shape}, expected {(d, r)}")
        starts.append(np.asarray(extra, dtype=complex))
    for _ in range(max(0, budget // 10 - len(starts))):
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        q, _ = np.linalg.qr(z)
        starts.append(q[:, :r])

    scored = sorted(((objective(V), idx) for idx, V in enumerate(starts)),
                    key=lambda q: q[0])
    polish = [(val, starts[idx].copy()) for val, idx in scored[:4]]

    best_val, best_frame = polish[0]
    move_cost = 10 + 1
    for ci, (current, frame) in enumerate(polish):
        last = ci == len(polish) - 1
        stop = budget if last else min(budget, objective.evals + max(
            0, (budget - objective.evals) // (len(polish) - ci)))
        while objective.evals + move_cost <= stop:
            i, j = rng.choice(d, size=2, replace=False)
            phi = 0.0 if rng.random() < 0.5 else float(rng.uniform(0.0, 2.0 * math.pi))
            theta, val = _golden_section(
                lambda th: objective(_rotate(frame, i, j, th, phi)),
                -math.pi / 2.0, math.pi / 2.0, evals=10)
            if val < current - 1e-12:
                frame = _rotate(frame, i, j, theta, phi)
                current = val
        if current < best_val:
            best_val, best_frame = current, frame

    # The winner was selected by the approximate objective; settle the final
    # value exactly, against the diagonal witness and any supplied frames.
    q, _ = np.linalg.qr(best_frame)
    witness = Projection.from_frame(seq.algebra, q[:, :r])
    value = mu_eval(seq, witness)
    candidates = [] if diag_witness is None else [diag_witness]
    candidates.extend(Projection.from_frame(seq.algebra, f) for f in extra_starts)
    for cand in candidates:
        cand_value = mu_eval(seq, cand)
        if cand_value < value:
            value, witness = cand_value, cand
    return MuEstimate(t=t, value=value, witness=witness,
                      direction="upper_bound", method="grassmann_search",
                      iterations=objective.evals, seed=seed)


def _greedy_trim(objective: _MaxNormObjective, frame: np.ndarray, r: int) -> np.ndarray:
    """Peel columns off a frame one at a time, dropping the least useful one.

    Removing columns shrinks the projection, so every compressed norm can
    only decrease; the greedy choice just picks a good sub-frame.
    """
    V = frame
    while V.shape[1] > r:
        best_col, best_val = 0, math.inf
        for c in range(V.shape[1]):
            val = objective(np.delete(V, c, axis=1))
            if val < best_val:
                best_val, best_col = val, c
        V = np.delete(V, best_col, axis=1)
    return V


def mu_search_profile(seq: MartingaleSequence, t_list: Sequence[float],
                      budget: int = 2000, seed: int = 0) -> list[MuEstimate]:
    """Searches over an increasing list of budgets with nested warm starts.

    The t values are processed in increasing order and every search receives
    the previous winner, trimmed to the smaller rank, as an extra start that
    also enters the final exact comparison.  A sub-projection never has a
    larger value, so the reported values are non-increasing in t by
    construction (shared seed, nested feasible parametrization).
    """
    ts = list(t_list)
    if sorted(ts) != ts:
        raise ValueError("t_list must be increasing")
    d = seq.algebra.dim
    results: list[MuEstimate] = []
    prev_frame: np.ndarray | None = None
    for t in ts:
        r = d - feasible_corank(d, t)
        extra: list[np.ndarray] = []
        if prev_frame is not None:
            trimmed = prev_frame if prev_frame.shape[1] == r else _greedy_trim(
                _MaxNormObjective(seq.terms), prev_frame, r)
            extra.append(trimmed)
        est = mu_search(seq, t, budget=budget, seed=seed, extra_starts=extra)
        results.append(est)
        w, v = np.linalg.eigh(est.witness.matrix)
        prev_frame = np.ascontiguousarray(v[:, w > 0.5])
    return results


# ---------------------------------------------------------------------------
# Growth experiment: certified lower bound vs searched upper bounds
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class GrowthRow:
    N: int
    certified: float
    searched: float
    diagonal: float | None
    iterations: int


@dataclasses.dataclass
class GrowthReport:
    p_certificate: float
    t: float
    budget: int
    seed: int
    t_prime: float
    delta: float
    certificate_applies: bool
    rows: list[GrowthRow]
    slope: float

    @property
    def passed(self) -> bool:
        for row in self.rows:
            if row.certified > row.searched * (1 + 1e-9):
                return False
            if row.diagonal is not None and row.searched > row.diagonal * (1 + 1e-9):
                return False
        return True


def growth_seeds(seed: int, count: int) -> list[int]:
    """Per-N child seeds, stable across job counts and reruns."""
    return [int(s.generate_state(1)[0])
            for s in np.random.SeedSequence(seed).spawn(count)]


def growth_row(p_for_certificate: float, t: float, N: int, budget: int,
               child_seed: int) -> GrowthRow:
    """One row of the growth experiment, asserting lower <= searched <= diagonal."""
    cert = certified_lower_bound(p_for_certificate, t)
    seq = ones_martingale(N)
    searched = mu_search(seq, t, budget=budget, seed=child_seed)
    diagonal = None
    if N <= 20 and math.comb(N, feasible_corank(N, t)) <= 20_000:
        diagonal = mu_diag_exhaustive(seq, t).value
    lower = cert.delta * math.sqrt(N)
    if lower > searched.value * (1 + 1e-9):
        raise CertificationError(
            f"certified lower bound {lower} exceeds searched value "
            f"{searched.value} at N={N}")
    if diagonal is not None and searched.value > diagonal * (1 + 1e-9):
        raise CertificationError(
            f"searched value {searched.value} exceeds diagonal bound "
            f"{diagonal} at N={N}")
    return GrowthRow(N=N, certified=lower, searched=searched.value,
                     diagonal=diagonal, iterations=searched.iterations)


def assemble_growth_report(p_for_certificate: float, t: float, budget: int,
                           seed: int, rows: Sequence[GrowthRow]) -> GrowthReport:
    cert = certified_lower_bound(p_for_certificate, t)
    rows = list(rows)
    slope = float(np.polyfit(np.log([r.N for r in rows]),
                             np.log([r.searched for r in rows]), 1)[0])
    return GrowthReport(p_certificate=p_for_certificate, t=t, budget=budget,
                        seed=seed, t_prime=cert.t_prime, delta=cert.delta,
                        certificate_applies=cert.applies, rows=rows, slope=slope)


def growth_experiment(p_for_certificate: float, t: float, N_list: Sequence[int],
                      budget: int = 2000, seed: int = 0) -> GrowthReport:
    """Square-root growth of the rearrangement value of the corner martingale.

    For each N, reports the certified lower bound delta * sqrt(N), the
    searched upper bound, and the exact diagonal upper bound when the
    dimension admits enumeration, then fits the log-log slope of the
    searched values against N.  The ordering lower <= searched <= diagonal
    is asserted row by row.
    """
    seeds = growth_seeds(seed, len(N_list))
    rows = [growth_row(p_for_certificate, t, N, budget, child)
            for N, child in zip(N_list, seeds)]
    return assemble_growth_report(p_for_certificate, t, budget, seed, rows)


# ---------------------------------------------------------------------------
# Blow-up along the factorial series
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class ObstructionRow:
    N: int
    log10_bound: float
    bound: float


@dataclasses.dataclass
class ObstructionReport:
    p: float
    t: float
    delta: float
    t_prime: float
    rows: list[ObstructionRow]
    diverges: bool
    conclusion: str

    @property
    def passed(self) -> bool:
        return self.diverges


def au_obstruction_report(p: float, t: float, n_max: int = 40,
                          certificate_p: float = 0.25) -> ObstructionReport:
    """Certified lower bounds delta (N!)^(1/p - 1/2) / N^2 diverging to infinity.

    A sequence whose rearrangement value is infinite at some positive
    budget cannot converge almost uniformly; the factorial scaling makes
    these bounds blow up for every 1 <= p < 2, which is exactly the reason
    the sign-weighted factorial series has no almost uniformly convergent
    martingale.  Bounds are evaluated in the log domain; linear values
    overflow to inf harmlessly.
    """
    if not (1.0 <= p < 2.0):
        raise ValueError(
            f"blow-up requires 1 <= p < 2 (exponent 1/p - 1/2 > 0); got p={p}")
    cert = certified_lower_bound(certificate_p, t)
    if not cert.applies:
        raise ValueError(
            f"budget t={t} exceeds the certificate threshold t'={cert.t_prime}")
    expo = 1.0 / p - 0.5
    rows = []
    for N in range(1, n_max + 1):
        log_bound = math.log(cert.delta) + expo * math.lgamma(N + 1) - 2.0 * math.log(N)
        bound = math.exp(log_bound) if log_bound < 700 else math.inf
        rows.append(ObstructionRow(N=N, log10_bound=log_bound / math.log(10.0),
                                   bound=bound))
    # The log increments expo*log(1 + 1/N)... rearranged are monotone in N for
    # any expo > 0, so a positive final increment certifies divergence.
    inc = [rows[i + 1].log10_bound - rows[i].log10_bound for i in range(len(rows) - 1)]
    diverges = (len(inc) >= 4
                and all(inc[i + 1] >= inc[i] - 1e-12 for i in range(len(inc) - 1))
                and inc[-1] > 0.0)
    conclusion = (
        "the lower bounds grow without bound, so the rearrangement value is "
        "infinite at this budget and the martingale of the signed factorial "
        "series cannot converge almost uniformly"
        if diverges else "no divergence detected on the computed range")
    return ObstructionReport(p=p, t=t, delta=cert.delta, t_prime=cert.t_prime,
                             rows=rows, diverges=diverges, conclusion=conclusion)

"""Haar-averaged teleportation fidelity, exact and Monte Carlo.

Every rank-one POVM element mu |v><v| on the joint (1,2) space induces a
linear map B on the input amplitudes: measuring that outcome on
|phi>|psi_channel> leaves particle 3 in the unnormalized state B phi, with

    B[k, i] = sqrt(mu) conj(v[i*d + k]) a_k .

The outcome probability is then phi^† B^† B phi and, after a correction
unitary V, the run fidelity is |phi^† V B phi|^2 / |B phi|^2.  Averaging
over Haar-random inputs is exact through the second-moment identity

    E |<phi| X |phi>|^2 = (|Tr X|^2 + Tr(X^† X)) / (d (d + 1)),

so each outcome contributes probability Tr(B^† B)/d and fidelity term
(|Tr(V B)|^2 + Tr(B^† B)) / (d (d + 1)).  The Monte Carlo path samples the
protocol run by run and is kept as an independent check of the same
quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import SchmidtChannel
from .errors import ConsistencyError, DecompositionError, DomainError, ShapeError
from .linalg import dagger
from .povm import Conclusive, InconclusiveProduct, InconclusiveResidual, PovmSet, Tag
from .weyl import UnitaryBasis


@dataclass(frozen=True)
class OutcomeChannelMap:
    """Amplitude map of one outcome: particle 3 ends up in B phi (unnormalized)."""

    alpha: int
    b: np.ndarray

    def __post_init__(self):
        self.b.setflags(write=False)


def outcome_channel(element: np.ndarray, ch: SchmidtChannel, alpha: int = 0) -> OutcomeChannelMap:
    """Extract the amplitude map B of a rank-one element.

    The element must be (numerically) rank one; anything with a second
    eigenvalue above tolerance needs an explicit rank-one decomposition
    first.
    """
    d = ch.dim
    element = np.asarray(element)
    if element.shape != (d * d, d * d):
        raise ShapeError(f"element shape {element.shape} does not match joint dim {d * d}")
    vals, vecs = np.linalg.eigh(element)
    if vals.size > 1 and vals[-2] > 1e-10:
        raise DecompositionError(
            f"element has rank > 1 (second eigenvalue {vals[-2]:.3e}); decompose it first"
        )
    top = max(float(vals[-1]), 0.0)
    w = np.sqrt(top) * vecs[:, -1]
    b = w.conj().reshape(d, d).T * ch.coeffs[:, None]
    return OutcomeChannelMap(alpha=alpha, b=b)


def avg_fidelity_term(b: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """Haar-exact (probability, fidelity term) of one outcome with correction v."""
    b = np.asarray(b)
    v = np.asarray(v)
    d = b.shape[0]
    if v.shape != (d, d):
        raise ShapeError(f"correction shape {v.shape} does not match {b.shape}")
    if np.max(np.abs(dagger(v) @ v - np.eye(d))) > 1e-10:
        raise DomainError("correction operator is not unitary")
    gram = float(np.sum(np.abs(b) ** 2))
    prob = gram / d
    term = (abs(np.trace(v @ b)) ** 2 + gram) / (d * (d + 1))
    return prob, term


def optimal_correction(b: np.ndarray) -> np.ndarray:
    """Unitary maximizing |Tr(V B)|, i.e. the adjoint polar factor of B.

    With B = U S W^h the maximizer is V = (U W^h)^†, for which |Tr(V B)|
    equals the sum of singular values.  A fixed SVD phase convention (the
    largest-magnitude entry of each left singular vector made real
    positive) keeps the result reproducible for degenerate inputs.
    """
    b = np.asarray(b)
    u, _, wh = np.linalg.svd(b)
    for k in range(u.shape[1]):
        col = u[:, k]
        pivot = col[np.argmax(np.abs(col))]
        if abs(pivot) > 0:
            phase = pivot / abs(pivot)
            u[:, k] = col / phase
            wh[k, :] = wh[k, :] * phase
    return dagger(u @ wh)


@dataclass(frozen=True)
class OutcomeStat:
    """Per-outcome slice of a fidelity report."""

    index: int
    tag: Tag
    probability: float
    fidelity_term: float
    probability_se: float | None = None
    fidelity_term_se: float | None = None


@dataclass(frozen=True)
class FidelityReport:
    """Haar-average fidelity split into conclusive and inconclusive parts."""

    lam: float
    strategy: str
    corrections: str
    outcomes: tuple[OutcomeStat, ...]
    f_conclusive: float
    f_inconclusive: float
    f_total: float
    n_runs: int | None = None
    f_total_se: float | None = None

    @property
    def conclusive_probability(self) -> float:
        return sum(o.probability for o in self.outcomes if isinstance(o.tag, Conclusive))

    @property
    def inconclusive_probability(self) -> float:
        return sum(o.probability for o in self.outcomes if not isinstance(o.tag, Conclusive))


def strategy_of(p: PovmSet) -> str:
    if any(isinstance(t, InconclusiveProduct) for t in p.tags):
        return "product"
    if any(isinstance(t, InconclusiveResidual) for t in p.tags):
        return "residual"
    return "conclusive-only"


def channel_maps(p: PovmSet, ch: SchmidtChannel) -> np.ndarray:
    """Stack of the amplitude maps B of every element, shape (n, d, d)."""
    if not p.is_refined():
        raise DecompositionError(
            "POVM still contains an unrefined remainder; refine it before evaluating"
        )
    return np.stack([outcome_channel(p.elements[k], ch, alpha=k).b for k in range(p.n_outcomes)])


def _shift_unitary(d: int, steps: int) -> np.ndarray:
    v = np.zeros((d, d), dtype=complex)
    for j in range(d):
        v[(j + steps) % d, j] = 1.0
    return v


def correction_unitaries(
    p: PovmSet, basis: UnitaryBasis, maps: np.ndarray, mode: str
) -> np.ndarray:
    """Per-outcome correction unitaries, shape (n, d, d).

    ``auto`` optimizes each outcome through :func:`optimal_correction`;
    ``paper`` uses the protocol's fixed rules: the basis unitary itself for
    outcomes aligned with the measurement basis, and the cyclic shift
    |j> -> |i> for the diagonal product outcomes.
    """
    d = p.d
    if mode == "auto":
        return np.stack([optimal_correction(maps[k]) for k in range(p.n_outcomes)])
    if mode != "paper":
        raise DomainError(f"unknown corrections mode {mode!r}; use 'auto' or 'paper'")
    vs = np.empty((p.n_outcomes, d, d), dtype=complex)
    for k, tag in enumerate(p.tags):
        if isinstance(tag, (Conclusive, InconclusiveResidual)):
            vs[k] = basis.ops[tag.alpha]
        elif isinstance(tag, InconclusiveProduct):
            vs[k] = _shift_unitary(d, tag.i - tag.j)
        else:
            raise DecompositionError("fixed corrections need a refined POVM")
    return vs


def report(
    p: PovmSet, ch: SchmidtChannel, basis: UnitaryBasis, corrections: str = "auto"
) -> FidelityReport:
    """Exact Haar-average fidelity report for a refined POVM."""
    maps = channel_maps(p, ch)
    vs = correction_unitaries(p, basis, maps, corrections)
    stats = []
    f_con = f_inc = 0.0
    for k, tag in enumerate(p.tags):
        prob, term = avg_fidelity_term(maps[k], vs[k])
        stats.append(OutcomeStat(index=k, tag=tag, probability=prob, fidelity_term=term))
        if isinstance(tag, Conclusive):
            f_con += term
        else:
            f_inc += term
    return FidelityReport(
        lam=p.lam,
        strategy=strategy_of(p),
        corrections=corrections,
        outcomes=tuple(stats),
        f_conclusive=f_con,
        f_inconclusive=f_inc,
        f_total=f_con + f_inc,
    )


def transcript_bits(n_outcomes: int) -> int:
    """Classical message cost per run: outcome label plus the conclusive flag bit."""
    return math.ceil(math.log2(n_outcomes)) + 1


def _resolve_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _simulate_chunk(
    maps: np.ndarray, vb: np.ndarray, rng: np.random.Generator, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Run n protocol rounds; returns (chosen outcome, run fidelity) arrays."""
    n_out, d, _ = maps.shape
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    phi = z / np.linalg.norm(z, axis=1, keepdims=True)
    out_amps = np.einsum("okj,nj->nok", maps, phi)
    probs = np.sum(np.abs(out_amps) ** 2, axis=2)
    totals = probs.sum(axis=1)
    drift = float(np.max(np.abs(totals - 1.0)))
    if drift > 1e-8:
        raise ConsistencyError(f"outcome probabilities sum to 1 +/- {drift:.3e} > 1e-8")
    cum = np.cumsum(probs, axis=1)
    u = rng.random(n) * totals
    alpha = (u[:, None] >= cum).sum(axis=1)
    overlap = np.einsum("nj,njk,nk->n", phi.conj(), vb[alpha], phi)
    chosen = probs[np.arange(n), alpha]
    fid = np.abs(overlap) ** 2 / chosen
    return alpha, fid


def simulate(
    p: PovmSet,
    ch: SchmidtChannel,
    basis: UnitaryBasis,
    corrections: str = "auto",
    n_runs: int = 10_000,
    rng: int | np.random.Generator | None = 0,
    n_workers: int = 1,
    transcript: Callable[[dict], None] | None = None,
) -> FidelityReport:
    """Monte Carlo protocol simulation with standard errors.

    Each run samples a Haar input, draws an outcome with its Born
    probability, applies the per-outcome correction and records the run
    fidelity.  Runs are sharded across ``n_workers`` chunks, each owning an
    independent generator spawned from the master seed, so the merged
    totals are reproducible and order-independent.
    """
    if n_runs < 1:
        raise DomainError(f"need at least one run, got {n_runs}")
    if n_workers < 1:
        raise DomainError(f"need at least one worker, got {n_workers}")
    maps = channel_maps(p, ch)
    vs = correction_unitaries(p, basis, maps, corrections)
    vb = np.einsum("oij,ojk->oik", vs, maps)
    master = _resolve_rng(rng)
    streams = master.spawn(n_workers)
    shares = [n_runs // n_workers + (1 if w < n_runs % n_workers else 0) for w in range(n_workers)]
    n_out = p.n_outcomes
    bits = transcript_bits(n_out)
    counts = np.zeros(n_out)
    term_sums = np.zeros(n_out)
    term_sq_sums = np.zeros(n_out)
    fid_sum = fid_sq_sum = 0.0
    run_index = 0
    conclusive_mask = np.array([isinstance(t, Conclusive) for t in p.tags])
    for stream, share in zip(streams, shares):
        if share == 0:
            continue
        alpha, fid = _simulate_chunk(maps, vb, stream, share)
        counts += np.bincount(alpha, minlength=n_out)
        term_sums += np.bincount(alpha, weights=fid, minlength=n_out)
        term_sq_sums += np.bincount(alpha, weights=fid**2, minlength=n_out)
        fid_sum += float(fid.sum())
        fid_sq_sum += float(np.sum(fid**2))
        if transcript is not None:
            for a in alpha:
                transcript(
                    {
                        "run_index": run_index,
                        "outcome_alpha": int(a),
                        "conclusive_flag": int(conclusive_mask[a]),
                        "bits_sent": bits,
                    }
                )
                run_index += 1
        else:
            run_index += share
    n = float(n_runs)
    stats = []
    f_con = f_inc = 0.0
    for k, tag in enumerate(p.tags):
        prob = counts[k] / n
        term = term_sums[k] / n
        prob_se = math.sqrt(max(prob * (1.0 - prob), 0.0) / n)
        term_var = term_sq_sums[k] / n - term * term
        term_se = math.sqrt(max(term_var, 0.0) / n)
        stats.append(
            OutcomeStat(
                index=k,
                tag=tag,
                probability=prob,
                fidelity_term=term,
                probability_se=prob_se,
                fidelity_term_se=term_se,
            )
        )
        if isinstance(tag, Conclusive):
            f_con += term
        else:
            f_inc += term
    mean = fid_sum / n
    var = fid_sq_sum / n - mean * mean
    return FidelityReport(
        lam=p.lam,
        strategy=strategy_of(p),
        corrections=corrections,
        outcomes=tuple(stats),
        f_conclusive=f_con,
        f_inconclusive=f_inc,
        f_total=mean,
        n_runs=n_runs,
        f_total_se=math.sqrt(max(var, 0.0) / n),
    )


def simulate_from_maps(
    maps: np.ndarray,
    vs: np.ndarray,
    tags: Sequence[Tag],
    lam: float,
    strategy: str,
    corrections: str,
    n_runs: int,
    rng: int | np.random.Generator | None = 0,
) -> FidelityReport:
    """Monte Carlo over explicit amplitude maps (used by the dilated route)."""
    vb = np.einsum("oij,ojk->oik", vs, maps)
    stream = _resolve_rng(rng)
    alpha, fid = _simulate_chunk(maps, vb, stream, n_runs)
    n_out = maps.shape[0]
    counts = np.bincount(alpha, minlength=n_out)
    term_sums = np.bincount(alpha, weights=fid, minlength=n_out)
    n = float(n_runs)
    stats = []
    f_con = f_inc = 0.0
    for k, tag in enumerate(tags):
        term = term_sums[k] / n
        stats.append(
            OutcomeStat(index=k, tag=tag, probability=counts[k] / n, fidelity_term=term)
        )
        if isinstance(tag, Conclusive):
            f_con += term
        else:
            f_inc += term
    mean = float(fid.mean())
    var = float(np.mean(fid**2)) - mean * mean
    return FidelityReport(
        lam=lam,
        strategy=strategy,
        corrections=corrections,
        outcomes=tuple(stats),
        f_conclusive=f_con,
        f_inconclusive=f_inc,
        f_total=mean,
        n_runs=n_runs,
        f_total_se=math.sqrt(max(var, 0.0) / n),
    )

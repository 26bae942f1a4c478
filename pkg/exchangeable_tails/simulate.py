"""Two-stage sampling of exchangeable sequences and Monte Carlo tail estimates.

Trials are grouped in fixed blocks of MC_BLOCK. Block b draws its mixing
variables from Philox stream (seed, b, 0) and its conditional variables from
(seed, b, 1), so estimates do not depend on how blocks are scheduled and the
mixing draws are shared between runs that differ only in n.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from exchangeable_tails.constants import CI_ALPHA, MC_BLOCK
from exchangeable_tails.errors import DegeneratePartitionError, DomainError
from exchangeable_tails.model import ConditionalLaw, MixingDensity

log = logging.getLogger(__name__)

_U64 = 1 << 64
_Q_STREAM, _XI_STREAM, _PERM_STREAM = 0, 1, 2
_CHUNK = 1 << 20  # conditional draws materialised at once


@dataclass(frozen=True, slots=True)
class DeFinettiModel:
    """Q ~ mu, then xi_1, xi_2, ... i.i.d. from law(Q).

    ``fixed_q`` replaces mu by a point mass, isolating the conditional layer.
    """

    mixing: MixingDensity
    law: ConditionalLaw
    fixed_q: Optional[float] = None

    def __post_init__(self) -> None:
        if self.fixed_q is not None and not self.fixed_q > 0:
            raise DomainError(f"fixed_q must be positive, got {self.fixed_q}")


@dataclass(frozen=True, slots=True)
class TailQuery:
    n: int
    t: float
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.trials < 1:
            raise DomainError(f"need n >= 1 and trials >= 1, got n={self.n}, trials={self.trials}")
        if not self.t >= 0:
            raise DomainError(f"threshold must be non-negative, got {self.t}")
        _check_seed(self.seed)


@dataclass(frozen=True, slots=True)
class MCEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    trials: int
    successes: int
    seed: int


def _check_seed(seed: int) -> None:
    if not 0 <= seed < _U64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")


def block_rng(seed: int, block: int, stream: int) -> np.random.Generator:
    """Counter-based generator for (seed, block, stream)."""
    _check_seed(seed)
    return np.random.Generator(
        np.random.Philox(key=seed, counter=(stream << 192) | (block << 128))
    )


def clopper_pearson(successes: int, trials: int, alpha: float = CI_ALPHA) -> Tuple[float, float]:
    b = stats.beta.ppf
    lo = 0.0 if successes == 0 else float(b(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(b(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def _blocks(trials: int) -> List[int]:
    full, rest = divmod(trials, MC_BLOCK)
    return [MC_BLOCK] * full + ([rest] if rest else [])


def _run_blocks(fn, sizes: Sequence[int], workers: int) -> list:
    if workers <= 1:
        return [fn(b, size) for b, size in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


# ---------- sampling ----------
def sample_q(m: MixingDensity, rng: np.random.Generator, size: Optional[int] = None):
    """Draw from mu by inverting u = c3 Q^kappa ~ Gamma((gamma+1)/kappa)."""
    u = rng.random(size)
    u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
    q = (special.gammaincinv(m.shape, u) / m.c3) ** (1.0 / m.kappa)
    return float(q) if size is None else q


def _draw_q(model: DeFinettiModel, rng: np.random.Generator, size: int) -> np.ndarray:
    if model.fixed_q is not None:
        return np.full(size, model.fixed_q)
    return sample_q(model.mixing, rng, size)


def _sums(model: DeFinettiModel, q: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    total = np.zeros(q.shape[0])
    step = max(1, _CHUNK // max(q.shape[0], 1))
    for start in range(0, n, step):
        total += model.law.sample(q, min(step, n - start), rng).sum(axis=1)
    return total / math.sqrt(n)


def sample_sum(model: DeFinettiModel, n: int, rng: np.random.Generator) -> float:
    """S(n) = n^-1/2 (xi_1 + ... + xi_n) for one exchangeable sequence."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    q = _draw_q(model, rng, 1)
    return float(_sums(model, q, n, rng)[0])


def sample_sums(model: DeFinettiModel, n: int, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """S(n) for ``trials`` independent sequences, in trial order."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")

    def one(block: int, size: int) -> np.ndarray:
        q = _draw_q(model, block_rng(seed, block, _Q_STREAM), size)
        return _sums(model, q, n, block_rng(seed, block, _XI_STREAM))

    return np.concatenate(_run_blocks(one, _blocks(trials), workers))


# ---------- tail estimates ----------
def mc_tail_grid(
    model: DeFinettiModel,
    n: int,
    thresholds: Sequence[float],
    trials: int,
    seed: int,
    workers: int = 1,
    alpha: float = CI_ALPHA,
) -> List[MCEstimate]:
    """P(|S(n)| >= t) for every t, thresholding one shared sample."""
    ts = np.asarray(thresholds, dtype=float)
    for t in ts:
        TailQuery(n=n, t=float(t), trials=trials, seed=seed)

    def one(block: int, size: int) -> np.ndarray:
        q = _draw_q(model, block_rng(seed, block, _Q_STREAM), size)
        s = np.abs(_sums(model, q, n, block_rng(seed, block, _XI_STREAM)))
        return np.count_nonzero(s[:, None] >= ts[None, :], axis=0)

    counts = np.sum(_run_blocks(one, _blocks(trials), workers), axis=0)
    out = []
    for k in counts:
        k = int(k)
        lo, hi = clopper_pearson(k, trials, alpha)
        out.append(MCEstimate(k / trials, lo, hi, trials, k, seed))
    log.debug("mc tail n=%d trials=%d seed=%d: %s", n, trials, seed, [e.p_hat for e in out])
    return out


def mc_tail(model: DeFinettiModel, query: TailQuery, workers: int = 1) -> MCEstimate:
    return mc_tail_grid(model, query.n, [query.t], query.trials, query.seed, workers)[0]


# ---------- structural diagnostics ----------
@dataclass(frozen=True, slots=True)
class ExchangeabilityReport:
    permutations: Tuple[Tuple[int, ...], ...]
    tv_distances: Tuple[float, ...]
    max_z: Tuple[float, ...]
    cell_probabilities: Tuple[float, ...]
    z_limit: float
    passed: bool


def exchangeability_check(
    model: DeFinettiModel,
    n: int,
    edges: Sequence[float],
    trials: int,
    seed: int,
    permutations: Optional[Sequence[Sequence[int]]] = None,
    workers: int = 1,
    z_limit: float = 4.0,
) -> ExchangeabilityReport:
    """Compare the joint cell law of (xi_1..xi_n) with that of permuted tuples.

    ``edges`` split the real line into len(edges)+1 cells. Without explicit
    ``permutations`` three seeded random ones are used. A cell fails when the
    studentized difference of its two frequencies exceeds ``z_limit``.
    """
    if not 2 <= n <= 6:
        raise DomainError(f"n must lie in [2, 6], got {n}")
    edges = np.asarray(edges, dtype=float)
    k = edges.size + 1
    if not 2 <= k <= 8 or np.any(np.diff(edges) <= 0):
        raise DomainError("edges must be strictly increasing and give 2..8 cells")
    if permutations is None:
        rng = block_rng(seed, 0, _PERM_STREAM)
        permutations = [rng.permutation(n) for _ in range(3)]
    perms = [tuple(int(i) for i in p) for p in permutations]
    for p in perms:
        if sorted(p) != list(range(n)):
            raise DomainError(f"{p} is not a permutation of 0..{n - 1}")
    weights = k ** np.arange(n)
    ncodes = k**n

    def one(block: int, size: int) -> np.ndarray:
        q = _draw_q(model, block_rng(seed, block, _Q_STREAM), size)
        cells = np.searchsorted(edges, model.law.sample(q, n, block_rng(seed, block, _XI_STREAM)), side="right")
        rows = [np.bincount(cells.ravel(), minlength=k)]
        rows.append(np.bincount(cells @ weights, minlength=ncodes))
        for p in perms:
            rows.append(np.bincount(cells[:, list(p)] @ weights, minlength=ncodes))
        return np.concatenate(rows)

    counts = np.sum(_run_blocks(one, _blocks(trials), workers), axis=0)
    marginal = counts[:k] / (trials * n)
    if np.any(marginal < 10.0 / trials):
        raise DegeneratePartitionError(
            f"cell probabilities {np.round(marginal, 8).tolist()} fall below 10/trials"
        )
    base = counts[k:k + ncodes] / trials
    tvs, zs = [], []
    for i in range(len(perms)):
        other = counts[k + (i + 1) * ncodes:k + (i + 2) * ncodes] / trials
        tvs.append(0.5 * float(np.abs(base - other).sum()))
        var = (base + other - (base - other) ** 2) / trials
        live = var > 0
        zs.append(float(np.max(np.abs(base - other)[live] / np.sqrt(var[live]), initial=0.0)))
    return ExchangeabilityReport(
        permutations=tuple(perms),
        tv_distances=tuple(tvs),
        max_z=tuple(zs),
        cell_probabilities=tuple(float(p) for p in marginal),
        z_limit=z_limit,
        passed=all(z <= z_limit for z in zs),
    )


@dataclass(frozen=True, slots=True)
class EmpiricalMeasureReport:
    interval: Tuple[float, float]
    n: int
    replications: int
    inside: int
    max_deviation: float

    @property
    def fraction_inside(self) -> float:
        return self.inside / self.replications


def empirical_measure_check(
    model: DeFinettiModel,
    interval: Tuple[float, float],
    n: int,
    replications: int,
    seed: int,
) -> EmpiricalMeasureReport:
    """Frequency of xi_i in A against the conditional probability Q(A)."""
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise DomainError(f"interval must satisfy a < b, got ({a}, {b})")
    if n < 10_000 or replications < 1:
        raise DomainError(f"need n >= 10^4 and replications >= 1, got n={n}")
    inside, worst = 0, 0.0
    for r in range(replications):
        q = _draw_q(model, block_rng(seed, r, _Q_STREAM), 1)
        rng = block_rng(seed, r, _XI_STREAM)
        hits = 0
        for start in range(0, n, _CHUNK):
            xi = model.law.sample(q, min(_CHUNK, n - start), rng)
            hits += int(np.count_nonzero((xi > a) & (xi < b)))
        p = float(model.law.prob(a, b, q)[0])
        band = 4.0 * math.sqrt(max(p * (1.0 - p), 0.0) / n)
        dev = abs(hits / n - p)
        worst = max(worst, dev)
        inside += dev <= band
    return EmpiricalMeasureReport((a, b), n, replications, inside, worst)


def conditional_moments_check(
    model: DeFinettiModel, q: float, draws: int, seed: int
) -> Tuple[float, float, bool]:
    """Empirical mean of xi given Q = q, its standard error and |mean| <= 4 se."""
    if not q > 0 or draws < 2:
        raise DomainError("need q > 0 and at least two draws")
    xi = model.law.sample(np.array([q]), draws, block_rng(seed, 0, _XI_STREAM))[0]
    mean = float(xi.mean())
    se = float(xi.std(ddof=1)) / math.sqrt(draws)
    return mean, se, abs(mean) <= 4.0 * se

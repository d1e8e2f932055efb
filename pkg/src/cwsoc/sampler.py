"""Metropolis and importance samplers for the Gibbs measure, with an exact
enumeration oracle for small finite-support cases and chain diagnostics.

Random-stream layout: every chain derives two generator streams from
SeedSequence(seed, spawn_key=(chain_index,)) - one for proposals (also used
for initialization) and one for the accept/reject uniforms. Each stream is
consumed strictly in sweep order, so results are independent of the internal
block size and of how chains are distributed over threads, and a checkpoint
taken at any sweep boundary resumes bit-identically.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import _kernels
from .measures import BaseMeasure, parse_measure
from .model import RECOMPUTE_EVERY, Configuration

CHECKPOINT_MAGIC = "CWSOC1"

_MAX_ENUM_STATES = 10_000_000


@dataclass(frozen=True)
class SamplerConfig:
    """Parameters of a multi-chain Metropolis run."""

    n: int
    measure: BaseMeasure
    sweeps: int
    burn_in_sweeps: int = 0
    thin_sweeps: int = 1
    seed: int = 0
    chains: int = 1

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.burn_in_sweeps < 0 or self.burn_in_sweeps >= self.sweeps:
            raise ValueError("burn_in_sweeps must satisfy 0 <= burn_in < sweeps")
        if self.thin_sweeps < 1:
            raise ValueError("thin_sweeps must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit nonnegative integer")
        if (self.sweeps - self.burn_in_sweeps) // self.thin_sweeps < 1:
            raise ValueError("run retains no samples; lower thin or burn-in")


@dataclass
class ChainRun:
    """Output of one chain: retained statistics plus diagnostics.

    stat_samples holds S/(n^{1/4} sqrt(T)), scaled_samples holds S/n^{3/4},
    t_over_n_samples holds T/n, one entry per retained sweep. The retained
    sweeps are every thin-th sweep after burn-in, giving exactly
    floor((sweeps - burn_in) / thin) entries. acceptance_rate counts accepted
    proposals over all sweeps including burn-in.
    """

    stat_samples: np.ndarray
    scaled_samples: np.ndarray
    t_over_n_samples: np.ndarray
    acceptance_rate: float
    ess_estimate: float
    seed: int
    chain_index: int


@dataclass(frozen=True)
class WeightedSample:
    """One importance draw: statistic plus raw log weight S^2/(2T)."""

    stat: float
    log_weight: float


@dataclass
class ImportanceResult:
    """Vectorized importance-sampling output.

    stat[i] is S/(n^{1/4} sqrt(T)) for draw i and log_weight[i] the raw
    Gibbs exponent S^2/(2T) of that draw (in [0, n/2]); ess is the weighted
    effective sample size (sum w)^2 / sum w^2.
    """

    stat: np.ndarray
    log_weight: np.ndarray
    ess: float

    def samples(self) -> list[WeightedSample]:
        return [WeightedSample(float(s), float(lw)) for s, lw in zip(self.stat, self.log_weight)]

    def estimate(self, values: np.ndarray | None = None) -> tuple[float, float]:
        """Self-normalized estimate of E[values] with a delta-method error.

        values defaults to the statistic itself; pass any per-draw transform
        (e.g. stat**2) aligned with the draws.
        """
        phi = self.stat if values is None else np.asarray(values, dtype=np.float64)
        lw = self.log_weight - self.log_weight.max()
        w = np.exp(lw)
        wsum = w.sum()
        est = float(np.dot(w, phi) / wsum)
        resid = phi - est
        se = float(np.sqrt(np.dot(w * w, resid * resid)) / wsum)
        return est, se


@dataclass
class ChainState:
    """Resumable mid-run state of a single chain."""

    config: Configuration
    rng_prop: np.random.Generator
    rng_unif: np.random.Generator
    seed: int
    chain_index: int
    sweep_index: int = 0
    accept_count: int = 0


@dataclass
class Diagnostics:
    """Batch-means summary of a scalar chain."""

    mean: float
    std_error: float
    tau: float
    ess: float


def _block_sweeps(n: int) -> int:
    # ~2M proposal draws per block keeps the working set cache-friendly
    return max(1, (1 << 21) // n)


def init_configuration(n: int, measure: BaseMeasure, rng: np.random.Generator) -> Configuration:
    """i.i.d. initial state from the base measure, redrawn until T > 0."""
    for _ in range(1000):
        values = measure.sample(rng, n)
        cfg = Configuration.from_values(values)
        if cfg.cached_t > 0.0:
            return cfg
    raise RuntimeError("could not draw an initial state with T > 0")


def metropolis_sweep(
    config: Configuration, measure: BaseMeasure, rng: np.random.Generator
) -> int:
    """One sweep: n single-site proposals in index order.

    Each proposal is a fresh draw from the base measure, so the acceptance
    ratio is exactly exp(delta log weight); proposals that would set T = 0
    are rejected. Consumes n proposal draws then n uniforms from rng.

    Returns:
        Number of accepted proposals.
    """
    n = config.n
    proposals = measure.sample(rng, n).reshape(1, n)
    uniforms = rng.random(n).reshape(1, n)
    out_s = np.empty(1)
    out_t = np.empty(1)
    s, t, accepts, upd = _kernels.sweep_block(
        config.values,
        config.cached_s,
        config.cached_t,
        proposals,
        uniforms,
        out_s,
        out_t,
        RECOMPUTE_EVERY,
        config.update_count,
    )
    config.cached_s = float(s)
    config.cached_t = float(t)
    config.update_count = int(upd)
    return int(accepts)


def new_chain_state(
    n: int, measure: BaseMeasure, seed: int, chain_index: int
) -> ChainState:
    """Fresh chain state with the two derived generator streams."""
    ss = np.random.SeedSequence(seed, spawn_key=(chain_index,))
    prop_ss, unif_ss = ss.spawn(2)
    rng_prop = np.random.Generator(np.random.PCG64(prop_ss))
    rng_unif = np.random.Generator(np.random.PCG64(unif_ss))
    config = init_configuration(n, measure, rng_prop)
    return ChainState(
        config=config,
        rng_prop=rng_prop,
        rng_unif=rng_unif,
        seed=seed,
        chain_index=chain_index,
    )


def advance(state: ChainState, measure: BaseMeasure, sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Run the chain forward, returning per-sweep (S, T) trajectories."""
    if sweeps < 0:
        raise ValueError("sweeps must be nonnegative")
    n = state.config.n
    block = _block_sweeps(n)
    s_hist = np.empty(sweeps)
    t_hist = np.empty(sweeps)
    done = 0
    cfg = state.config
    while done < sweeps:
        b = min(block, sweeps - done)
        proposals = measure.sample(state.rng_prop, b * n).reshape(b, n)
        uniforms = state.rng_unif.random(b * n).reshape(b, n)
        out_s = s_hist[done : done + b]
        out_t = t_hist[done : done + b]
        s, t, accepts, upd = _kernels.sweep_block(
            cfg.values,
            cfg.cached_s,
            cfg.cached_t,
            proposals,
            uniforms,
            out_s,
            out_t,
            RECOMPUTE_EVERY,
            cfg.update_count,
        )
        cfg.cached_s = float(s)
        cfg.cached_t = float(t)
        cfg.update_count = int(upd)
        state.accept_count += int(accepts)
        done += b
    state.sweep_index += sweeps
    return s_hist, t_hist


def _run_single(cfg: SamplerConfig, chain_index: int) -> ChainRun:
    state = new_chain_state(cfg.n, cfg.measure, cfg.seed, chain_index)
    s_hist, t_hist = advance(state, cfg.measure, cfg.sweeps)
    first = cfg.burn_in_sweeps + cfg.thin_sweeps - 1
    sel = np.arange(first, cfg.sweeps, cfg.thin_sweeps)
    s = s_hist[sel]
    t = t_hist[sel]
    n = cfg.n
    stat = s / (n**0.25 * np.sqrt(t))
    scaled = s / n**0.75
    t_over_n = t / n
    if stat.shape[0] >= 100:
        ess = diagnostics(stat).ess
    else:
        ess = float(stat.shape[0])
    return ChainRun(
        stat_samples=stat,
        scaled_samples=scaled,
        t_over_n_samples=t_over_n,
        acceptance_rate=state.accept_count / (cfg.sweeps * n),
        ess_estimate=ess,
        seed=cfg.seed,
        chain_index=chain_index,
    )


def run_chains(cfg: SamplerConfig, threads: int = 1) -> list[ChainRun]:
    """Run cfg.chains independent chains, optionally across threads.

    Results are keyed by chain index and identical for any thread count.
    """
    cfg.validate()
    if threads < 1:
        raise ValueError("threads must be >= 1")
    indices = range(cfg.chains)
    if threads == 1 or cfg.chains == 1:
        return [_run_single(cfg, i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: _run_single(cfg, i), indices))


def importance_sample(
    n: int, measure: BaseMeasure, draws: int, rng: np.random.Generator
) -> ImportanceResult:
    """i.i.d. draws from the base product measure, weighted by the Gibbs factor.

    Rows with T = 0 are redrawn (they carry zero target mass). The weight
    for each retained row is exp(S^2/(2T)); ess is computed stably from the
    log weights by max-subtraction.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    stat = np.empty(draws)
    log_w = np.empty(draws)
    block = max(1, (1 << 22) // n)
    done = 0
    while done < draws:
        b = min(block, draws - done)
        rows = measure.sample(rng, b * n).reshape(b, n)
        t = np.einsum("ij,ij->i", rows, rows)
        while True:
            bad = np.flatnonzero(t == 0.0)
            if bad.size == 0:
                break
            rows[bad] = measure.sample(rng, bad.size * n).reshape(bad.size, n)
            t[bad] = np.einsum("ij,ij->i", rows[bad], rows[bad])
        s = rows.sum(axis=1)
        stat[done : done + b] = s / (n**0.25 * np.sqrt(t))
        log_w[done : done + b] = 0.5 * s * s / t
        done += b
    shifted = np.exp(log_w - log_w.max())
    ess = float(shifted.sum() ** 2 / np.dot(shifted, shifted))
    return ImportanceResult(stat=stat, log_weight=log_w, ess=ess)


def _compositions(total: int, parts: int):
    # stars-and-bars walk over count vectors summing to total
    for dividers in combinations(range(total + parts - 1), parts - 1):
        counts = []
        prev = -1
        for d in dividers:
            counts.append(d - prev - 1)
            prev = d
        counts.append(total + parts - 2 - prev)
        yield counts


def enumerate_exact(n: int, measure: BaseMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Exact distribution of S/sqrt(T) under the Gibbs measure.

    Sums the weight exp(S^2/(2T)) * prod rho(x_i) over all n-tuples from a
    finite support, grouped by multiset (the statistic and the weight only
    depend on site counts, so the sum costs multisets, not k^n). Values
    within 1e-12 of each other are merged.

    Returns:
        (values, probs) sorted ascending, probs summing to 1.
    """
    if n < 1 or n > 20:
        raise ValueError("enumerate_exact requires 1 <= n <= 20")
    if not measure.is_finite_support():
        raise ValueError("enumerate_exact needs a finite-support measure")
    support, probs = measure.support()
    k = support.shape[0]
    if k**n > _MAX_ENUM_STATES:
        raise ValueError("state space too large to enumerate")
    log_p = np.full(k, -np.inf)
    pos = probs > 0.0
    log_p[pos] = np.log(probs[pos])
    entries: list[tuple[float, float]] = []
    lg_n = math.lgamma(n + 1)
    for counts in _compositions(n, k):
        log_mass = lg_n
        s = 0.0
        t = 0.0
        ok = True
        for c, v, lp in zip(counts, support, log_p):
            if c == 0:
                continue
            if lp == -np.inf:
                ok = False
                break
            log_mass += c * lp - math.lgamma(c + 1)
            s += c * v
            t += c * v * v
        if not ok or t <= 0.0:
            continue
        log_mass += 0.5 * s * s / t
        entries.append((s / math.sqrt(t), log_mass))
    if not entries:
        raise ValueError("no states with T > 0")
    entries.sort()
    merged_vals: list[float] = []
    merged_logs: list[list[float]] = []
    for value, lm in entries:
        if merged_vals and value - merged_vals[-1] <= 1e-12:
            merged_logs[-1].append(lm)
        else:
            merged_vals.append(value)
            merged_logs.append([lm])
    log_masses = np.array(
        [_logsumexp(np.asarray(group)) for group in merged_logs]
    )
    total = _logsumexp(log_masses)
    return np.asarray(merged_vals), np.exp(log_masses - total)


def _logsumexp(x: np.ndarray) -> float:
    m = float(x.max())
    return m + math.log(np.exp(x - m).sum())


def diagnostics(samples, batches: int = 50) -> Diagnostics:
    """Batch-means mean, standard error, autocorrelation time and ESS.

    Accepts a ChainRun (uses stat_samples) or a 1-d array. The trailing
    remainder when the length is not divisible by the batch count is
    dropped. A constant sequence is flagged with tau = inf and ess = 0.
    ESS is capped at the sample count: batch-variance noise can otherwise
    push the estimate above it.
    """
    x = samples.stat_samples if isinstance(samples, ChainRun) else np.asarray(samples, dtype=np.float64)
    count = x.shape[0]
    if count < 100 or count < 2 * batches:
        raise ValueError("too few samples for batch-means diagnostics")
    length = count // batches
    used = x[: length * batches]
    mean = float(used.mean())
    sample_var = float(used.var(ddof=1))
    bm = used.reshape(batches, length).mean(axis=1)
    var_bm = float(bm.var(ddof=1))
    se = math.sqrt(var_bm / batches)
    if sample_var == 0.0 or var_bm == 0.0:
        return Diagnostics(mean=mean, std_error=se, tau=math.inf, ess=0.0)
    tau = length * var_bm / sample_var
    ess = min(float(length * batches) / tau, float(count))
    return Diagnostics(mean=mean, std_error=se, tau=tau, ess=ess)


# -- checkpoints ---------------------------------------------------------


def save_checkpoint(path, state: ChainState, measure: BaseMeasure) -> None:
    """Write a versioned text checkpoint: magic line plus one JSON object."""
    payload = {
        "measure": measure.name,
        "seed": state.seed,
        "chain_index": state.chain_index,
        "sweep_index": state.sweep_index,
        "accept_count": state.accept_count,
        "configuration": state.config.to_list(),
        "rng_prop_state": state.rng_prop.bit_generator.state,
        "rng_unif_state": state.rng_unif.bit_generator.state,
    }
    Path(path).write_text(CHECKPOINT_MAGIC + "\n" + json.dumps(payload, sort_keys=True) + "\n")


def load_checkpoint(path) -> tuple[ChainState, BaseMeasure]:
    """Read a checkpoint written by save_checkpoint."""
    text = Path(path).read_text()
    magic, _, body = text.partition("\n")
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"not a {CHECKPOINT_MAGIC} checkpoint")
    payload = json.loads(body)
    measure = parse_measure(payload["measure"])
    rng_prop = np.random.Generator(np.random.PCG64())
    rng_prop.bit_generator.state = payload["rng_prop_state"]
    rng_unif = np.random.Generator(np.random.PCG64())
    rng_unif.bit_generator.state = payload["rng_unif_state"]
    state = ChainState(
        config=Configuration.from_list(payload["configuration"]),
        rng_prop=rng_prop,
        rng_unif=rng_unif,
        seed=int(payload["seed"]),
        chain_index=int(payload["chain_index"]),
        sweep_index=int(payload["sweep_index"]),
        accept_count=int(payload["accept_count"]),
    )
    return state, measure

"""Monte Carlo ensembles: reproducible aggregation and figure statistics.

Paths are partitioned into fixed blocks of :data:`BLOCK_PATHS` consecutive
path indices.  Blocks may be simulated by any number of workers, but the
statistics are always merged in block order with the Chan parallel
mean/M2 combination, and inside a block paths accumulate in index order,
so the ensemble output is bit-identical regardless of worker count or
scheduling.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EnsembleError
from .params import ModelParams
from .sde import PathResult, SimConfig, simulate_path

__all__ = [
    "BLOCK_PATHS",
    "EnsembleSummary",
    "Histogram",
    "run_ensemble",
    "histogram",
    "summary_stats",
    "rank_diff",
    "worker_count",
]

log = logging.getLogger("tbdyn.ensemble")

#: Paths per aggregation block.  Fixed: changing it changes rounding.
BLOCK_PATHS = 128


@dataclass
class EnsembleSummary:
    """Time-resolved moments and end-time samples of one ensemble."""

    times: np.ndarray                    # (n_rec,)
    mean_ts: np.ndarray                  # (n_rec, 4)
    std_ts: np.ndarray                   # (n_rec, 4), ddof=1
    end_samples: np.ndarray              # (n_ok, 4) terminal states, path order
    n_paths: int                         # requested paths
    config: SimConfig
    params: ModelParams
    init: np.ndarray
    n_failures: int = 0
    failed_paths: list[int] = field(default_factory=list)
    env_mean_ts: np.ndarray | None = None
    env_std_ts: np.ndarray | None = None
    absorbed_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    b_zero_times: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_ok(self) -> int:
        return self.n_paths - self.n_failures

    @property
    def n_absorbed(self) -> int:
        return int(self.absorbed_times.size)

    @property
    def n_b_zero(self) -> int:
        return int(self.b_zero_times.size)


@dataclass
class Histogram:
    """Uniform-bin histogram of one sampled variable."""

    bin_edges: np.ndarray        # length bins+1, strictly increasing (or the
                                 # degenerate pair [v, v] for identical samples)
    counts: np.ndarray           # length bins, sums to the sample count
    variable: str = ""

    @property
    def degenerate(self) -> bool:
        return self.bin_edges.size == 2 and self.bin_edges[0] == self.bin_edges[1]


def worker_count() -> int:
    """Worker threads for block simulation (TBDYN_WORKERS overrides)."""
    env = os.environ.get("TBDYN_WORKERS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise DomainError(f"TBDYN_WORKERS must be an integer, got {env!r}") from exc
        if n < 1:
            raise DomainError("TBDYN_WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1


@dataclass
class _BlockStats:
    n: int
    mean: np.ndarray | None
    m2: np.ndarray | None
    env_mean: np.ndarray | None
    env_m2: np.ndarray | None
    end_states: list[np.ndarray]
    failed: list[int]
    absorbed: list[float]
    b_zero: list[float]
    times: np.ndarray | None


def _welford(k: int, mean: np.ndarray, m2: np.ndarray, x: np.ndarray) -> None:
    d = x - mean
    mean += d / k
    m2 += d * (x - mean)


def _simulate_block(init, params, config, start: int, stop: int) -> _BlockStats:
    st = _BlockStats(0, None, None, None, None, [], [], [], [], None)
    for idx in range(start, stop):
        path = simulate_path(init, params, config, idx)
        if path.overflow:
            st.failed.append(idx)
            log.warning("path %d overflowed at step %d", idx, path.steps_completed)
            continue
        if path.absorbed_at is not None:
            st.absorbed.append(path.absorbed_at)
        if path.b_zero_at is not None:
            st.b_zero.append(path.b_zero_at)
        st.n += 1
        if st.mean is None:
            st.times = path.times
            st.mean = np.zeros_like(path.states)
            st.m2 = np.zeros_like(path.states)
            if path.env_values is not None:
                st.env_mean = np.zeros_like(path.env_values)
                st.env_m2 = np.zeros_like(path.env_values)
        _welford(st.n, st.mean, st.m2, path.states)
        if path.env_values is not None:
            _welford(st.n, st.env_mean, st.env_m2, path.env_values)
        st.end_states.append(path.states[-1])
    return st


def _chan_combine(n_a, mean_a, m2_a, n_b, mean_b, m2_b):
    if n_a == 0:
        return n_b, mean_b, m2_b
    if n_b == 0:
        return n_a, mean_a, m2_a
    n = n_a + n_b
    d = mean_b - mean_a
    mean = mean_a + d * (n_b / n)
    m2 = m2_a + m2_b + d * d * (n_a * n_b / n)
    return n, mean, m2


def run_ensemble(init, params: ModelParams, config: SimConfig,
                 n_paths: int) -> EnsembleSummary:
    """Simulate paths 0..n_paths-1 and aggregate their statistics.

    Per-path overflow failures are excluded and counted; more than 1% of
    them raises an ensemble error.
    """
    if not (isinstance(n_paths, (int, np.integer)) and n_paths >= 2):
        raise DomainError("n_paths must be an integer >= 2")
    init = np.asarray(init, dtype=np.float64)
    blocks = [(s, min(s + BLOCK_PATHS, n_paths)) for s in range(0, n_paths, BLOCK_PATHS)]
    workers = min(worker_count(), len(blocks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(
                lambda se: _simulate_block(init, params, config, *se), blocks))
    else:
        results = [_simulate_block(init, params, config, *se) for se in blocks]

    n, mean, m2 = 0, None, None
    env_n, env_mean, env_m2 = 0, None, None
    end_states: list[np.ndarray] = []
    failed: list[int] = []
    absorbed: list[float] = []
    b_zero: list[float] = []
    times = None
    for st in results:          # block order == path-index order
        failed.extend(st.failed)
        absorbed.extend(st.absorbed)
        b_zero.extend(st.b_zero)
        end_states.extend(st.end_states)
        if st.n:
            times = st.times if times is None else times
            n, mean, m2 = _chan_combine(n, mean, m2, st.n, st.mean, st.m2)
            if st.env_mean is not None:
                env_n, env_mean, env_m2 = _chan_combine(
                    env_n, env_mean, env_m2, st.n, st.env_mean, st.env_m2)

    if len(failed) > 0.01 * n_paths:
        raise EnsembleError(
            f"{len(failed)} of {n_paths} paths failed (> 1%); "
            f"first failures: {failed[:5]}")
    if n < 2:
        raise EnsembleError("fewer than 2 paths completed; no statistics possible")

    std = np.sqrt(m2 / (n - 1))
    env_std = np.sqrt(env_m2 / (env_n - 1)) if env_mean is not None else None
    return EnsembleSummary(
        times=times,
        mean_ts=mean,
        std_ts=std,
        end_samples=np.vstack(end_states),
        n_paths=n_paths,
        config=config,
        params=params,
        init=init,
        n_failures=len(failed),
        failed_paths=failed,
        env_mean_ts=env_mean,
        env_std_ts=env_std,
        absorbed_times=np.asarray(absorbed),
        b_zero_times=np.asarray(b_zero),
    )


def histogram(samples, bins: int = 100, variable: str = "") -> Histogram:
    """Uniform-width histogram on [min, max]; the max lands in the last bin."""
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise DomainError("histogram needs at least one sample")
    if not (isinstance(bins, (int, np.integer)) and bins >= 1):
        raise DomainError("bins must be an integer >= 1")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return Histogram(np.array([lo, hi]), np.array([x.size]), variable)
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    return Histogram(edges, counts, variable)


def summary_stats(samples) -> dict[str, float]:
    """Sample mean, standard deviation (n-1 denominator), and median."""
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise DomainError("summary_stats needs at least one sample")
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return {"mean": float(np.mean(x)), "std": std, "median": float(np.median(x))}


def rank_diff(samples_t1, samples_t2) -> np.ndarray:
    """Per-rank comparison of two equally sized sample sets.

    Both sets are sorted ascending; returns an (n, 4) array with columns
    (rank starting at 1, value_t1, value_t2, value_t2 - value_t1).
    """
    a = np.sort(np.asarray(samples_t1, dtype=np.float64).reshape(-1))
    b = np.sort(np.asarray(samples_t2, dtype=np.float64).reshape(-1))
    if a.size != b.size:
        raise DomainError(f"sample sets differ in length: {a.size} vs {b.size}")
    ranks = np.arange(1, a.size + 1, dtype=np.float64)
    return np.column_stack([ranks, a, b, b - a])

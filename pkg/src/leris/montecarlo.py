"""Seeded, draw-parallel Monte Carlo harness.

Each draw gets its own RNG substream derived from (seed, draw index), so
results are bitwise independent of worker count and scheduling.  Workers are
forked processes inheriting the parent's memory (the kernel callable is
published through a module global before the fork, so closures work and
nothing heavyweight is pickled).  Aggregation happens in the parent over the
index-ordered result array and is therefore order-invariant; numpy's
pairwise summation bounds floating-point drift.

Draw kernels signal *physical* outages by returning zeros; only unexpected
exceptions are recorded as per-draw errors, excluded from aggregates, and
reported in the result.
"""

import math
import multiprocessing as mp
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

_ACTIVE_KERNEL = None
_ACTIVE_SEED = None


def substream(seed, index):
    """Independent generator for one draw; stable across worker layouts."""
    return np.random.default_rng(np.random.SeedSequence(
        entropy=[int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)]))


def _run_range(args):
    start, stop, width = args
    values = np.full((stop - start, width), np.nan)
    errors = []
    for i in range(start, stop):
        try:
            out = np.asarray(_ACTIVE_KERNEL(i, substream(_ACTIVE_SEED, i)),
                             dtype=float).ravel()
            if out.shape[0] != width:
                raise ArgumentError(
                    f"kernel returned {out.shape[0]} values, expected {width}")
            values[i - start] = out
        except Exception as err:   # noqa: BLE001 - per-draw fault isolation
            errors.append((i, f"{type(err).__name__}: {err}"))
    return start, values, errors


@dataclass(frozen=True)
class MonteCarloResult:
    values: np.ndarray          # (iterations, width); error draws are NaN rows
    error_count: int
    error_examples: tuple
    seed: int
    iterations: int

    @property
    def effective_n(self):
        return self.iterations - self.error_count

    def aggregates(self):
        """mean, p5, p50, p95 per column over non-error draws."""
        with np.errstate(all="ignore"):
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                mean = np.nanmean(self.values, axis=0)
                p5, p50, p95 = np.nanpercentile(self.values, [5, 50, 95], axis=0)
        return {"mean": mean, "p5": p5, "p50": p50, "p95": p95,
                "n": self.effective_n}


def monte_carlo(kernel, iterations, seed, workers=1, width=1):
    """Run ``kernel(index, rng)`` for every draw index.

    The kernel must return ``width`` floats per draw.  Same seed and
    iterations give bitwise-identical results for any worker count.
    """
    global _ACTIVE_KERNEL, _ACTIVE_SEED
    if iterations < 1:
        raise ArgumentError("iterations must be >= 1")
    if workers < 1:
        raise ArgumentError("workers must be >= 1")

    _ACTIVE_KERNEL = kernel
    _ACTIVE_SEED = int(seed)
    try:
        if workers == 1 or iterations < 4 * workers:
            chunks = [(0, iterations, width)]
            results = [_run_range(c) for c in chunks]
        else:
            step = max(1, math.ceil(iterations / (workers * 4)))
            chunks = [(s, min(s + step, iterations), width)
                      for s in range(0, iterations, step)]
            try:
                ctx = mp.get_context("fork")
            except ValueError:      # pragma: no cover - non-posix fallback
                ctx = None
            if ctx is None:         # pragma: no cover
                results = [_run_range(c) for c in chunks]
            else:
                with ctx.Pool(processes=workers) as pool:
                    results = pool.map(_run_range, chunks)
    finally:
        _ACTIVE_KERNEL = None
        _ACTIVE_SEED = None

    values = np.full((iterations, width), np.nan)
    errors = []
    for start, block, errs in results:
        values[start:start + block.shape[0]] = block
        errors.extend(errs)
    errors.sort()
    return MonteCarloResult(values=values, error_count=len(errors),
                            error_examples=tuple(errors[:10]),
                            seed=int(seed), iterations=iterations)

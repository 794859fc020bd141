"""Seeded, chunked Monte Carlo accumulation.

The sample budget is split into fixed-size chunks; chunk i draws from its own
generator spawned deterministically from the master seed, and partial sums are
reduced in chunk order.  Results are therefore bit-identical for a given
(seed, chunk_size) no matter how many worker threads evaluate the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

DEFAULT_CHUNK_SIZE = 8192


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with standard error of the mean."""

    mean: complex
    std_error: float
    n_samples: int

    def z_score(self, target: complex) -> float:
        if self.std_error == 0.0:
            return 0.0 if abs(self.mean - target) == 0.0 else math.inf
        return abs(self.mean - target) / self.std_error


def _chunk_sizes(n_samples: int, chunk_size: int) -> list[int]:
    n_chunks = (n_samples + chunk_size - 1) // chunk_size
    sizes = [chunk_size] * n_chunks
    sizes[-1] = n_samples - chunk_size * (n_chunks - 1)
    return sizes


def chunked_mc_vector(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_quantities: int,
    n_samples: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_workers: Optional[int] = None,
) -> list[MCEstimate]:
    """Estimate several means at once; sampler(rng, m) returns shape (m, Q).

    All Q quantities are computed from the same sample stream.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    sizes = _chunk_sizes(n_samples, chunk_size)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def run_chunk(idx: int):
        rng = np.random.default_rng(streams[idx])
        vals = np.asarray(sampler(rng, sizes[idx]), dtype=complex)
        if vals.shape != (sizes[idx], n_quantities):
            raise ValueError(
                f"sampler returned shape {vals.shape}, expected {(sizes[idx], n_quantities)}"
            )
        re, im = vals.real, vals.imag
        return (
            re.sum(axis=0),
            im.sum(axis=0),
            (re**2).sum(axis=0),
            (im**2).sum(axis=0),
        )

    if n_workers is not None and n_workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            partials = list(pool.map(run_chunk, range(len(sizes))))
    else:
        partials = [run_chunk(i) for i in range(len(sizes))]

    sum_re = np.zeros(n_quantities)
    sum_im = np.zeros(n_quantities)
    sum_re2 = np.zeros(n_quantities)
    sum_im2 = np.zeros(n_quantities)
    for p_re, p_im, p_re2, p_im2 in partials:  # fixed order: reproducible
        sum_re += p_re
        sum_im += p_im
        sum_re2 += p_re2
        sum_im2 += p_im2

    n = float(n_samples)
    mean_re, mean_im = sum_re / n, sum_im / n
    if n_samples > 1:
        var_re = np.maximum(sum_re2 - n * mean_re**2, 0.0) / (n - 1.0)
        var_im = np.maximum(sum_im2 - n * mean_im**2, 0.0) / (n - 1.0)
        std_err = np.sqrt((var_re + var_im) / n)
    else:
        std_err = np.zeros(n_quantities)
    return [
        MCEstimate(complex(mean_re[q], mean_im[q]), float(std_err[q]), n_samples)
        for q in range(n_quantities)
    ]


def chunked_mc(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_workers: Optional[int] = None,
) -> MCEstimate:
    """Scalar version: sampler(rng, m) returns m complex values."""

    def vec_sampler(rng: np.random.Generator, m: int) -> np.ndarray:
        return np.asarray(sampler(rng, m), dtype=complex).reshape(m, 1)

    return chunked_mc_vector(vec_sampler, 1, n_samples, seed, chunk_size, n_workers)[0]

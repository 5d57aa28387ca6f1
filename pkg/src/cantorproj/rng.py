"""Counter-based random streams.

Every random quantity in the package is a pure function of a key path and a
position: the stream for ``(seed, *path)`` is Philox4x64 keyed by a hash of the
path, and draw number ``k`` is the k-th raw 64-bit output. Any slice of a
stream can be produced independently (``advance`` jumps the counter), so
chunked or threaded generation reproduces the serial result exactly.
"""
from __future__ import annotations

import numpy as np

_TWO_M53 = 2.0 ** -53


def stream_key(seed: int, *path: int) -> np.ndarray:
    """Philox key (2 x uint64) for the stream addressed by ``(seed, *path)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(p) for p in path))
    return ss.generate_state(2, np.uint64)


def raw(seed: int, path: tuple[int, ...], start: int, count: int) -> np.ndarray:
    """Raw uint64 draws ``start, ..., start + count - 1`` of a stream."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    bg = np.random.Philox(key=stream_key(seed, *path))
    # four 64-bit outputs per counter increment
    bg.advance(start // 4)
    if start % 4:
        bg.random_raw(start % 4)
    return bg.random_raw(count) if count else np.empty(0, dtype=np.uint64)


def uniforms(seed: int, path: tuple[int, ...], start: int, count: int) -> np.ndarray:
    """Uniform doubles on [0, 1) with 53 random bits each."""
    return (raw(seed, path, start, count) >> np.uint64(11)).astype(np.float64) * _TWO_M53


def indices(seed: int, path: tuple[int, ...], start: int, count: int, n_values: int) -> np.ndarray:
    """Uniform integers in [0, n_values); bias below n_values * 2**-53."""
    if not 0 < n_values < 2**40:
        raise ValueError("n_values out of supported range")
    u = uniforms(seed, path, start, count)
    return np.minimum((u * n_values).astype(np.int64), n_values - 1)


def generator(seed: int, *path: int) -> np.random.Generator:
    """A numpy Generator on the keyed stream, for bulk Monte-Carlo draws."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *path)))


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for a labelled sub-experiment (trial index, worker, ...)."""
    return int(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(path)).generate_state(1, np.uint64)[0])

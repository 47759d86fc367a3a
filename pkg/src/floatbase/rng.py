"""Reproducible noise draws.

Raw 64-bit words come from a Philox4x64-10 counter-based generator keyed with
``seed + (stream << 64)`` and starting at counter zero. Uniforms take the top
53 bits; Gaussians use the Box-Muller transform on consecutive word pairs. The
result depends only on (seed, stream, count), so any implementation of the
same recipe reproduces the same numbers.
"""

from __future__ import annotations

import numpy as np

STREAM_ACCEL = 1
STREAM_GYRO = 2
STREAM_ENCODER = 3
STREAM_TRIAL = 4

_SCALE = 2.0**-53


def _words(seed: int, stream: int, n: int) -> np.ndarray:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in 64 unsigned bits")
    bg = np.random.Philox(key=seed + (stream << 64))
    return bg.random_raw(n)


def uniform(seed: int, stream: int, n: int) -> np.ndarray:
    """n draws in [0, 1)."""
    return (_words(seed, stream, n) >> np.uint64(11)).astype(np.float64) * _SCALE


def gaussian(seed: int, stream: int, shape) -> np.ndarray:
    """Standard normal draws of the given shape (Box-Muller)."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    n = int(np.prod(shape))
    m = (n + 1) // 2
    w = _words(seed, stream, 2 * m) >> np.uint64(11)
    u1 = (w[0::2].astype(np.float64) + 1.0) * _SCALE  # (0, 1]
    u2 = w[1::2].astype(np.float64) * _SCALE
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n].reshape(shape)

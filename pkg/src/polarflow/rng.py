"""Deterministic random streams.

Uniforms come from numpy's Philox4x64 counter-based bit generator keyed by a
64-bit seed; normals are produced from them with the Box-Muller transform so
that the mapping from seed to sample does not depend on numpy's choice of
normal sampler.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One output of the SplitMix64 generator started at state ``x``."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed for sub-stream ``index`` of a master ``seed``."""
    return splitmix64((splitmix64(seed & _MASK64) + index) & _MASK64)


def uniforms(seed: int, size: int) -> np.ndarray:
    """``size`` doubles in [0, 1) from Philox keyed by ``seed``."""
    gen = np.random.Generator(np.random.Philox(key=seed & _MASK64))
    return gen.random(size)


def standard_normal(seed: int, shape) -> np.ndarray:
    """Standard normal array of ``shape`` via Box-Muller on Philox uniforms."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    count = int(np.prod(shape, dtype=np.int64))
    pairs = (count + 1) // 2
    u = uniforms(seed, 2 * pairs)
    u1 = 1.0 - u[:pairs]  # (0, 1]
    u2 = u[pairs:]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count].reshape(shape)

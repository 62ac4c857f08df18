"""Deterministic cross-platform random stream.

SplitMix64 with the reference constants: golden-ratio increment
0x9E3779B97F4A7C15 and finalizer multipliers 0xBF58476D1CE4E5B9 /
0x94D049BB133111EB with shifts 30, 27, 31. Integer arithmetic only, so a
given seed produces the same stream on every platform, which is exactly
what seeded parameter initialization needs.
"""

from __future__ import annotations

import numpy as np

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self._state = int(seed) & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        # top 53 bits -> [0, 1)
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        """f64 array of uniforms in [low, high), drawn in row-major order.

        The state advances by one increment per element; because the advance
        is a plain addition the whole batch is computed in closed form,
        bit-identical to repeated next_float() calls.
        """
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        count = 1
        for s in shape:
            count *= s
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        self._state = (self._state + count * _GAMMA) & _MASK
        r = (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return (low + (high - low) * r).reshape(shape)

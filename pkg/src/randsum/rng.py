"""Counter-based uniforms keyed by ``(seed, path, step, draw)``.

Each uniform is a pure function of its key (chained SplitMix64 finalizers),
so a simulation gives bit-identical results however paths are batched or
scheduled across workers.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = 0x5851F42D4C957F2D


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _absorb(h: np.ndarray, counter) -> np.ndarray:
    c = np.asarray(counter, dtype=np.uint64) + np.uint64(1)
    return _mix(h + c * _GOLDEN)


def seed_key(seed: int) -> np.ndarray:
    """Map any Python int (negative values wrap) to a 64-bit key."""
    return _mix(np.array([(int(seed) ^ _SEED_SALT) & _MASK64], dtype=np.uint64))


def uniforms(seed: int, path, step: int, draw) -> np.ndarray:
    """Uniforms on [0, 1) for broadcastable arrays of path and draw indices."""
    with np.errstate(over="ignore"):
        h = _absorb(seed_key(seed), path)
        h = _absorb(h, np.uint64(step))
        h = _absorb(h, draw)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

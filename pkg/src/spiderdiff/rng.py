"""Counter-based random numbers for reproducible path ensembles.

Every draw is a pure function of (seed, stream, path index, step index),
so path k of an ensemble does not depend on how many other paths were
simulated, on chunking, or on worker count.  Normals go through the
inverse CDF (scipy's ndtri) rather than a rejection sampler, which keeps
the byte stream identical across platforms.
"""

import numpy as np
from scipy.special import ndtri

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_M1 = np.uint64(0xFF51AFD7ED558CCD)
_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_PATH_MULT = np.uint64(0xBF58476D1CE4E5B9)
_STEP_MULT = np.uint64(0x94D049BB133111EB)
_33 = np.uint64(33)

# streams used by the simulator
STREAM_INCREMENT = 0
STREAM_LABEL = 1
STREAM_BRIDGE = 2


def _mix(h):
    """64-bit finalizer (murmur3 style): full avalanche of the input."""
    with np.errstate(over="ignore"):  # uint64 wraparound is intended
        h = h ^ (h >> _33)
        h = h * _M1
        h ^= h >> _33
        h = h * _M2
        h ^= h >> _33
    return h


_M64 = (1 << 64) - 1


def path_keys(seed, stream, path_indices):
    """Precomputed per-path key array, combined with the step index later.

    path_indices may be an integer array or a scalar.
    """
    s = np.uint64((int(seed) * int(_GOLDEN) + int(stream)) & _M64)
    p = np.asarray(path_indices, dtype=np.uint64)
    return _mix(s ^ (p * _PATH_MULT))


def uniform_at_step(keys, step):
    """Uniforms in (0, 1), one per path key, for the given step index."""
    h = _mix(keys ^ np.uint64((int(step) * int(_STEP_MULT)) & _M64))
    # 53 significant bits, shifted into the open interval (0, 1)
    h = h >> np.uint64(11)
    out = h.astype(np.float64) if isinstance(h, np.ndarray) else float(h)
    out *= 2.0 ** -53
    out += 2.0 ** -54
    return out


def normal_at_step(keys, step):
    """Standard normals via the inverse CDF, one per path key."""
    return ndtri(uniform_at_step(keys, step))

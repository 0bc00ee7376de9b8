"""Counter-based random streams shared by every kernel backend.

Each simulated path owns a splitmix64 state derived from (seed, path
index), so results are independent of batching, ordering, and backend:
the integer streams are bit-identical between the scalar-python, numpy,
and numba implementations (float draws agree up to libm rounding in the
Box-Muller trig calls, which the backends document as ~1 ulp).

Normals are produced in Box-Muller pairs.  Consumers draw one normal per
substep and must consume the pair halves in (cos, sin) order on (even,
odd) substep counts; the helpers here and the kernels follow that rule.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
PATH_SALT = 0xA24BAED4963EE407
BRIDGE_XOR = 0xD1B54A32D192ED03  # seed tweak for barrier-crossing uniforms
TWO_NEG53 = 2.0 ** -53
TWO_PI = 2.0 * math.pi


# -- scalar (python int) versions -------------------------------------------

def sm64_next(state: int) -> tuple[int, int]:
    """Advance one splitmix64 step; returns (new_state, output word)."""
    state = (state + GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    z = z ^ (z >> 31)
    return state, z


def path_state(seed: int, index: int) -> int:
    """Initial stream state for path `index` under `seed`."""
    s = (seed ^ ((index * PATH_SALT) & MASK64)) & MASK64
    s, _ = sm64_next(s)
    s, _ = sm64_next(s)
    return s


def uniform_next(state: int) -> tuple[int, float]:
    """One uniform in (0, 1]; never returns 0.0 so log() is safe."""
    state, z = sm64_next(state)
    return state, ((z >> 11) + 1) * TWO_NEG53


def normal_pair(state: int) -> tuple[int, float, float]:
    """Two independent standard normals via Box-Muller."""
    state, u1 = uniform_next(state)
    state, z = sm64_next(state)
    u2 = (z >> 11) * TWO_NEG53
    r = math.sqrt(-2.0 * math.log(u1))
    return state, r * math.cos(TWO_PI * u2), r * math.sin(TWO_PI * u2)


class SubstepNormals:
    """Stateful one-normal-per-call view of the paired stream."""

    def __init__(self, seed: int, index: int):
        self.state = path_state(seed, index)
        self._spare = 0.0
        self._count = 0

    def next(self) -> float:
        if self._count & 1:
            z = self._spare
        else:
            self.state, z, self._spare = normal_pair(self.state)
        self._count += 1
        return z


# -- vector (numpy uint64) versions -----------------------------------------

def sm64_next_vec(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    state = state + np.uint64(GAMMA)
    z = state ^ (state >> np.uint64(30))
    z = z * np.uint64(MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(MIX2)
    z = z ^ (z >> np.uint64(31))
    return state, z


def path_state_vec(seed: int, indices: np.ndarray) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.uint64)
    s = np.uint64(seed & MASK64) ^ (idx * np.uint64(PATH_SALT))
    # two silent advances, identical to the scalar path_state
    s = s + np.uint64((2 * GAMMA) & MASK64)
    return s


def normal_pair_vec(state: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    state, z1 = sm64_next_vec(state)
    state, z2 = sm64_next_vec(state)
    u1 = ((z1 >> np.uint64(11)).astype(np.float64) + 1.0) * TWO_NEG53
    u2 = (z2 >> np.uint64(11)).astype(np.float64) * TWO_NEG53
    r = np.sqrt(-2.0 * np.log(u1))
    ang = TWO_PI * u2
    return state, r * np.cos(ang), r * np.sin(ang)

"""Reproducible Brownian increment streams.

Increment k of a stream is a pure function of (master_seed, stream_id, k):
a Philox counter-based generator is keyed by the seed pair and its 256-bit
counter is set from the step index, so random access returns exactly the
bytes sequential generation would.  This is what makes replicas
parallelizable without coordination and lets pullback runs read "past"
increments (negative k) from the same realization of the noise.

Raw 64-bit words are mapped to normals with a fixed-consumption
Box-Muller transform (two words per pair of increment coordinates), so
the word position of step k is known in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Philox

_COUNTER_MOD = 1 << 256
_INV_2_53 = 2.0 ** -53
_HALF_ULP = 2.0 ** -54


def _raw_words(key: tuple[int, int], w0: int, n_words: int) -> np.ndarray:
    """Words w0 .. w0+n_words-1 of the keyed word stream (4 per block).

    Negative word indices wrap modulo 2^256, giving a well-defined
    two-sided stream for pullback views.
    """
    block0, offset = divmod(w0, 4)
    n_blocks = (offset + n_words + 3) // 4
    gen = Philox(key=np.array(key, dtype=np.uint64), counter=block0 % _COUNTER_MOD)
    words = gen.random_raw(n_blocks * 4)
    return words[offset:offset + n_words]


def _words_to_normals(words: np.ndarray) -> np.ndarray:
    """Fixed-consumption Box-Muller: 2k words -> 2k standard normals."""
    u1 = (words[0::2] >> np.uint64(11)) * _INV_2_53 + _HALF_ULP
    u2 = (words[1::2] >> np.uint64(11)) * _INV_2_53 + _HALF_ULP
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    out = np.empty(words.shape[0], dtype=float)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out


@dataclass
class NoisePath:
    """One replica's Brownian increment stream at step size dt.

    The cursor only serves sequential consumption; `increments` is pure
    random access and does not touch it.
    """

    master_seed: int
    stream_id: int
    dt: float
    d: int = 2
    cursor: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive (got {self.dt})")
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1 (got {self.d})")

    @property
    def _words_per_step(self) -> int:
        return self.d + (self.d % 2)

    @property
    def key(self) -> tuple[int, int]:
        return (self.master_seed % (1 << 64), self.stream_id % (1 << 64))

    def increments(self, k0: int, n: int) -> np.ndarray:
        """(n, d) Gaussian increments for steps k0 .. k0+n-1, variance dt."""
        wps = self._words_per_step
        words = _raw_words(self.key, k0 * wps, n * wps)
        z = _words_to_normals(words).reshape(n, wps)[:, : self.d]
        return math.sqrt(self.dt) * z

    def next_increment(self) -> np.ndarray:
        out = self.increments(self.cursor, 1)[0]
        self.cursor += 1
        return out

    def take(self, n: int) -> np.ndarray:
        """Next n increments, advancing the cursor."""
        out = self.increments(self.cursor, n)
        self.cursor += n
        return out


@dataclass
class ShiftView:
    """Time-shifted view: increment k of the view is increment
    k + shift_steps of the base.  Negative shifts serve pullback runs."""

    base: NoisePath
    shift_steps: int
    cursor: int = field(default=0, compare=False)

    @property
    def dt(self) -> float:
        return self.base.dt

    @property
    def d(self) -> int:
        return self.base.d

    def increments(self, k0: int, n: int) -> np.ndarray:
        return self.base.increments(k0 + self.shift_steps, n)

    def next_increment(self) -> np.ndarray:
        out = self.increments(self.cursor, 1)[0]
        self.cursor += 1
        return out

    def take(self, n: int) -> np.ndarray:
        out = self.increments(self.cursor, n)
        self.cursor += n
        return out


@dataclass
class ScaledView:
    """Accelerated-clock view of a base stream.

    Step k of the view is sqrt(eps) times step k of the base and covers
    eps * base.dt of the accelerated clock, i.e. the view increments have
    variance equal to their own step size.  Both the base and the view
    expose the same underlying random numbers, which is what couples an
    original-clock run to its accelerated counterpart in consistency
    tests.  eps = 1 is the identity view.
    """

    base: NoisePath
    eps: float
    cursor: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive (got {self.eps})")

    @property
    def dt(self) -> float:
        return self.eps * self.base.dt

    @property
    def d(self) -> int:
        return self.base.d

    def increments(self, k0: int, n: int) -> np.ndarray:
        return math.sqrt(self.eps) * self.base.increments(k0, n)

    def next_increment(self) -> np.ndarray:
        out = self.increments(self.cursor, 1)[0]
        self.cursor += 1
        return out

    def take(self, n: int) -> np.ndarray:
        out = self.increments(self.cursor, n)
        self.cursor += n
        return out


def scaled_view(path: NoisePath, eps: float) -> ScaledView:
    return ScaledView(base=path, eps=eps)

"""Counter-based random streams.

Every sampler in this package takes an :class:`RngStream`.  A stream keys a
Philox generator through a SeedSequence built from (seed, stream_id) plus
the nested derivation path, so identical streams reproduce identical draws,
distinct streams are statistically independent, and substream derivation is
collision-resistant at any nesting depth.  Replicate loops allocate one
stream per replicate, which makes results independent of execution order
and worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_BUF = 1024


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    path: tuple = field(default=())

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.seed % (1 << 64), spawn_key=(self.stream_id % (1 << 64), *self.path)
        )
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, i: int) -> "RngStream":
        """Derive the i-th child stream (independent of all other streams)."""
        return RngStream(self.seed, self.stream_id, self.path + (i,))


class BufferedRng:
    """Amortizes Generator call overhead for tight event loops."""

    def __init__(self, stream: RngStream):
        self._gen = stream.generator()
        self._u = self._gen.random(_BUF)
        self._e = self._gen.standard_exponential(_BUF)
        self._iu = 0
        self._ie = 0

    def uniform(self) -> float:
        if self._iu == _BUF:
            self._u = self._gen.random(_BUF)
            self._iu = 0
        v = self._u[self._iu]
        self._iu += 1
        return v

    def exponential(self) -> float:
        if self._ie == _BUF:
            self._e = self._gen.standard_exponential(_BUF)
            self._ie = 0
        v = self._e[self._ie]
        self._ie += 1
        return v

    def exponentials(self, n: int) -> np.ndarray:
        return self._gen.standard_exponential(n)

    def integers(self, low: int, high: int) -> int:
        return int(self._gen.integers(low, high))

    def choice_index(self, cdf: np.ndarray) -> int:
        """Index drawn from the discrete law with cumulative weights cdf."""
        return int(np.searchsorted(cdf, self.uniform() * cdf[-1], side="right"))

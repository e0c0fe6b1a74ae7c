"""Seeded Ginibre and GUE sampling.

Both ensembles use the density ``exp(-W ||A||_HS^2)`` with respect to Lebesgue
measure on the independent entries:

=========  ===============================  ================================
ensemble   entries                          second moments
=========  ===============================  ================================
Ginibre    all W*W complex entries          Re, Im ~ N(0, 1/(2W)); E|a|^2 = 1/W
GUE        real diagonal, complex upper     a_ii ~ N(0, 1/(2W));
           triangle                         Re, Im of a_ij ~ N(0, 1/(4W))
=========  ===============================  ================================

Randomness comes from :class:`RngStream`, a value-like handle on a Philox
counter-based generator keyed by ``(master_seed, stream_index)``.  Any
sample can be addressed directly through its stream index, which is what
makes the Monte Carlo drivers independent of how work is split between
processes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidDimensionError",
    "RngStream",
    "as_generator",
    "sample_ginibre",
    "sample_ginibre_stack",
    "sample_gue",
]

_U64 = 2**64


class InvalidDimensionError(ValueError):
    """Raised when a block size or block count is out of range."""


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream.

    Two streams with equal ``(master_seed, stream_index, parent)`` produce
    identical output.  ``parent`` records the stream indices of the
    ancestors when streams are nested with :meth:`substream`.
    """

    master_seed: int
    stream_index: int = 0
    parent: tuple[int, ...] = field(default=())

    def __post_init__(self):
        for value in (self.master_seed, self.stream_index, *self.parent):
            if not 0 <= int(value) < _U64:
                raise ValueError(f"stream key {value} is not a 64-bit unsigned integer")

    @property
    def key(self) -> tuple[int, ...]:
        return (*self.parent, self.stream_index)

    def substream(self, index: int) -> "RngStream":
        """Independent child stream number ``index``."""
        return RngStream(self.master_seed, int(index), self.key)

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(seq))


def as_generator(rng) -> np.random.Generator:
    """Accept an :class:`RngStream`, a ``Generator`` or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot make a generator from {type(rng).__name__}")


def _check_width(W):
    if int(W) != W or W < 1:
        raise InvalidDimensionError(f"block size must be a positive integer, got {W}")
    return int(W)


def sample_ginibre_stack(W: int, count: int, rng) -> np.ndarray:
    """Draw ``count`` iid Ginibre(W) matrices as an array of shape (count, W, W).

    The draw order matches ``count`` successive :func:`sample_ginibre`
    calls on the same generator, so chunked and one-at-a-time sampling
    agree bit for bit.
    """
    W = _check_width(W)
    g = as_generator(rng)
    parts = g.standard_normal((count, 2, W, W))
    out = parts[:, 0] + 1j * parts[:, 1]
    out *= np.sqrt(0.5 / W)
    return out


def sample_ginibre(W: int, rng) -> np.ndarray:
    """One W x W complex Ginibre matrix with E|a_ij|^2 = 1/W."""
    return sample_ginibre_stack(W, 1, rng)[0]


def sample_gue(W: int, rng) -> np.ndarray:
    """One W x W GUE matrix, exactly Hermitian.

    Diagonal entries are real with variance 1/(2W); off-diagonal entries
    have E|a_ij|^2 = 1/(2W).  The spectrum fills [-sqrt(2), sqrt(2)] as W
    grows.
    """
    W = _check_width(W)
    g = as_generator(rng)
    parts = g.standard_normal((2, W, W))
    A = parts[0] + 1j * parts[1]
    # (A + A^*)/2 has off-diagonal Re, Im variance 1/2 and real diagonal variance 1
    H = 0.5 * (A + A.conj().T)
    H *= np.sqrt(0.5 / W)
    return H

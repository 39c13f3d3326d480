"""Counter-based random streams keyed by (seed, label, path, component).

A stream maps an integer key and a ``(counter, slot)`` pair to a uniform
variate through two rounds of the SplitMix64 finalizer. Nothing is stateful:
the same key, counter and slot always give the same number, so an ensemble
produces identical paths whether it is generated in one block, in chunks, or
across worker processes.

Keys are arrays, which is how path ensembles are vectorized: one key per path,
one shared counter per time step.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy import special

__all__ = ["CounterStream", "label_hash", "mix64"]

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SLOT_GAMMA = np.uint64(0xD1B54A32D192ED03)
_S30, _S27, _S31, _S11 = (np.uint64(v) for v in (30, 27, 31, 11))
_TWO_M53 = 2.0**-53


def mix64(z):
    """SplitMix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def label_hash(label):
    """Stable 64-bit hash of a string label (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(str(label).encode(), digest_size=8).digest()
    return np.uint64(int.from_bytes(digest, "little"))


def _fold(key, value):
    with np.errstate(over="ignore"):
        return mix64(key ^ (np.asarray(value, dtype=np.uint64) * _GOLDEN + _SLOT_GAMMA))


class CounterStream:
    """A family of independent uniform streams sharing one derivation.

    Parameters
    ----------
    seed : int
        Master seed (reduced modulo 2**64).
    label : str
        Name of the consumer, e.g. ``"D"`` for subordinator increments.
    path : int or array_like of int, optional
        Path indices. An array gives one independent stream per entry.
    component : int, optional
        Sub-stream index, e.g. the mixture component.

    Examples
    --------
    >>> s = CounterStream(7, "D", path=np.arange(3), component=0)
    >>> s.uniform(counter=0).shape
    (3,)
    """

    def __init__(self, seed, label, path=0, component=0):
        self.seed = int(seed)
        self.label = str(label)
        self.path = np.asarray(path, dtype=np.int64)
        self.component = int(component)
        base = mix64(np.uint64(self.seed % 2**64))
        base = _fold(base, label_hash(self.label))
        base = _fold(base, np.uint64(self.component))
        self.keys = _fold(base, self.path.astype(np.uint64))

    @property
    def shape(self):
        return self.keys.shape

    def subset(self, index):
        """Stream restricted to ``path[index]`` (keys are not recomputed)."""
        sub = object.__new__(CounterStream)
        sub.seed, sub.label, sub.component = self.seed, self.label, self.component
        sub.path = self.path[index]
        sub.keys = self.keys[index]
        return sub

    def bits(self, counter, slot=0):
        """Raw 64-bit outputs; broadcasts ``keys`` against ``counter``."""
        counter = np.asarray(counter, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = mix64(self.keys + (counter + np.uint64(1)) * _GOLDEN)
            z = mix64(z ^ (np.uint64(slot) * _SLOT_GAMMA + _GOLDEN))
        return z

    def uniform(self, counter, slot=0):
        """Uniform variates on the open interval (0, 1)."""
        z = self.bits(counter, slot)
        return ((z >> _S11).astype(np.float64) + 0.5) * _TWO_M53

    def normal(self, counter, slot=0):
        """Standard normal variates by inversion."""
        return special.ndtri(self.uniform(counter, slot))

    def exponential(self, counter, slot=0):
        """Unit-rate exponential variates."""
        return -np.log(self.uniform(counter, slot))

    def __repr__(self):
        return (
            f"CounterStream(seed={self.seed}, label={self.label!r}, "
            f"component={self.component}, paths={self.path.size})"
        )

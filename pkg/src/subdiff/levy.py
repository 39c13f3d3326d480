"""One-dimensional Levy drivers: triplets, symbols and increment samplers.

Jump parts are restricted to two families:

* compound Poisson with a bounded jump law (finite activity, compensator is
  explicit), and
* symmetric alpha-stable, normalized so that ``E[exp(i xi L_t)] = exp(-t |xi|**alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import stats

from .errors import DomainError

__all__ = [
    "JumpLaw",
    "CompoundPoisson",
    "SymmetricStable",
    "LevyTriplet",
    "levy_symbol",
    "sample_levy_increment",
    "cms_symmetric",
    "LEVY_SLOTS",
]

# Stream slot layout per operational step. Slot 0 is left to the SDE engine
# for the Brownian motion multiplying sigma(y).
LEVY_SLOTS = {"gauss": 1, "stable_u": 2, "stable_w": 3, "poisson": 4, "jumps": 5}


@dataclass(frozen=True)
class JumpLaw:
    """Bounded jump-size distribution given by its quantile function.

    Parameters
    ----------
    quantile : callable
        Vectorized inverse CDF on (0, 1).
    cf : callable
        Characteristic function ``E[exp(i xi W)]``.
    small_mean : float
        ``E[W; |W| < 1]``, the compensator per unit jump intensity.
    support : (float, float)
        Bounds of the support.
    """

    quantile: Callable
    cf: Callable
    small_mean: float
    support: tuple

    @classmethod
    def point(cls, a):
        """All jumps equal to ``a``."""
        a = float(a)
        return cls(
            quantile=lambda u, a=a: np.full(np.shape(u), a),
            cf=lambda xi, a=a: np.exp(1j * a * np.asarray(xi, dtype=float)),
            small_mean=a if abs(a) < 1 else 0.0,
            support=(a, a),
        )

    @classmethod
    def uniform(cls, lo, hi):
        """Jumps uniform on ``[lo, hi]``."""
        lo, hi = float(lo), float(hi)
        if not hi > lo:
            raise DomainError("uniform jump law needs hi > lo")

        def cf(xi, lo=lo, hi=hi):
            xi = np.asarray(xi, dtype=float)
            out = np.ones(xi.shape, dtype=complex)
            nz = xi != 0
            x = xi[nz]
            out[nz] = (np.exp(1j * x * hi) - np.exp(1j * x * lo)) / (1j * x * (hi - lo))
            return out if out.ndim else complex(out)

        # E[W; |W| < 1] for W ~ U[lo, hi].
        a, b = max(lo, -1.0), min(hi, 1.0)
        small = (b * b - a * a) / (2.0 * (hi - lo)) if b > a else 0.0
        return cls(quantile=lambda u, lo=lo, hi=hi: lo + (hi - lo) * np.asarray(u), cf=cf, small_mean=small, support=(lo, hi))


@dataclass(frozen=True)
class CompoundPoisson:
    rate: float
    law: JumpLaw

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("compound Poisson rate must be positive")


@dataclass(frozen=True)
class SymmetricStable:
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise DomainError("symmetric stable alpha must lie in (0, 2)")


@dataclass(frozen=True)
class LevyTriplet:
    """Drift, Gaussian variance and jump part of a one-dimensional Levy process."""

    drift: float = 0.0
    sigma2: float = 0.0
    jumps: Optional[Union[CompoundPoisson, SymmetricStable]] = None

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise DomainError("sigma2 must be nonnegative")

    @classmethod
    def brownian(cls, sigma2=1.0, drift=0.0):
        return cls(drift=drift, sigma2=sigma2)

    @classmethod
    def stable(cls, alpha):
        return cls(jumps=SymmetricStable(alpha))

    @classmethod
    def compound_poisson(cls, rate, law, drift=0.0, sigma2=0.0):
        return cls(drift=drift, sigma2=sigma2, jumps=CompoundPoisson(rate, law))


def levy_symbol(triplet, xi):
    """Levy-Khintchine exponent ``Psi(xi)`` with ``E[exp(i xi L_t)] = exp(t Psi(xi))``.

    Compensation applies to jumps with ``|w| < 1``; a symmetric stable part
    contributes ``-|xi|**alpha``.
    """
    x = np.asarray(xi, dtype=float)
    psi = 1j * triplet.drift * x - 0.5 * triplet.sigma2 * x * x
    j = triplet.jumps
    if isinstance(j, CompoundPoisson):
        psi = psi + j.rate * (j.law.cf(x) - 1.0 - 1j * x * j.law.small_mean)
    elif isinstance(j, SymmetricStable):
        psi = psi - np.abs(x) ** j.alpha
    psi = np.asarray(psi, dtype=complex)
    return complex(psi) if psi.ndim == 0 else psi


def cms_symmetric(alpha, u, w):
    """Chambers-Mallows-Stuck map to a symmetric stable variate with ``E e^{i xi X} = e^{-|xi|^alpha}``.

    ``u`` is uniform on (0, 1) and ``w`` unit exponential.
    """
    v = np.pi * (np.asarray(u) - 0.5)
    if alpha == 1.0:
        return np.tan(v)
    with np.errstate(over="ignore", divide="ignore"):
        return (
            np.sin(alpha * v)
            / np.cos(v) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
        )


def sample_levy_increment(triplet, delta, stream, counter):
    """Draw ``L_{t + delta} - L_t`` from the streams in ``stream`` at ``counter``.

    The result broadcasts ``stream.keys`` against ``counter``. Slots follow
    :data:`LEVY_SLOTS`, so the Gaussian, stable and Poisson parts are
    independent of each other and of slot 0.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    shape = np.broadcast_shapes(stream.shape, np.shape(counter))
    inc = np.full(shape, triplet.drift * delta)
    if triplet.sigma2 > 0:
        inc = inc + np.sqrt(triplet.sigma2 * delta) * stream.normal(counter, LEVY_SLOTS["gauss"])
    j = triplet.jumps
    if isinstance(j, SymmetricStable):
        u = stream.uniform(counter, LEVY_SLOTS["stable_u"])
        w = stream.exponential(counter, LEVY_SLOTS["stable_w"])
        inc = inc + delta ** (1.0 / j.alpha) * cms_symmetric(j.alpha, u, w)
    elif isinstance(j, CompoundPoisson):
        mu = j.rate * delta
        counts = stats.poisson.ppf(stream.uniform(counter, LEVY_SLOTS["poisson"]), mu).astype(np.int64)
        counts = np.broadcast_to(counts, shape)
        total = np.zeros(shape)
        for i in range(int(counts.max(initial=0))):
            size = j.law.quantile(stream.uniform(counter, LEVY_SLOTS["jumps"] + i))
            total = total + np.where(counts > i, size, 0.0)
        inc = inc + total - mu * j.law.small_mean
    return inc

"""Fractional integrals, Caputo derivatives and distributed-order operators on uniform grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from ..errors import DomainError, PreconditionError

__all__ = [
    "DistributedOrder",
    "fractional_integral",
    "caputo_derivative",
    "distributed_order_apply",
    "l1_coefficients",
    "starting_weights",
]


@dataclass(frozen=True)
class DistributedOrder:
    """Weighted sum of Caputo derivatives ``sum_k C_k D^{beta_k}``.

    Parameters
    ----------
    atoms : sequence of (C_k, beta_k)
        Positive weights and orders in ``(0, 1)``.
    """

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(c), float(b)) for c, b in self.atoms)
        if not atoms:
            raise DomainError("DistributedOrder needs at least one atom")
        for c, b in atoms:
            if not c > 0:
                raise DomainError(f"weight {c} must be positive")
            if not 0 < b < 1:
                raise DomainError(f"order {b} must lie in (0, 1)")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def single(cls, beta, weight=1.0):
        return cls(((weight, beta),))

    @classmethod
    def from_mixture(cls, spec):
        """Operator paired with a subordinator mixture: ``C_k = c_k ** beta_k``."""
        return cls(tuple((c**b, b) for c, b in spec.atoms))

    @classmethod
    def from_density(cls, density, lo=0.0, hi=1.0, n=16):
        """Discretize ``int D^beta mu(d beta)`` with ``n``-point Gauss-Legendre on ``[lo, hi]``.

        ``density`` is the Lebesgue density of ``mu``; nodes with zero weight are dropped.
        """
        if not 0 <= lo < hi <= 1:
            raise DomainError("need 0 <= lo < hi <= 1")
        x, w = np.polynomial.legendre.leggauss(n)
        beta = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        c = 0.5 * (hi - lo) * w * np.asarray(density(beta), dtype=float)
        if np.any(c < 0):
            raise DomainError("density must be nonnegative")
        keep = c > 0
        return cls(tuple(zip(c[keep], beta[keep])))

    @property
    def weights(self):
        return np.array([c for c, _ in self.atoms])

    @property
    def orders(self):
        return np.array([b for _, b in self.atoms])

    def symbol(self, s):
        """Laplace symbol ``sum_k C_k s**beta_k``."""
        s = np.asarray(s)
        return sum(c * s**b for c, b in self.atoms)


def _check_grid(samples, dt, min_nodes=2):
    g = np.asarray(samples, dtype=float)
    if g.ndim != 1:
        raise DomainError("samples must be one-dimensional")
    if g.size < min_nodes:
        raise PreconditionError(f"need at least {min_nodes} grid nodes")
    if not dt > 0:
        raise DomainError("dt must be positive")
    if not np.isfinite(g[0]):
        raise DomainError("g(0) must be finite")
    return g


def fractional_integral(samples, dt, beta):
    """Riemann-Liouville integral ``J^beta g`` at every grid node.

    Product integration against the piecewise-linear interpolant of ``g``,
    so the result is exact (to rounding) when ``g`` is piecewise linear on the
    grid.

    Parameters
    ----------
    samples : array_like
        ``g(t_n)`` for ``t_n = n dt``.
    dt : float
    beta : float
        Order in ``(0, 1]``; larger orders are also accepted.

    Returns
    -------
    ndarray
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    g = _check_grid(samples, dt, 1)
    n = g.size - 1
    out = np.zeros(n + 1)
    if n == 0:
        return out
    b1 = beta + 1.0
    k = np.arange(n + 1, dtype=float)
    kp = k**b1
    # Interior weights depend on n - j only: (k+1)^(b+1) - 2 k^(b+1) + (k-1)^(b+1).
    mid = np.zeros(n + 1)
    mid[1:n] = kp[2:] - 2.0 * kp[1:n] + kp[: n - 1]
    idx = np.arange(1, n + 1)
    first = (idx - 1.0) ** b1 - (idx - b1) * idx**beta
    conv = np.convolve(mid, g[1:])[: n]  # sum_{j=1}^{n-1} mid[n-j] g_j for target n
    interior = np.zeros(n + 1)
    interior[2:] = conv[1 : n]
    out[1:] = first * g[0] + interior[1:] + g[1:]
    return out * dt**beta / special.gamma(beta + 2.0)


def l1_coefficients(beta, n):
    """L1 weights ``b_j = (j+1)**(1-beta) - j**(1-beta)`` for ``j = 0..n-1``."""
    j = np.arange(n, dtype=float)
    return (j + 1.0) ** (1.0 - beta) - j ** (1.0 - beta)


def _l1_apply(g, dt, beta):
    n = g.size - 1
    b = l1_coefficients(beta, n)
    inc = np.diff(g)
    out = np.zeros(n + 1)
    out[1:] = np.convolve(b, inc)[:n]
    return out * dt ** (-beta) / special.gamma(2.0 - beta)


def caputo_derivative(samples, dt, beta):
    """Caputo derivative ``D^beta g = J^{1-beta} g'`` at every grid node.

    For ``beta < 1`` this is the L1 scheme (product integration of the kernel
    against the piecewise-linear interpolant); the value at ``t = 0`` is set
    to 0. For ``beta == 1`` the ordinary derivative is returned, by central
    differences inside and second-order one-sided differences at the ends.
    """
    if not 0 < beta <= 1:
        raise DomainError("beta must lie in (0, 1]")
    g = _check_grid(samples, dt, 3)
    if beta == 1.0:
        return np.gradient(g, dt, edge_order=2)
    return _l1_apply(g, dt, beta)


def distributed_order_apply(order, samples, dt):
    """``sum_k C_k D^{beta_k} g`` on the grid, one L1 evaluation per atom."""
    g = _check_grid(samples, dt, 3)
    out = np.zeros(g.size)
    for c, b in order.atoms:
        out = out + c * caputo_derivative(g, dt, b)
    return out


def starting_weights(beta, dt, n, sigma):
    """Correction making the L1 operator of order ``beta`` exact on ``t**sigma``.

    Returns ``s_m`` for ``m = 0..n`` such that adding ``s_m (u_1 - u_0)`` to
    the L1 value at ``t_m`` reproduces ``D^beta t**sigma`` when
    ``u = u_0 + a t**sigma``. This restores the order ``2 - beta`` for
    solutions with a ``t**sigma`` singularity at the origin.
    """
    t = dt * np.arange(n + 1)
    ts = t**sigma
    exact = special.gamma(1.0 + sigma) / special.gamma(1.0 + sigma - beta) * t ** (sigma - beta)
    s = (exact - _l1_apply(ts, dt, beta)) / dt**sigma
    s[0] = 0.0
    return s

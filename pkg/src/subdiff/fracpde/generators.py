"""Spatial generators on a periodic grid over ``[-L, L)``.

Two families are discretized:

* drift-diffusion, backward ``A f = b f' + (sigma2 / 2) f''`` or its adjoint
  ``A* h = -(b h)' + (1/2) (sigma2 h)''``, by second-order central differences;
* the forward fractional Laplacian ``A* h = -(-Delta)^{alpha/2} (g**alpha h)``
  through the Fourier multiplier ``-|xi|**alpha``.

The forward drift-diffusion matrix is the exact transpose of the backward
one, so discrete adjointness holds to rounding and the forward matrix has
zero column sums (mass conservation).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse

from ..errors import DomainError, PreconditionError

__all__ = [
    "GeneratorSpec",
    "periodic_grid",
    "discrete_delta",
    "grid_frequencies",
    "forward_operator_apply",
    "backward_operator_apply",
]

Coefficient = Union[float, Callable]


def periodic_grid(L, dx):
    """Nodes ``-L, -L + h, ..., L - h`` with ``h = 2L / M`` and ``M = 2 round(L / dx)``.

    ``M`` is even so that ``x = 0`` is a node. The spacing is adjusted to
    divide ``2L`` exactly; it equals ``dx`` when ``L / dx`` is an integer.
    """
    if not (L > 0 and dx > 0):
        raise DomainError("L and dx must be positive")
    m = 2 * int(round(L / dx))
    if m < 4:
        raise PreconditionError(f"grid would have {m} nodes; need at least 4")
    return -L + (2.0 * L / m) * np.arange(m)


def grid_frequencies(x):
    """Angular frequencies of the periodic grid in FFT order."""
    x = np.asarray(x)
    return 2.0 * np.pi * np.fft.fftfreq(x.size, d=x[1] - x[0])


def discrete_delta(x, at=0.0):
    """Kronecker delta at the node nearest ``at``, scaled by ``1/dx`` (unit mass)."""
    x = np.asarray(x)
    h = np.zeros(x.size)
    h[int(np.argmin(np.abs(x - at)))] = 1.0 / (x[1] - x[0])
    return h


def _on_grid(coef, x):
    if callable(coef):
        return np.broadcast_to(np.asarray(coef(x), dtype=float), x.shape).copy()
    return np.full(x.shape, float(coef))


def _difference_matrices(m, dx):
    e = np.ones(m)
    d1 = sparse.diags([-e[:-1], e[:-1]], [-1, 1], shape=(m, m), format="lil")
    d1[0, m - 1] = -1.0
    d1[m - 1, 0] = 1.0
    d2 = sparse.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], shape=(m, m), format="lil")
    d2[0, m - 1] = 1.0
    d2[m - 1, 0] = 1.0
    return d1.tocsr() / (2.0 * dx), d2.tocsr() / dx**2


@dataclass(frozen=True)
class GeneratorSpec:
    """Spatial generator with periodic boundary on ``[-L, L)``.

    Use :meth:`drift_diffusion` or :meth:`fractional_laplacian` to construct.

    Attributes
    ----------
    kind : {"drift_diffusion", "fractional_laplacian"}
    form : {"backward", "forward"}
        Fractional Laplacian generators exist only in forward form.
    L : float
    b, sigma2 : float or callable
        Drift-diffusion coefficients.
    alpha : float
        Fractional Laplacian order in ``(0, 2)``.
    g : float or callable
        Nonnegative jump coefficient of the fractional Laplacian.
    killing : float or callable, optional
        Reaction rate ``q(x) >= 0``; adds ``-q`` to the generator.
    """

    kind: str
    form: str = "forward"
    L: float = 8.0
    b: Coefficient = 0.0
    sigma2: Coefficient = 0.0
    alpha: float = 2.0
    g: Coefficient = 1.0
    killing: Optional[Coefficient] = None

    def __post_init__(self):
        if self.kind not in ("drift_diffusion", "fractional_laplacian"):
            raise DomainError(f"unknown generator kind {self.kind!r}")
        if self.form not in ("backward", "forward"):
            raise DomainError(f"form must be 'backward' or 'forward', not {self.form!r}")
        if not self.L > 0:
            raise DomainError("L must be positive")
        if self.kind == "fractional_laplacian":
            if not 0 < self.alpha < 2:
                raise DomainError("alpha must lie in (0, 2)")
            if self.form != "forward":
                raise DomainError("the fractional Laplacian generator is forward only")

    @classmethod
    def drift_diffusion(cls, b=0.0, sigma2=1.0, L=8.0, form="forward", killing=None):
        return cls("drift_diffusion", form=form, L=L, b=b, sigma2=sigma2, killing=killing)

    @classmethod
    def fractional_laplacian(cls, alpha, g=1.0, L=8.0, killing=None):
        return cls("fractional_laplacian", form="forward", L=L, alpha=alpha, g=g, killing=killing)

    def grid(self, dx):
        return periodic_grid(self.L, dx)

    def _killing(self, x):
        if self.killing is None:
            return None
        q = _on_grid(self.killing, x)
        if np.any(q < 0):
            raise DomainError("killing rate must be nonnegative on the grid")
        return q

    def backward_matrix(self, x):
        """Sparse ``A_h = diag(b) D1 + (1/2) diag(sigma2) D2``."""
        if self.kind != "drift_diffusion":
            raise DomainError("backward matrix is defined for drift-diffusion only")
        x = np.asarray(x)
        s2 = _on_grid(self.sigma2, x)
        if np.any(s2 < 0):
            raise DomainError("sigma2 must be nonnegative on the grid")
        d1, d2 = _difference_matrices(x.size, x[1] - x[0])
        return (sparse.diags(_on_grid(self.b, x)) @ d1 + 0.5 * sparse.diags(s2) @ d2).tocsr()

    def matrix(self, x):
        """Discrete generator in the declared form (sparse, or dense for the fractional Laplacian)."""
        x = np.asarray(x)
        q = self._killing(x)
        if self.kind == "drift_diffusion":
            a = self.backward_matrix(x)
            if self.form == "forward":
                a = a.T.tocsr()
            if q is not None:
                a = (a - sparse.diags(q)).tocsr()
            return a
        gx = _on_grid(self.g, x)
        if np.any(gx < 0):
            raise DomainError("g must be nonnegative on the grid")
        # Columns of F^{-1} diag(-|xi|^alpha) F, then right-multiplied by diag(g^alpha).
        mult = -np.abs(grid_frequencies(x)) ** self.alpha
        a = np.real(np.fft.ifft(mult[:, None] * np.fft.fft(np.eye(x.size), axis=0), axis=0))
        a = a * gx[None, :] ** self.alpha
        if q is not None:
            a = a - np.diag(q)
        return a

    def apply(self, x, h):
        """Apply the discrete generator to grid samples ``h``."""
        h = np.asarray(h, dtype=float)
        if self.kind == "fractional_laplacian":
            x = np.asarray(x)
            gh = _on_grid(self.g, x) ** self.alpha * h
            out = np.real(np.fft.ifft(-np.abs(grid_frequencies(x)) ** self.alpha * np.fft.fft(gh)))
            q = self._killing(x)
            return out if q is None else out - q * h
        return self.matrix(x) @ h


def forward_operator_apply(gen, x, h):
    """``A*_h h`` for a drift-diffusion or fractional Laplacian generator."""
    if gen.form != "forward":
        gen = replace(gen, form="forward")
    return gen.apply(x, h)


def backward_operator_apply(gen, x, f):
    """``A_h f`` for a drift-diffusion generator."""
    if gen.kind != "drift_diffusion":
        raise DomainError("backward operator is defined for drift-diffusion only")
    if gen.form != "backward":
        gen = replace(gen, form="backward")
    return gen.apply(x, f)

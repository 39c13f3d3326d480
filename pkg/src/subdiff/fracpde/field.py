"""Space-time fields on uniform grids, with CSV and binary import/export.

Binary layout (all little-endian)::

    bytes 0-7    magic b"SUBDIFF1"
    uint64       number of time nodes NT
    uint64       number of space nodes M
    float64[NT]  time grid
    float64[M]   space grid
    float64[NT*M] values, row-major (time slowest)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, PreconditionError

__all__ = ["FieldOnGrid", "BINARY_MAGIC"]

BINARY_MAGIC = b"SUBDIFF1"
_HEADER = struct.Struct("<8sQQ")


def _uniform(v, name):
    if v.size >= 2:
        d = np.diff(v)
        if not np.all(d > 0):
            raise DomainError(f"{name} grid spacing must be positive")
        if np.ptp(d) > 1e-9 * max(abs(d[0]), 1.0):
            raise DomainError(f"{name} grid must be uniform")


@dataclass
class FieldOnGrid:
    """Values ``u[n, m]`` at times ``t[n]`` and periodic space nodes ``x[m]``.

    Attributes
    ----------
    t, x : ndarray
    values : ndarray, shape (len(t), len(x))
    info : dict
        Free-form diagnostics, e.g. mass drift or solver warnings.
    """

    t: np.ndarray
    x: np.ndarray
    values: np.ndarray = field(repr=False)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.t.size, self.x.size):
            raise DomainError(f"values shape {self.values.shape} does not match grids ({self.t.size}, {self.x.size})")
        _uniform(self.t, "time")
        _uniform(self.x, "space")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field values must be finite")

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def slice_at(self, t):
        """Spatial samples at the time node nearest ``t``."""
        return self.values[int(np.argmin(np.abs(self.t - t)))]

    def mass(self):
        """Spatial integral (rectangle rule, exact for periodic grids) of every slice."""
        return self.values.sum(axis=1) * self.dx

    def check_density(self, neg_tol=1e-8, mass_tol=1e-4, skip_initial=False):
        """Check the probability-density invariants.

        Returns
        -------
        ok : bool
        details : dict
            Minimum value and worst mass error.
        """
        v = self.values[1:] if skip_initial else self.values
        mass = v.sum(axis=1) * self.dx
        details = {"min_value": float(v.min()), "max_mass_error": float(np.max(np.abs(mass - 1.0)))}
        return bool(details["min_value"] >= -neg_tol and details["max_mass_error"] <= mass_tol), details

    def cdf(self, t):
        """Piecewise-linear CDF of the slice at ``t``, treating nodes as cell centres.

        Returns a callable on real arrays; values left of the domain are 0 and
        right of it the total mass.
        """
        u = self.slice_at(t)
        edges = np.concatenate([self.x - 0.5 * self.dx, [self.x[-1] + 0.5 * self.dx]])
        cum = np.concatenate([[0.0], np.cumsum(u) * self.dx])
        return lambda q: np.interp(q, edges, cum)

    def characteristic(self, t, xi):
        """``sum_m u(t, x_m) exp(i xi x_m) dx``."""
        u = self.slice_at(t)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return np.exp(1j * np.outer(xi, self.x)) @ u * self.dx

    # -- I/O -------------------------------------------------------------

    def to_csv(self, path):
        """Write columns ``t,x,value`` with a header row, full round-trip precision."""
        tt, xx = np.meshgrid(self.t, self.x, indexing="ij")
        data = np.column_stack([tt.ravel(), xx.ravel(), self.values.ravel()])
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header="t,x,value", comments="")

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = np.unique(data[:, 0])
        x = np.unique(data[:, 1])
        if data.shape[0] != t.size * x.size:
            raise PreconditionError("CSV rows do not form a full t-x grid")
        order = np.lexsort((data[:, 1], data[:, 0]))
        return cls(t, x, data[order, 2].reshape(t.size, x.size))

    def to_bytes(self):
        v = np.ascontiguousarray(self.values, dtype="<f8")
        return b"".join([
            _HEADER.pack(BINARY_MAGIC, self.t.size, self.x.size),
            self.t.astype("<f8").tobytes(),
            self.x.astype("<f8").tobytes(),
            v.tobytes(),
        ])

    @classmethod
    def from_bytes(cls, blob):
        if len(blob) < _HEADER.size:
            raise PreconditionError("binary field too short for header")
        magic, nt, m = _HEADER.unpack_from(blob)
        if magic != BINARY_MAGIC:
            raise PreconditionError(f"bad magic {magic!r}")
        expected = _HEADER.size + 8 * (nt + m + nt * m)
        if len(blob) != expected:
            raise PreconditionError(f"binary field has {len(blob)} bytes, expected {expected}")
        arr = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
        return cls(arr[:nt].copy(), arr[nt : nt + m].copy(), arr[nt + m :].reshape(nt, m).copy())

    def to_binary(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

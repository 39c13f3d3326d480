"""Implicit L1 time stepping for distributed-order equations and the subordination route.

The discrete equation at ``t_n = n dt`` is

    sum_k C_k L1_k[u](t_n) + S_n (u_1 - u_0) = A_h u_n,

where ``L1_k`` is the L1 approximation of ``D^{beta_k}`` and ``S_n`` is a
starting correction that makes the left side exact on ``t**sigma`` with
``sigma = max beta_k``. Without it the scheme only reaches first order on
solutions behaving like ``u_0 + a t**beta`` near the origin.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import linalg, sparse, special
from scipy.sparse import linalg as splinalg

from .. import subordination
from ..errors import DomainError, PreconditionError, SolverError
from .calculus import DistributedOrder, l1_coefficients, starting_weights
from .field import FieldOnGrid
from .generators import GeneratorSpec

__all__ = [
    "solve_dode",
    "solve_relaxation",
    "subordination_solution",
    "semigroup_field",
    "history_weights",
    "MASS_DRIFT_WARN",
]

MASS_DRIFT_WARN = 1e-3


def history_weights(order, dt, n_steps, corrected=True):
    """Combined L1 weights ``W_j`` (``j < n_steps``) and starting weights ``S_n`` (``n <= n_steps``)."""
    w = np.zeros(n_steps)
    s = np.zeros(n_steps + 1)
    sigma = max(order.orders)
    for c, b in order.atoms:
        w += c * dt ** (-b) / special.gamma(2.0 - b) * l1_coefficients(b, n_steps)
        if corrected:
            s += c * starting_weights(b, dt, n_steps, sigma)
    return w, s


class _Solver:
    """Factorization of ``a I - A`` for a sparse or dense ``A``."""

    def __init__(self, a_mat, shift):
        m = a_mat.shape[0]
        if sparse.issparse(a_mat):
            mat = (shift * sparse.identity(m, format="csc") - a_mat).tocsc()
            try:
                self._lu = splinalg.splu(mat)
            except RuntimeError as exc:
                raise SolverError(f"sparse factorization failed: {exc}") from exc
            self._solve = self._lu.solve
        else:
            mat = shift * np.eye(m) - np.asarray(a_mat)
            with warnings.catch_warnings():
                warnings.simplefilter("error", linalg.LinAlgWarning)
                try:
                    lu = linalg.lu_factor(mat, check_finite=True)
                except (linalg.LinAlgError, linalg.LinAlgWarning, ValueError) as exc:
                    raise SolverError(f"dense factorization failed: {exc}") from exc
            self._solve = lambda rhs: linalg.lu_solve(lu, rhs)

    def __call__(self, rhs, step):
        out = self._solve(rhs)
        if not np.all(np.isfinite(out)):
            raise SolverError(f"non-finite solution at time step {step}")
        return out


def _l1_march(order, a_mat, u0, dt, n_steps, corrected=True):
    """March ``sum_k C_k D^{beta_k} u = A u`` from ``u0``; returns all time slices."""
    u0 = np.asarray(u0, dtype=float)
    m = u0.size
    w, s = history_weights(order, dt, n_steps, corrected)
    out = np.empty((n_steps + 1, m))
    out[0] = u0
    if n_steps == 0:
        return out
    inc = np.zeros((n_steps + 1, m))
    first = _Solver(a_mat, w[0] + s[1])
    out[1] = first((w[0] + s[1]) * u0, 1)
    inc[1] = out[1] - out[0]
    main = _Solver(a_mat, w[0]) if s[1] != 0 else first
    for n in range(2, n_steps + 1):
        # sum_{j=1}^{n-1} W_j (u_{n-j} - u_{n-j-1}) as one matrix-vector product.
        hist = w[n - 1 : 0 : -1] @ inc[1:n]
        rhs = w[0] * out[n - 1] - hist - s[n] * inc[1]
        out[n] = main(rhs, n)
        inc[n] = out[n] - out[n - 1]
    return out


def _check_time(dt, t_max):
    if not (dt > 0 and t_max > 0):
        raise DomainError("dt and t_max must be positive")
    n = int(round(t_max / dt))
    if n < 1 or abs(n * dt - t_max) > 1e-9 * t_max:
        raise PreconditionError(f"t_max/dt = {t_max / dt} must be a positive integer")
    return n


def solve_relaxation(order, lam, t_max, dt, u0=1.0, corrected=True):
    """Scalar problem ``sum_k C_k D^{beta_k} u = -lam u``, ``u(0) = u0``.

    Returns
    -------
    t, u : ndarray
    """
    if not lam >= 0:
        raise DomainError("lam must be nonnegative")
    n = _check_time(dt, t_max)
    u = _l1_march(order, np.array([[-float(lam)]]), np.array([float(u0)]), dt, n, corrected)
    return dt * np.arange(n + 1), u[:, 0]


def solve_dode(order, gen, phi, dx, dt, t_max, corrected=True, boundary_fraction=0.05):
    """Distributed-order time-fractional equation on a periodic grid.

    Solves ``sum_k C_k D^{beta_k} u = A_h u`` with ``u(0, .) = phi`` by the
    implicit (corrected) L1 scheme. ``A_h`` is the generator of ``gen`` in its
    declared form; forward drift-diffusion conserves discrete mass exactly.

    Parameters
    ----------
    order : DistributedOrder
    gen : GeneratorSpec
    phi : array_like
        Initial samples on ``gen.grid(dx)``.
    dx, dt, t_max : float
    corrected : bool
        Use the starting correction (recommended).
    boundary_fraction : float
        Width, as a fraction of ``2L``, of the edge strips whose mass at the
        final time is reported as ``boundary_mass``.

    Returns
    -------
    FieldOnGrid
        ``info`` holds ``mass_drift``, ``max_step_mass_change``,
        ``boundary_mass`` (forward form) and a list of ``warnings``.
    """
    if not isinstance(order, DistributedOrder):
        raise DomainError("order must be a DistributedOrder")
    x = gen.grid(dx)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != x.shape:
        raise PreconditionError(f"phi has shape {phi.shape}, grid has {x.shape}")
    n = _check_time(dt, t_max)
    u = _l1_march(order, gen.matrix(x), phi, dt, n, corrected)
    t = dt * np.arange(n + 1)
    info = {"warnings": [], "scheme": "corrected-L1" if corrected else "L1"}
    if gen.form == "forward":
        mass = u.sum(axis=1) * (x[1] - x[0])
        info["mass_drift"] = float(np.max(np.abs(mass - mass[0])))
        info["max_step_mass_change"] = float(np.max(np.abs(np.diff(mass)))) if n else 0.0
        k = max(1, int(boundary_fraction * x.size))
        info["boundary_mass"] = float((np.abs(u[-1, :k]).sum() + np.abs(u[-1, -k:]).sum()) * (x[1] - x[0]))
        if gen.killing is None and info["mass_drift"] > MASS_DRIFT_WARN:
            msg = f"mass drift {info['mass_drift']:.3g} exceeds {MASS_DRIFT_WARN}"
            info["warnings"].append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return FieldOnGrid(t, x, u, info)


def semigroup_field(gen, phi, dx, tau):
    """Classical semigroup ``exp(tau A_h) phi`` of the discretized generator at each ``tau``.

    Parameters
    ----------
    tau : array_like
        Nondecreasing, starting at or above 0.

    Returns
    -------
    ndarray, shape (len(tau), M)
    """
    x = gen.grid(dx)
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau[0] < 0 or np.any(np.diff(tau) < 0):
        raise DomainError("tau must be a nondecreasing nonnegative 1-D grid")
    a = gen.matrix(x)
    out = np.empty((tau.size, x.size))
    cur = np.asarray(phi, dtype=float)
    last = 0.0
    for i, s in enumerate(tau):
        if s > last:
            cur = splinalg.expm_multiply((s - last) * a, cur) if sparse.issparse(a) else linalg.expm((s - last) * a) @ cur
            last = s
        out[i] = cur
    return out


def subordination_solution(spec, p, tau, t, tol=1e-4, normalize=True):
    """``int_0^inf f_{E_t}(tau) p(tau, .) dtau`` by the trapezoid rule on ``tau``.

    Parameters
    ----------
    spec : MixtureSpec
        At most two distinct stable indices.
    p : array_like, shape (len(tau),) or (len(tau), M)
        Semigroup field on the ``tau`` grid.
    tau : array_like
        Increasing grid starting at 0; nonuniform spacing is allowed.
    t : float
    tol : float
        Largest admissible neglected mass ``P(E_t > tau[-1])``.
    normalize : bool
        Divide by the quadrature of ``f_{E_t}`` so constant fields are
        reproduced exactly.

    Returns
    -------
    ndarray
        Spatial samples (or a scalar for 1-D ``p``).
    """
    tau = np.asarray(tau, dtype=float)
    p = np.asarray(p, dtype=float)
    if tau.ndim != 1 or tau.size < 2 or tau[0] != 0 or np.any(np.diff(tau) <= 0):
        raise DomainError("tau must be increasing and start at 0")
    if p.shape[0] != tau.size:
        raise PreconditionError("p must have one row per tau node")
    if subordination.inverse_tail(spec, t, tau[-1]) > tol:
        need = subordination.required_horizon(spec, t, tol=tol)
        raise PreconditionError(f"tau grid ends at {tau[-1]}; the neglected mass exceeds {tol}, need tau_max >= {need}")
    f = np.asarray(subordination.inverse_density(spec, t, tau), dtype=float)
    h = np.diff(tau)
    w = np.zeros(tau.size)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    w = w * f
    if normalize:
        w = w / math.fsum(w)
    out = np.tensordot(w, p, axes=(0, 0))
    return float(out) if out.ndim == 0 else out

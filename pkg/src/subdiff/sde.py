"""Euler-Maruyama for Levy-driven SDEs and composition with an inverse subordinator.

The time-changed solution is never discretized directly. Each path ``Y`` is
simulated on the operational grid ``tau_j = j delta`` and then read off at the
grid index realizing ``E_t``:

    X_t = Y_{E_t},   E_t = delta * min{j : D_{j delta} > t}.

``Y`` and ``D`` draw from disjoint counter streams (labels ``"Y"`` and
``"D"``), which makes them independent by construction.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from . import subordination
from .errors import DomainError, PreconditionError, SimulationError
from .levy import LevyTriplet, sample_levy_increment
from .rng import CounterStream

__all__ = [
    "SDECoefficients",
    "TimeChangedPath",
    "TimeChangedEnsemble",
    "euler_maruyama",
    "time_change_path",
    "simulate_time_changed_sde",
    "feynman_kac_estimate",
    "Y_LABEL",
]

Y_LABEL = "Y"
DEFAULT_CHUNK = 8192


def _evaluate(f, y):
    if f is None:
        return None
    # Non-finite values are reported by the caller with the step index.
    with np.errstate(over="ignore", invalid="ignore"):
        return np.broadcast_to(np.asarray(f(y), dtype=float), np.shape(y))


@dataclass(frozen=True)
class SDECoefficients:
    """Autonomous coefficients of ``dY = b(Y) dtau + sigma(Y) dB + g(Y-) dL``.

    ``None`` stands for the zero function and lets the integrator skip the
    corresponding draws. Callables must accept and return numpy arrays.

    Parameters
    ----------
    b, sigma, g : callable or None
    lipschitz_bound : float, optional
        Claimed constant ``L`` with ``|b(x)-b(y)|**2 + |sigma(x)-sigma(y)|**2 <= L**2 |x-y|**2``.
    """

    b: Optional[Callable] = None
    sigma: Optional[Callable] = None
    g: Optional[Callable] = None
    lipschitz_bound: Optional[float] = None

    def __post_init__(self):
        if self.lipschitz_bound is not None and not self.lipschitz_bound > 0:
            raise DomainError("lipschitz_bound must be positive")

    @classmethod
    def polynomial(cls, b=(), sigma=(), g=(), lipschitz_bound=None):
        """Coefficients given as ascending polynomial coefficient lists; empty means zero."""

        def make(coef):
            coef = [float(c) for c in coef]
            if not any(coef):
                return None
            return Polynomial(coef)

        return cls(make(b), make(sigma), make(g), lipschitz_bound)

    def check_lipschitz(self, n_pairs=1000, scale=10.0, seed=0):
        """Spot-check the claimed Lipschitz bound on random pairs in ``[-scale, scale]``.

        Returns ``True`` when no bound is claimed.
        """
        if self.lipschitz_bound is None:
            return True
        s = CounterStream(seed, "lipschitz", path=np.arange(n_pairs))
        x = scale * (2 * s.uniform(0, 0) - 1)
        y = scale * (2 * s.uniform(0, 1) - 1)
        lhs = np.zeros(n_pairs)
        for f in (self.b, self.sigma):
            if f is not None:
                lhs += (_evaluate(f, x) - _evaluate(f, y)) ** 2
        return bool(np.all(lhs <= (1 + 1e-12) * self.lipschitz_bound**2 * (x - y) ** 2))


def _em_step(coeffs, triplet, y, delta, stream, counter):
    """One Euler step from ``y`` using draws at ``counter``; slot 0 is the Brownian part."""
    step = np.zeros_like(y)
    parts = []
    b = _evaluate(coeffs.b, y)
    if b is not None:
        parts.append(b)
        step = step + b * delta
    sig = _evaluate(coeffs.sigma, y)
    if sig is not None:
        parts.append(sig)
        step = step + sig * (math.sqrt(delta) * stream.normal(counter, 0))
    g = _evaluate(coeffs.g, y)
    if g is not None and (triplet.drift or triplet.sigma2 or triplet.jumps is not None):
        parts.append(g)
        step = step + g * sample_levy_increment(triplet, delta, stream, counter)
    for p in parts:
        if not np.all(np.isfinite(p)):
            raise SimulationError("non-finite coefficient value", step=int(counter))
    with np.errstate(over="ignore", invalid="ignore"):
        out = y + step
    if not np.all(np.isfinite(out)):
        raise SimulationError("non-finite state", step=int(counter))
    return out


def euler_maruyama(coeffs, triplet, x0, delta, n_steps, stream):
    """Euler-Maruyama path on the grid ``tau_j = j delta``, ``j = 0..n_steps``.

    Parameters
    ----------
    coeffs : SDECoefficients
    triplet : LevyTriplet
        Driver multiplying ``g``.
    x0 : float
    delta : float
    n_steps : int
    stream : CounterStream
        One key per path; step ``j`` consumes counter ``j``.

    Returns
    -------
    ndarray, shape ``(n_steps + 1,) + stream.shape``
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    if n_steps < 0:
        raise DomainError("n_steps must be nonnegative")
    triplet = triplet if triplet is not None else LevyTriplet()
    out = np.empty((n_steps + 1,) + stream.shape)
    y = np.full(stream.shape, float(x0))
    out[0] = y
    for j in range(n_steps):
        y = _em_step(coeffs, triplet, y, delta, stream, np.uint64(j))
        out[j + 1] = y
    return out


@dataclass
class TimeChangedPath:
    """``X_{t_i} = Y_{index[i]}``: a path composed with the inverse subordinator.

    Attributes
    ----------
    t : ndarray
        Physical times.
    x : ndarray
        Values of ``X`` at ``t``.
    index : ndarray of int
        Operational grid index realizing ``E_{t_i} = delta * index[i]``.
    delta : float
    y, d : ndarray, optional
        Underlying operational path and subordinator values on the same grid.
    """

    t: np.ndarray
    x: np.ndarray
    index: np.ndarray
    delta: float
    y: Optional[np.ndarray] = field(default=None, repr=False)
    d: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def e(self):
        """Inverse subordinator values ``E_{t_i}``."""
        return self.delta * self.index

    def check_invariants(self):
        """Composition consistency and monotone index; raises ``AssertionError`` if broken."""
        assert np.all(np.diff(self.index) >= 0)
        if self.y is not None:
            assert np.array_equal(self.x, self.y[self.index])
        if self.d is not None:
            # index realizes min{j : D_j > t}.
            assert np.all(self.d[self.index] > self.t)
            assert np.all(self.d[self.index - 1] <= self.t)
        return True


def time_change_path(y, d, t_grid):
    """Compose an operational path with an inverse subordinator.

    Parameters
    ----------
    y : array_like
        ``Y_j`` on the grid of ``d``.
    d : SubordinatorPath
    t_grid : array_like
        Physical times, all below ``d.horizon``.

    Returns
    -------
    TimeChangedPath
    """
    y = np.asarray(y, dtype=float)
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if y.ndim != 1:
        raise DomainError("y must be one-dimensional")
    if t.size and t.max() >= d.horizon:
        raise PreconditionError(f"subordinator path reaches only t={d.horizon}, need t > {t.max()}")
    index = np.searchsorted(d.values, t, side="right")
    if index.size and index.max() >= y.size:
        raise PreconditionError(f"operational path has {y.size} points, need {index.max() + 1}")
    return TimeChangedPath(t=t, x=y[index], index=index, delta=d.delta, y=y, d=d.values)


@dataclass
class TimeChangedEnsemble:
    """Many time-changed paths on a shared physical grid.

    ``x[p, i]`` and ``index[p, i]`` refer to path ``paths[p]`` at ``t[i]``.
    ``killing[p, i]`` holds the left-endpoint sum ``delta * sum_{j < index} q(Y_j)``
    when a killing rate was supplied.
    """

    t: np.ndarray
    x: np.ndarray
    index: np.ndarray
    delta: float
    seed: int
    paths: np.ndarray
    killing: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_paths(self):
        return self.x.shape[0]

    @property
    def e(self):
        return self.delta * self.index

    def path(self, p):
        return TimeChangedPath(t=self.t, x=self.x[p], index=self.index[p], delta=self.delta)

    def mean(self, phi=None, i=-1):
        """Compensated ensemble mean of ``phi(X_{t_i})`` (identity when ``phi`` is None)."""
        v = self.x[:, i] if phi is None else _evaluate(phi, self.x[:, i])
        return math.fsum(v) / v.size


# ---------------------------------------------------------------------------
# Ensemble simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Job:
    coeffs: SDECoefficients
    triplet: LevyTriplet
    spec: Optional[subordination.MixtureSpec]
    x0: float
    t: np.ndarray
    delta: float
    seed: int
    q: Optional[Callable]
    max_steps: int


def _identity_indices(t, delta, n):
    # D_j = j delta exactly: min{j : j delta > t}.
    j = np.floor(t / delta).astype(np.int64) + 1
    return np.broadcast_to(j, (n, t.size)).copy()


def _march(job, paths):
    """Simulate the paths ``paths`` and record ``Y`` at the first-passage indices."""
    n, nt = paths.size, job.t.size
    if job.spec is None:
        J = _identity_indices(job.t, job.delta, n)
    else:
        J = subordination.first_passage_indices(job.spec, job.delta, job.t, job.seed, paths, job.max_steps)
    stream = CounterStream(job.seed, Y_LABEL, path=paths)
    y = np.full(n, float(job.x0))
    X = np.empty((n, nt))
    K = np.zeros((n, nt)) if job.q is not None else None
    acc = np.zeros(n)
    ptr = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    j = 0
    while active.size:
        # Record every t_i whose first-passage index equals j (J is nondecreasing along rows).
        cand = active
        while cand.size:
            hit = J[cand, ptr[cand]] == j
            cand = cand[hit]
            if not cand.size:
                break
            X[cand, ptr[cand]] = y[cand]
            if K is not None:
                K[cand, ptr[cand]] = acc[cand]
            ptr[cand] += 1
            cand = cand[ptr[cand] < nt]
        active = active[ptr[active] < nt]
        if not active.size:
            break
        if job.q is not None:
            qv = _evaluate(job.q, y[active])
            if np.any(qv < 0) or not np.all(np.isfinite(qv)):
                raise SimulationError("killing rate must be finite and nonnegative", step=j)
            acc[active] += qv * job.delta
        y[active] = _em_step(job.coeffs, job.triplet, y[active], job.delta, stream.subset(active), np.uint64(j))
        j += 1
    return J, X, K


_ACTIVE_JOB = None


def _run_chunk(bounds):
    lo, hi = bounds
    return _march(_ACTIVE_JOB, np.arange(lo, hi, dtype=np.int64))


def _resolve_workers(workers):
    if workers is None:
        workers = int(os.environ.get("SUBDIFF_WORKERS", "1"))
    if workers < 1:
        raise DomainError("workers must be at least 1")
    return workers


def _simulate(job, n_paths, first_path, workers, chunk):
    global _ACTIVE_JOB
    bounds = [(lo, min(lo + chunk, first_path + n_paths)) for lo in range(first_path, first_path + n_paths, chunk)]
    workers = _resolve_workers(workers)
    if workers > 1 and len(bounds) > 1 and "fork" in multiprocessing.get_all_start_methods():
        # Forked workers inherit the job, so coefficient callables need not be picklable.
        _ACTIVE_JOB = job
        try:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=min(workers, len(bounds)), mp_context=ctx) as pool:
                parts = list(pool.map(_run_chunk, bounds))
        finally:
            _ACTIVE_JOB = None
    else:
        parts = [_march(job, np.arange(lo, hi, dtype=np.int64)) for lo, hi in bounds]
    J = np.concatenate([p[0] for p in parts])
    X = np.concatenate([p[1] for p in parts])
    K = np.concatenate([p[2] for p in parts]) if job.q is not None else None
    return J, X, K


def simulate_time_changed_sde(
    coeffs,
    triplet,
    spec,
    x0,
    t_grid,
    n_paths,
    seed,
    delta=1e-3,
    workers=1,
    first_path=0,
    chunk=DEFAULT_CHUNK,
    max_steps=subordination.DEFAULT_MAX_STEPS,
    q=None,
    y_label=Y_LABEL,
):
    """Ensemble of ``X_t = Y_{E_t}`` on ``t_grid``.

    Parameters
    ----------
    coeffs : SDECoefficients
    triplet : LevyTriplet or None
        Driver of the ``g`` term; ``None`` means no driver.
    spec : MixtureSpec or "identity"
        Subordinator mixture. The string ``"identity"`` substitutes
        ``D_tau = tau`` (a test hook giving back the plain Euler path).
    x0 : float
    t_grid : array_like
        Nondecreasing, nonnegative physical times.
    n_paths : int
    seed : int
    delta : float
        Operational step.
    workers : int or None
        Worker processes; ``None`` reads ``SUBDIFF_WORKERS``. Results do not
        depend on this value.
    first_path : int
        Index of the first path, for splitting an ensemble across calls.
    chunk : int
        Paths per work unit.
    q : callable, optional
        Killing rate; its integral along ``Y`` up to ``E_t`` is stored in
        ``killing``.
    y_label : str
        Stream label for ``Y``; must differ from the subordinator label.

    Returns
    -------
    TimeChangedEnsemble
    """
    if n_paths < 1:
        raise DomainError("n_paths must be at least 1")
    if not delta > 0:
        raise DomainError("delta must be positive")
    if y_label == subordination.STREAM_LABEL:
        raise PreconditionError("Y and D would share a random stream; independence requires distinct labels")
    if y_label != Y_LABEL:
        raise PreconditionError(f"only the stream label {Y_LABEL!r} is supported for Y")
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise DomainError("t_grid must be nonnegative and nondecreasing")
    if isinstance(spec, str):
        if spec != "identity":
            raise DomainError(f"unknown time change {spec!r}")
        spec = None
    job = _Job(coeffs, triplet if triplet is not None else LevyTriplet(), spec, float(x0), t, float(delta), int(seed), q, int(max_steps))
    J, X, K = _simulate(job, int(n_paths), int(first_path), workers, int(chunk))
    return TimeChangedEnsemble(
        t=t, x=X, index=J, delta=float(delta), seed=int(seed),
        paths=np.arange(first_path, first_path + n_paths), killing=K,
    )


def feynman_kac_estimate(coeffs, triplet, spec, q, phi, x0, t, n_paths, seed, delta=1e-3, workers=1, **kwargs):
    """Monte Carlo estimate of ``E[exp(-int_0^{E_t} q(Y_s) ds) phi(Y_{E_t})]``.

    The integral is the left-endpoint sum over operational steps ``j < E_t / delta``.

    Returns
    -------
    estimate, std_error : float or ndarray
        Arrays when ``t`` is an array.
    """
    scalar = np.ndim(t) == 0
    ens = simulate_time_changed_sde(coeffs, triplet, spec, x0, t, n_paths, seed, delta=delta, workers=workers, q=q, **kwargs)
    est, se = [], []
    for i in range(ens.t.size):
        kill = ens.killing[:, i] if ens.killing is not None else 0.0
        v = np.exp(-kill) * _evaluate(phi, ens.x[:, i])
        m = math.fsum(v) / v.size
        var = math.fsum((v - m) ** 2) / max(v.size - 1, 1)
        est.append(m)
        se.append(math.sqrt(var / v.size))
    if scalar:
        return est[0], se[0]
    return np.array(est), np.array(se)

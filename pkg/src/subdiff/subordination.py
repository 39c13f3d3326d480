"""Stable subordinator mixtures ``D_t = sum_k c_k D_{k,t}`` and their inverses.

The inverse (first hitting time) process is ``E_t = inf{tau >= 0 : D_tau > t}``.
On an operational grid of spacing ``delta`` it is rendered as
``delta * min{j : D_{j delta} > t}``, which overshoots by at most ``delta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import specfun
from .errors import DomainError, PreconditionError, ResourceError, UnsupportedError
from .rng import CounterStream

__all__ = [
    "MixtureSpec",
    "SubordinatorPath",
    "kanter_transform",
    "sample_stable_increment",
    "sample_mixture_increment",
    "sample_mixture_path",
    "inverse_process",
    "inverse_cdf",
    "inverse_density",
    "inverse_density_at_zero",
    "inverse_tail",
    "inverse_mean",
    "inverse_laplace",
    "mixture_laplace_exponent",
    "first_passage_indices",
    "sample_inverse_ensemble",
    "DEFAULT_MAX_STEPS",
]

DEFAULT_MAX_STEPS = 10**8
# Stream label for subordinator increments; other consumers must use a different one.
STREAM_LABEL = "D"


@dataclass(frozen=True)
class MixtureSpec:
    """Weighted sum of independent standard stable subordinators.

    Parameters
    ----------
    atoms : sequence of (c_k, beta_k)
        Positive scales and stable indices in ``(0, 1)``. Repeated indices are
        kept as separate, independent components.
    """

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(c), float(b)) for c, b in self.atoms)
        if not atoms:
            raise DomainError("MixtureSpec needs at least one atom")
        for c, b in atoms:
            if not c > 0:
                raise DomainError(f"mixture scale c={c} must be positive")
            if not 0 < b < 1:
                raise DomainError(f"mixture index beta={b} must lie in (0, 1)")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def single(cls, beta, c=1.0):
        return cls(((c, beta),))

    @property
    def n(self):
        return len(self.atoms)

    @property
    def scales(self):
        return np.array([c for c, _ in self.atoms])

    @property
    def betas(self):
        return np.array([b for _, b in self.atoms])

    def order_measure(self):
        """Atoms ``(C, beta)`` of the induced order measure, ``C = c**beta``.

        Equal indices are merged by summing their weights; the result is sorted
        by index.
        """
        merged = {}
        for c, b in self.atoms:
            merged[b] = merged.get(b, 0.0) + c**b
        return tuple((merged[b], b) for b in sorted(merged))

    def eta(self, s):
        """``sum_k c_k**beta_k * s**beta_k`` for real or complex ``s``."""
        s = np.asarray(s)
        return sum(c**b * s**b for c, b in self.atoms)


@dataclass(frozen=True)
class SubordinatorPath:
    """Subordinator sampled on the operational grid ``0, delta, 2 delta, ...``.

    ``values[j]`` is the physical time ``D_{j delta}``; ``values[0] == 0``.
    """

    delta: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not self.delta > 0:
            raise DomainError("SubordinatorPath.delta must be positive")
        if v.ndim != 1 or v.size < 1 or v[0] != 0.0:
            raise DomainError("SubordinatorPath values must be 1-D and start at 0")
        if v.size > 1 and not np.all(np.diff(v) > 0):
            raise DomainError("SubordinatorPath values must be strictly increasing")
        object.__setattr__(self, "values", v)

    @property
    def tau(self):
        return self.delta * np.arange(self.values.size)

    @property
    def horizon(self):
        """Largest physical time covered, ``D`` at the last grid point."""
        return float(self.values[-1])


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def kanter_transform(beta, u, w):
    """Kanter's map from ``U ~ Uniform(0, 1)``, ``W ~ Exp(1)`` to the standard stable law.

    Returns ``(A(pi U) / W) ** ((1 - beta) / beta)`` whose Laplace transform is
    ``exp(-s**beta)``.
    """
    theta = np.pi * np.asarray(u)
    a = specfun._zolotarev_a(theta, beta)
    with np.errstate(over="ignore"):
        return (a / w) ** ((1.0 - beta) / beta)


def sample_stable_increment(beta, delta, stream, counter):
    """Increment ``D_{t + delta} - D_t`` of a standard ``beta``-stable subordinator.

    Self-similarity gives ``delta**(1/beta) * S`` with ``S ~ D_1``. Slots 0 and
    1 of ``stream`` at ``counter`` feed the uniform and the exponential.
    """
    if not 0 < beta < 1:
        raise DomainError(f"beta={beta} must lie in (0, 1)")
    if not delta > 0:
        raise DomainError("delta must be positive")
    s = kanter_transform(beta, stream.uniform(counter, 0), stream.exponential(counter, 1))
    return delta ** (1.0 / beta) * s


def _component_streams(spec, seed, paths):
    return [CounterStream(seed, STREAM_LABEL, path=paths, component=k) for k in range(spec.n)]


def sample_mixture_increment(spec, delta, streams, counter):
    """Increment of ``sum_k c_k D_k`` over ``delta``; one stream per component."""
    total = 0.0
    for (c, b), s in zip(spec.atoms, streams):
        total = total + c * sample_stable_increment(b, delta, s, counter)
    return total


def sample_mixture_path(spec, delta, t_max, seed, path=0, max_steps=DEFAULT_MAX_STEPS, block=4096):
    """Sample one subordinator path until it first exceeds ``t_max``.

    The path ends at the first grid index ``j`` with ``D_{j delta} > t_max``.
    Components use mutually independent streams keyed by
    ``(seed, "D", path, k)``, so the path is a deterministic function of
    ``(spec, delta, seed, path)``.
    """
    if not (delta > 0 and t_max > 0):
        raise DomainError("delta and t_max must be positive")
    streams = _component_streams(spec, seed, np.int64(path))
    chunks = [np.zeros(1)]
    level = 0.0
    start = 0
    while level <= t_max:
        if start >= max_steps:
            raise ResourceError(f"subordinator path exceeded max_steps={max_steps} before reaching t={t_max}")
        counters = np.arange(start, min(start + block, max_steps), dtype=np.uint64)
        inc = sample_mixture_increment(spec, delta, streams, counters)
        # Sequential accumulation from the running level, matching the ensemble sampler.
        vals = np.cumsum(np.concatenate([[level], inc]))[1:]
        hit = np.flatnonzero(vals > t_max)
        if hit.size:
            vals = vals[: hit[0] + 1]
        chunks.append(vals)
        level = float(vals[-1])
        start += counters.size
    return SubordinatorPath(delta, np.concatenate(chunks))


def inverse_process(path, t):
    """First-passage inverse ``E_t`` read off a sampled path.

    Returns ``delta * min{j : D_{j delta} > t}``. Accepts scalar or array
    ``t``; raises :class:`PreconditionError` if the path does not reach past
    ``max(t)``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("inverse_process requires t >= 0")
    idx = np.searchsorted(path.values, t_arr, side="right")
    if np.any(idx >= path.values.size):
        raise PreconditionError(
            f"path horizon {path.horizon:.6g} does not exceed t={float(np.max(t_arr)):.6g}; "
            "extend the path until D > max(t)"
        )
    out = path.delta * idx
    return float(out) if out.ndim == 0 else out


def first_passage_indices(spec, delta, t_grid, seed, paths, max_steps=DEFAULT_MAX_STEPS):
    """Grid indices ``J[p, i] = min{j : D^{(p)}_{j delta} > t_i}`` for many paths at once.

    Parameters
    ----------
    t_grid : array_like
        Nondecreasing physical times.
    paths : array_like of int
        Path indices; row ``p`` of the result uses streams keyed by ``paths[p]``.

    Returns
    -------
    ndarray of int64, shape (len(paths), len(t_grid))
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0):
        raise DomainError("t_grid must be nondecreasing")
    paths = np.atleast_1d(np.asarray(paths, dtype=np.int64))
    n, nt = paths.size, t_grid.size
    streams = _component_streams(spec, seed, paths)
    level = np.zeros(n)
    crossed = np.searchsorted(t_grid, level, side="left")  # t_i < D counts
    J = np.zeros((n, nt), dtype=np.int64)
    # Entries with t_i < 0 are crossed at j = 0 already.
    active = np.flatnonzero(crossed < nt)
    j = 0
    while active.size:
        j += 1
        if j > max_steps:
            raise ResourceError(f"subordinator ensemble exceeded max_steps={max_steps}")
        sub = [s.subset(active) for s in streams]
        level[active] += sample_mixture_increment(spec, delta, sub, np.uint64(j - 1))
        new = np.searchsorted(t_grid, level[active], side="left")
        old = crossed[active]
        moved = new > old
        if moved.any():
            rows = active[moved]
            lo, hi = old[moved], new[moved]
            counts = hi - lo
            r = np.repeat(rows, counts)
            offsets = np.repeat(np.cumsum(counts) - counts, counts)
            cols = np.arange(counts.sum()) - offsets + np.repeat(lo, counts)
            J[r, cols] = j
            crossed[rows] = hi
            active = active[crossed[active] < nt]
    return J


def sample_inverse_ensemble(spec, t, delta, n_paths, seed, first_path=0, max_steps=DEFAULT_MAX_STEPS):
    """Monte Carlo draws of ``E_t`` (grid rendering) for ``n_paths`` independent paths."""
    paths = np.arange(first_path, first_path + n_paths)
    J = first_passage_indices(spec, delta, [float(t)], seed, paths, max_steps)
    return delta * J[:, 0]


# ---------------------------------------------------------------------------
# Analytic side: Laplace exponent and inverse-process density
# ---------------------------------------------------------------------------


def mixture_laplace_exponent(spec, s):
    """``ln E[exp(-s D_1)] = -sum_k c_k**beta_k s**beta_k``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise DomainError("mixture_laplace_exponent requires s >= 0")
    out = -spec.eta(s_arr)
    return float(out) if np.ndim(out) == 0 else out


def _check_two(spec):
    """Merge repeated indices (same law of ``D``) and require at most two components."""
    spec = MixtureSpec(tuple((C ** (1.0 / b), b) for C, b in spec.order_measure()))
    if spec.n > 2:
        raise UnsupportedError(
            "closed-form inverse density is implemented for at most two components; "
            "use Monte Carlo (sample_inverse_ensemble) for larger mixtures"
        )
    return spec


def _lower_cutoff(beta, log_eps=32.0):
    """Point below which the standard stable CDF is below exp(-log_eps)."""
    return beta * (log_eps / (1.0 - beta)) ** (-(1.0 - beta) / beta)


@np.errstate(divide="ignore", invalid="ignore")
def _log_gauss_segment(lo, hi, n_panels=24, order=12):
    """Composite Gauss-Legendre nodes/weights for ``int_lo^hi f(x) dx`` in log(x)."""
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(np.log(lo), np.log(hi), n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    v = ((b - a) / 2 * g + (b + a) / 2).ravel()
    wv = ((b - a) / 2 * w).ravel()
    x = np.exp(v)
    return x, wv * x


def _two_component_cdf(b1, a, b2, b, t):
    """``P(a S1 + b S2 <= t)`` for independent standard stable ``S1, S2``."""
    s_hi = t / b
    s_lo = _lower_cutoff(b2)
    if s_hi <= s_lo:
        return 0.0
    mid = max(s_lo, 0.5 * s_hi)
    total = 0.0
    if mid > s_lo:
        s, ws = _log_gauss_segment(s_lo, mid)
        total += np.dot(specfun.stable_cdf_grid(b1, (t - b * s) / a) * specfun.stable_density_grid(b2, s), ws)
    r_lo = a * _lower_cutoff(b1) / b
    r_hi = s_hi - mid
    if r_hi > r_lo:
        r, wr = _log_gauss_segment(r_lo, r_hi)
        total += np.dot(specfun.stable_cdf_grid(b1, b * r / a) * specfun.stable_density_grid(b2, s_hi - r), wr)
    return float(min(max(total, 0.0), 1.0))


def _survival_of_inverse(spec, t, tau):
    """``P(E_t > tau) = P(D_tau <= t)`` for scalar ``tau > 0``."""
    if spec.n == 1:
        (c, b), = spec.atoms
        return float(specfun.stable_cdf(b, t / (c * tau ** (1.0 / b))))
    (c1, b1), (c2, b2) = spec.atoms
    return _two_component_cdf(b1, c1 * tau ** (1.0 / b1), b2, c2 * tau ** (1.0 / b2), t)


def inverse_cdf(spec, t, tau):
    """``P(E_t <= tau)`` for mixtures of at most two components."""
    spec = _check_two(spec)
    if not t > 0:
        raise DomainError("inverse_cdf requires t > 0")

    def one(x):
        if x < 0:
            raise DomainError("inverse_cdf requires tau >= 0")
        return 0.0 if x == 0 else 1.0 - _survival_of_inverse(spec, t, x)

    return specfun._vectorize(one, tau)


def inverse_density_at_zero(spec, t):
    """Limit ``f_{E_t}(0+) = sum_k C_k t**(-beta_k) / Gamma(1 - beta_k)``."""
    return float(sum(C * t ** (-b) / special.gamma(1.0 - b) for C, b in spec.order_measure()))


def inverse_density(spec, t, tau, rel_step=2.0**-6):
    """Density ``f_{E_t}(tau)`` of the inverse of a one- or two-component mixture.

    For one component the derivative of ``P(E_t <= tau) = 1 - F(t / (c tau**(1/beta)))``
    is taken analytically. For two components the convolution of the rescaled
    component laws is evaluated by quadrature and differentiated in ``tau``
    with a five-point central stencil of step ``rel_step * tau``. ``tau = 0`` returns the
    right limit.
    """
    spec = _check_two(spec)
    if not t > 0:
        raise DomainError("inverse_density requires t > 0")

    if spec.n == 1:
        (c, b), = spec.atoms

        def one(x):
            if x < 0:
                raise DomainError("inverse_density requires tau >= 0")
            if x == 0:
                return inverse_density_at_zero(spec, t)
            z = t / (c * x ** (1.0 / b))
            return float(specfun.stable_density(b, z)) * z / (b * x)

    else:

        def one(x):
            if x < 0:
                raise DomainError("inverse_density requires tau >= 0")
            if x == 0:
                return inverse_density_at_zero(spec, t)
            h = rel_step * x
            g = [_survival_of_inverse(spec, t, x + k * h) for k in (-2, -1, 1, 2)]
            # Five-point central stencil for -dG/dtau.
            return max((g[0] - 8.0 * g[1] + 8.0 * g[2] - g[3]) / (-12.0 * h), 0.0)

    return specfun._vectorize(one, tau)


def inverse_tail(spec, t, tau):
    """``P(E_t > tau)``, the mass a truncated ``tau``-integral misses."""
    spec = _check_two(spec)
    return _survival_of_inverse(spec, t, float(tau))


def inverse_mean(spec, t):
    """``E[E_t]``; closed form for one index, fixed-Talbot inversion of ``1/(s eta(s))`` otherwise."""
    if spec.n == 1:
        (c, b), = spec.atoms
        return t**b / (c**b * special.gamma(1.0 + b))
    return specfun.talbot_inversion(lambda s: 1.0 / (s * spec.eta(s)), t)


def inverse_laplace(spec, lam, t):
    """``E[exp(-lam E_t)]``; equals ``E_beta(-lam t**beta / c**beta)`` for one index.

    General mixtures invert ``eta(s) / (s (eta(s) + lam))`` numerically.
    """
    if lam < 0:
        raise DomainError("inverse_laplace requires lam >= 0")
    if spec.n == 1:
        (c, b), = spec.atoms
        return float(specfun.mittag_leffler(b, -lam * t**b / c**b))
    return specfun.talbot_inversion(lambda s: spec.eta(s) / (s * (spec.eta(s) + lam)), t)


def _density_from_laplace(spec, t, tau):
    """Independent route to ``f_{E_t}(tau)``: invert ``(eta(s)/s) exp(-tau eta(s))`` in ``t``."""
    return specfun.talbot_inversion(lambda s: spec.eta(s) / s * np.exp(-tau * spec.eta(s)), t)


def required_horizon(spec, t, tol=1e-4, start=1.0):
    """Smallest power-of-two multiple of ``start`` with ``P(E_t > tau) <= tol``."""
    tau = float(start)
    while inverse_tail(spec, t, tau) > tol:
        tau *= 2.0
        if tau > 1e8:
            raise PreconditionError("could not find a finite truncation horizon")
    return tau


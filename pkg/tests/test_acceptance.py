"""Acceptance suite: one test per criterion at the stated sample sizes and tolerances.

Each test prints a single ``CRITERION n PASS|FAIL`` line with the measured
values; run with ``pytest -s tests/test_acceptance.py`` to see them.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate, special

from subdiff import specfun
from subdiff import subordination as sb
from subdiff.fracpde import DistributedOrder, solve_relaxation
from subdiff.harness import parse_config, run_experiment
from subdiff.levy import LevyTriplet
from subdiff.rng import CounterStream
from subdiff.sde import SDECoefficients, euler_maruyama, time_change_path

N = 100000


def report(n, ok, detail):
    print(f"\nCRITERION {n} {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def mean_se(v):
    v = np.asarray(v, dtype=float)
    return math.fsum(v) / v.size, v.std(ddof=1) / math.sqrt(v.size)


def test_criterion_01_subordinator_laplace():
    start = time.perf_counter()
    rows, ok = [], True
    for i, beta in enumerate((0.3, 0.5, 0.7)):
        d1 = sb.sample_stable_increment(beta, 1.0, CounterStream(101 + i, "D", path=np.arange(N)), 0)
        for s in (0.5, 1.0, 2.0):
            m, se = mean_se(np.exp(-s * d1))
            good = abs(m - math.exp(-(s**beta))) <= 3 * se
            ok &= good
            rows.append(f"b={beta} s={s}: {abs(m - math.exp(-s**beta)) / se:.2f}se")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5
    assert report(1, ok, f"{'; '.join(rows)}; {elapsed:.1f}s")


def test_criterion_02_mixture_exponent():
    start = time.perf_counter()
    ok, rows = True, []
    for atoms in (((1.0, 0.4), (1.0, 0.8)), ((2.0, 0.5), (1.0, 0.5))):
        spec = sb.MixtureSpec(atoms)
        streams = sb._component_streams(spec, 202, np.arange(N))
        d1 = sb.sample_mixture_increment(spec, 1.0, streams, np.uint64(0))
        m, se = mean_se(np.exp(-d1))
        log_m, log_se = math.log(m), se / m
        exact = -sum(c**b for c, b in atoms)
        good = abs(log_m - exact) <= 3 * log_se
        ok &= good
        rows.append(f"{atoms}: {log_m:.5f} vs {exact:.5f} (se {log_se:.2g})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10
    assert report(2, ok, f"{'; '.join(rows)}; {elapsed:.1f}s")


def test_criterion_03_inverse_moments(tmp_path):
    start = time.perf_counter()
    ok, rows = True, []
    for beta in (0.5, 0.8):
        cfg = parse_config({"kind": "inverse-moments", "mixture": [[1.0, beta]], "n_paths": N, "seed": 303,
                            "grids": {"delta": 1e-3}, "params": {"lam": 1.0}})
        rep = run_experiment(cfg, out_dir=str(tmp_path / str(beta)))
        mean, lap = rep.checks
        assert mean.reference == pytest.approx(1 / special.gamma(1 + beta), rel=1e-12)
        assert lap.reference == pytest.approx(float(specfun.mittag_leffler(beta, -1.0)), rel=1e-12)
        assert lap.tolerance == pytest.approx(3 * lap.std_error)
        ok &= rep.passed
        rows.append(f"b={beta}: E[E1]={mean.value:.5f}/{mean.reference:.5f} E[e^-E1]={lap.value:.5f}/{lap.reference:.5f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    assert report(3, ok, f"{'; '.join(rows)}; {elapsed:.1f}s")


def test_criterion_04_inverse_density_and_tail():
    spec = sb.MixtureSpec.single(0.5)
    tau = np.linspace(0.01, 4, 2000)
    err = np.max(np.abs(sb.inverse_density(spec, 1.0, tau) - np.exp(-tau**2 / 4) / math.sqrt(math.pi)))
    f = lambda x: sb.inverse_density(spec, 1.0, x)
    total = integrate.quad(f, 0, 4)[0] + integrate.quad(f, 4, 40)[0]
    # Tail: fit log f = log C - k tau^(1/(1-beta)) on [4, 6] and check the bound holds there.
    tt = np.linspace(4, 6, 41)
    logf = np.log(f(tt))
    slope, _ = np.polyfit(tt**2, logf, 1)
    k = -slope
    log_c = np.max(logf + k * tt**2)
    bound_ok = k > 0 and bool(np.all(logf <= log_c - k * tt**2 + 1e-12))
    ok = err <= 1e-3 and abs(total - 1) <= 1e-3 and bound_ok
    assert report(4, ok, f"max err {err:.2e}; mass {total:.8f}; tail k={k:.6f} C={math.exp(log_c):.6f}")


def test_criterion_05_duality():
    delta, t_max = 1e-3, 1.0
    spec = sb.MixtureSpec.single(0.5)
    coeffs = SDECoefficients(sigma=lambda y: np.ones_like(y))
    n_round, n_const = 0, 0
    ok = True
    for p in range(1000):
        d = sb.sample_mixture_path(spec, delta, t_max, seed=505, path=p)
        y = euler_maruyama(coeffs, LevyTriplet(), 0.0, delta, d.values.size - 1, CounterStream(505, "Y", path=np.array([p])))[:, 0]
        j = np.arange(d.values.size - 1)
        j = j[d.values[j] < t_max]
        # X at t = D_j sits one operational step past tau_j.
        x = time_change_path(y, d, d.values[j])
        ok &= bool(np.all(np.abs(x.index - j) <= 1)) and bool(np.array_equal(x.x, y[x.index]))
        n_round += j.size
        # Inside each jump (D_j, D_{j+1}) the time-changed path stays at Y_{j+1}.
        lo, hi = d.values[j], d.values[j + 1]
        inner = np.stack([lo + (hi - lo) * f for f in (0.25, 0.5, 0.75)], axis=1)
        keep = inner[:, -1] < d.horizon
        xin = time_change_path(y, d, inner[keep].ravel()).x.reshape(-1, 3)
        ok &= bool(np.all(xin == y[j[keep] + 1][:, None]))
        n_const += int(keep.sum())
    assert report(5, ok, f"1000 paths; {n_round} round trips; {n_const} jump intervals")


def test_criterion_06_single_atom_correspondence(tmp_path):
    start = time.perf_counter()
    cfg = parse_config({"kind": "mc-vs-pde", "mixture": [[1.0, 0.5]], "coefficients": {"preset": "brownian"},
                        "grids": {"delta": 1e-3, "dt": 1e-3, "dx": 0.02, "L": 8.0, "t_max": 1.0},
                        "n_paths": N, "seed": 606, "params": {"ks_tol": 0.02, "triangle": True, "triangle_tol": 5e-3}})
    rep = run_experiment(cfg, out_dir=str(tmp_path))
    elapsed = time.perf_counter() - start
    ks, tri = rep.checks
    ok = rep.passed and elapsed < 300
    assert report(6, ok, f"KS {ks.value:.5f} <= 0.02; triangle L2 {tri.value:.2e} <= 5e-3; {elapsed:.1f}s")


def test_criterion_07_distributed_order_correspondence(tmp_path):
    start = time.perf_counter()
    cfg = parse_config({"kind": "dode-two-atom", "mixture": [[1.0, 0.4], [1.0, 0.8]], "order": [[1.0, 0.4], [1.0, 0.8]],
                        "coefficients": {"preset": "brownian"}, "n_paths": N, "seed": 707})
    rep = run_experiment(cfg, out_dir=str(tmp_path))
    elapsed = time.perf_counter() - start
    ks, = rep.checks
    ok = rep.passed and ks.tolerance == 0.03 and elapsed < 480
    assert report(7, ok, f"KS {ks.value:.5f} <= 0.03; {elapsed:.1f}s")


def test_criterion_08_fractional_laplacian(tmp_path):
    start = time.perf_counter()
    cfg = parse_config({"kind": "stable-driver", "mixture": [[1.0, 0.5]],
                        "triplet": {"jumps": {"type": "symmetric_stable", "alpha": 1.5}},
                        "coefficients": {"preset": "levy-driven"},
                        "grids": {"L": 8 * math.pi, "dx": 0.05, "dt": 1e-3, "delta": 1e-3},
                        "n_paths": N, "seed": 808, "params": {"xi_values": [0.5, 1.0, 2.0], "abs_tol": 5e-3}})
    rep = run_experiment(cfg, out_dir=str(tmp_path))
    elapsed = time.perf_counter() - start
    for c in rep.checks:
        if "mittag" in c.name:
            xi = float(c.name.split("=")[1].rstrip("]"))
            assert c.reference == pytest.approx(float(specfun.mittag_leffler(0.5, -(xi**1.5))), rel=1e-12)
    ok = rep.passed and len(rep.checks) == 6 and elapsed < 300
    detail = "; ".join(f"{c.name} {c.value:.5f}/{c.reference:.5f} tol {c.tolerance:.4f}" for c in rep.checks)
    assert report(8, ok, f"{detail}; {elapsed:.1f}s")


def test_criterion_09_feynman_kac(tmp_path):
    start = time.perf_counter()
    cfg = parse_config({"kind": "feynman-kac", "mixture": [[1.0, 0.5]], "coefficients": {"preset": "brownian"},
                        "n_paths": N, "seed": 909, "params": {"q": 1.0, "phi": 1.0, "t_values": [1.0, 4.0]}})
    rep = run_experiment(cfg, out_dir=str(tmp_path))
    elapsed = time.perf_counter() - start
    for c, t in zip(rep.checks, (1.0, 4.0)):
        assert c.reference == pytest.approx(float(specfun.mittag_leffler(0.5, -math.sqrt(t))), rel=1e-12)
    ok = rep.passed and elapsed < 120
    detail = "; ".join(f"{c.name} {c.value:.5f}/{c.reference:.5f} tol {c.tolerance:.4f}" for c in rep.checks)
    assert report(9, ok, f"{detail}; bias budget {rep.metrics['bias_declared']}; {elapsed:.1f}s")


def test_criterion_10_solver_convergence():
    start = time.perf_counter()
    ref = float(specfun.mittag_leffler(0.5, -1.0))
    dts = (1e-2, 5e-3, 2.5e-3)
    errs = [abs(solve_relaxation(DistributedOrder.single(0.5), 1.0, 1.0, dt)[1][-1] - ref) for dt in dts]
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    elapsed = time.perf_counter() - start
    ok = min(rates) >= 1.3 and elapsed < 30
    assert report(10, ok, f"errors {[f'{e:.2e}' for e in errs]}; orders {[round(r, 4) for r in rates]}; {elapsed:.2f}s")


@pytest.mark.parametrize("kind", ["mc-vs-pde", "feynman-kac"])
def test_criterion_11_reproducibility(tmp_path, kind):
    d = {"kind": kind, "mixture": [[1.0, 0.5]], "coefficients": {"preset": "brownian"}, "n_paths": 30000, "seed": 1111,
         "grids": {"dx": 0.05, "dt": 1e-2, "delta": 1e-3}, "params": {"triangle": False} if kind == "mc-vs-pde" else {}}
    cfg = parse_config(d)
    runs = [("w1a", 1), ("w1b", 1), ("w2", 2)]
    files = None
    for name, w in runs:
        files = run_experiment(cfg, out_dir=str(tmp_path / name), workers=w).files
    csvs = [f for f in files if f.endswith(".csv")]
    ok = bool(csvs) and all(
        (tmp_path / "w1a" / f).read_bytes() == (tmp_path / n / f).read_bytes() for f in csvs for n, _ in runs[1:]
    )
    assert report(11, ok, f"{kind}: {csvs} byte-identical across 2 runs and workers 1/2")

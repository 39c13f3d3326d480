import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from subdiff import specfun
from subdiff import subordination as sb
from subdiff.errors import DomainError, PreconditionError
from subdiff.fracpde import (
    DistributedOrder,
    FieldOnGrid,
    GeneratorSpec,
    backward_operator_apply,
    caputo_derivative,
    discrete_delta,
    distributed_order_apply,
    forward_operator_apply,
    fractional_integral,
    periodic_grid,
    semigroup_field,
    solve_dode,
    solve_relaxation,
    subordination_solution,
)

DT = 1e-3
T1 = DT * np.arange(1001)


class TestDistributedOrder:
    def test_validation(self):
        with pytest.raises(DomainError):
            DistributedOrder(())
        with pytest.raises(DomainError):
            DistributedOrder(((1.0, 1.0),))
        with pytest.raises(DomainError):
            DistributedOrder(((-1.0, 0.5),))

    def test_from_mixture_pairing(self):
        spec = sb.MixtureSpec(((2.0, 0.3), (0.5, 0.9)))
        order = DistributedOrder.from_mixture(spec)
        assert order.atoms == ((2.0**0.3, 0.3), (0.5**0.9, 0.9))
        s = np.array([0.5, 1.0, 3.0])
        assert np.allclose(order.symbol(s), [sum((c * x) ** b for c, b in spec.atoms) for x in s])

    def test_from_density(self):
        # Uniform density on (0, 1): symbol int_0^1 s^b db = (s - 1) / log s.
        order = DistributedOrder.from_density(lambda b: np.ones_like(b))
        assert len(order.atoms) == 16
        for s in (0.5, 2.0, 10.0):
            assert order.symbol(s) == pytest.approx((s - 1) / math.log(s), rel=1e-12)
        with pytest.raises(DomainError):
            DistributedOrder.from_density(lambda b: -np.ones_like(b))


class TestFractionalIntegral:
    def test_plain_integral(self):
        assert np.allclose(fractional_integral(np.ones(1001), DT, 1.0), T1, rtol=0, atol=1e-14)

    def test_power_rule(self):
        out = fractional_integral(np.ones(1001), DT, 0.5)
        ref = integrate.quad(lambda u: (1 - u) ** -0.5, 0, 1)[0] / special.gamma(0.5)
        assert ref == pytest.approx(1 / special.gamma(1.5), rel=1e-10)
        assert abs(out[-1] - ref) <= 1e-8
        assert out[-1] == pytest.approx(1.1284, abs=1e-4)

    def test_semigroup(self):
        lhs = fractional_integral(fractional_integral(T1, DT, 0.4), DT, 0.3)
        rhs = fractional_integral(T1, DT, 0.7)
        assert np.max(np.abs(lhs - rhs)) <= 1e-6
        assert np.allclose(rhs, T1**1.7 / special.gamma(2.7), atol=1e-13)

    def test_domain(self):
        with pytest.raises(DomainError):
            fractional_integral(T1, DT, 0.0)


class TestCaputo:
    def test_constant(self):
        for beta in (0.2, 0.5, 1.0):
            assert np.all(caputo_derivative(np.full(50, 3.0), DT, beta) == 0)

    def test_linear(self):
        out = caputo_derivative(T1, DT, 0.5)
        ref = integrate.quad(lambda u: (1 - u) ** -0.5, 0, 1)[0] / special.gamma(0.5)
        assert ref == pytest.approx(2 / math.sqrt(math.pi), rel=1e-10)
        assert abs(out[-1] - ref) <= 2e-3
        assert out[-1] == pytest.approx(1.1284, abs=2e-3)

    def test_first_derivative(self):
        out = caputo_derivative(T1**2, DT, 1.0)
        assert np.max(np.abs(out - 2 * T1)) <= 1e-10

    def test_domain(self):
        for beta in (0.0, 1.1):
            with pytest.raises(DomainError):
                caputo_derivative(T1, DT, beta)
        with pytest.raises(PreconditionError):
            caputo_derivative([0.0, 1.0], DT, 0.5)

    @pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
    def test_laplace_rule(self, beta):
        t = DT * np.arange(20001)
        d = caputo_derivative(np.exp(-t), DT, beta)
        for s in (1.0, 2.0):
            num = integrate.trapezoid(np.exp(-s * t) * d, dx=DT)
            assert abs(num - (s**beta / (s + 1) - s ** (beta - 1))) <= 1e-3

    def test_order_continuity(self):
        d = caputo_derivative(np.sin(T1), DT, 0.999)
        # The exact derivative of order 0.999 is J^0.001 cos, which differs from cos
        # by about 1 - t^0.001 near the origin; the comparison starts at t = 0.01.
        assert np.max(np.abs(d - np.cos(T1))[10:]) <= 5e-3
        exact = np.array([integrate.quad(np.cos, 0, x, weight="alg", wvar=(0, -0.999))[0] for x in (0.001, 0.5, 1.0)])
        exact /= special.gamma(0.001)
        # L1 truncation is about dt g''/2 when beta is this close to 1.
        assert np.allclose(d[[1, 500, 1000]], exact, atol=5e-4)


class TestDistributedOrderApply:
    def test_single_atom(self):
        g = np.sin(T1)
        assert np.array_equal(distributed_order_apply(DistributedOrder.single(0.4), g, DT), caputo_derivative(g, DT, 0.4))

    def test_two_atoms(self):
        out = distributed_order_apply(DistributedOrder(((1.0, 0.4), (1.0, 0.8))), T1, DT)
        ref = float(1 / specfun.gamma_fn(1.6) + 1 / specfun.gamma_fn(1.2))
        assert abs(out[-1] - ref) <= 4e-3
        assert abs(out[-1] - 2.2086) <= 4e-3

    def test_linearity(self):
        g = np.exp(-T1) * np.cos(3 * T1)
        a = distributed_order_apply(DistributedOrder(((1.5, 0.3), (0.25, 0.7))), g, DT)
        b = distributed_order_apply(DistributedOrder(((3.0, 0.3), (0.5, 0.7))), g, DT)
        assert np.array_equal(b, 2 * a)


class TestGenerators:
    def test_grid(self):
        x = periodic_grid(8.0, 0.02)
        assert x.size == 800 and x[0] == -8.0 and np.any(x == 0.0)
        assert periodic_grid(1.0, 0.3).size % 2 == 0
        with pytest.raises(PreconditionError):
            periodic_grid(1.0, 1.0)

    def test_adjoint_consistency(self):
        rng = np.random.default_rng(0)
        gen = GeneratorSpec.drift_diffusion(b=lambda x: np.sin(x), sigma2=lambda x: 1 + 0.5 * np.cos(x), L=4.0)
        x = gen.grid(0.05)
        f, h = rng.standard_normal((2, x.size))
        lhs = backward_operator_apply(gen, x, f) @ h
        rhs = f @ forward_operator_apply(gen, x, h)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_second_derivative(self):
        L, dx = 4.0, 0.01
        gen = GeneratorSpec.drift_diffusion(b=0.0, sigma2=1.0, L=L)
        x = gen.grid(dx)
        h = np.sin(np.pi * x / L)
        out = forward_operator_apply(gen, x, h)
        assert np.max(np.abs(out + 0.5 * (np.pi / L) ** 2 * h)) <= 2 * dx**2

    def test_constant_flux(self):
        gen = GeneratorSpec.drift_diffusion(b=1.0, sigma2=0.0)
        x = gen.grid(0.05)
        assert np.max(np.abs(forward_operator_apply(gen, x, np.ones(x.size)))) <= 1e-12

    def test_divergence_of_gaussian_flux(self):
        for dx in (0.04, 0.02):
            gen = GeneratorSpec.drift_diffusion(b=lambda y: y, sigma2=0.0)
            x = gen.grid(dx)
            h = np.exp(-x**2 / 2)
            exact = -(1 - x**2) * h  # -(y h)' by hand
            err = np.max(np.abs(forward_operator_apply(gen, x, h) - exact))
            assert err <= 2 * dx**2

    def test_zero_column_sums(self):
        gen = GeneratorSpec.drift_diffusion(b=lambda x: np.cos(x), sigma2=lambda x: 2 + np.sin(x))
        a = gen.matrix(gen.grid(0.1))
        assert np.max(np.abs(np.asarray(a.sum(axis=0)))) <= 1e-10

    def test_fractional_laplacian_symbol(self):
        gen = GeneratorSpec.fractional_laplacian(1.5, L=math.pi)
        x = gen.grid(math.pi / 64)
        for k in (1, 3):
            h = np.cos(k * x)
            assert np.allclose(gen.apply(x, h), -(k**1.5) * h, atol=1e-12)
        assert np.allclose(gen.matrix(x) @ np.cos(x), gen.apply(x, np.cos(x)), atol=1e-12)

    def test_validation(self):
        with pytest.raises(DomainError):
            GeneratorSpec.fractional_laplacian(2.0)
        with pytest.raises(DomainError):
            GeneratorSpec("fractional_laplacian", form="backward", alpha=1.0)
        gen = GeneratorSpec.drift_diffusion(sigma2=lambda x: x)
        with pytest.raises(DomainError):
            gen.matrix(gen.grid(0.5))


class TestSolvers:
    def test_zero_generator(self):
        gen = GeneratorSpec.drift_diffusion(b=0.0, sigma2=0.0, L=2.0)
        x = gen.grid(0.1)
        phi = np.exp(-x**2)
        f = solve_dode(DistributedOrder.single(0.5), gen, phi, 0.1, 0.01, 1.0)
        assert np.max(np.abs(f.values - phi)) <= 1e-14

    def test_reaction_hook(self):
        gen = GeneratorSpec.drift_diffusion(b=0.0, sigma2=0.0, L=1.0, killing=1.0)
        x = gen.grid(0.25)
        f = solve_dode(DistributedOrder.single(0.5), gen, np.ones(x.size), 0.25, DT, 1.0)
        ref = float(specfun.mittag_leffler(0.5, -1.0))
        assert np.max(np.abs(f.values[-1] - ref)) <= 3e-3

    def test_relaxation_convergence(self):
        ref = float(specfun.mittag_leffler(0.5, -1.0))
        err = [abs(solve_relaxation(DistributedOrder.single(0.5), 1.0, 1.0, dt)[1][-1] - ref) for dt in (1e-2, 5e-3, 2.5e-3)]
        rates = np.log2(np.array(err[:-1]) / np.array(err[1:]))
        assert np.all(rates >= 1.3)

    def test_uncorrected_scheme_is_first_order(self):
        ref = float(specfun.mittag_leffler(0.5, -1.0))
        err = [abs(solve_relaxation(DistributedOrder.single(0.5), 1.0, 1.0, dt, corrected=False)[1][-1] - ref) for dt in (1e-2, 5e-3)]
        assert 0.7 <= math.log2(err[0] / err[1]) <= 1.2

    def test_heat_forward(self):
        gen = GeneratorSpec.drift_diffusion(b=0.0, sigma2=1.0, L=8.0)
        x = gen.grid(0.02)
        f = solve_dode(DistributedOrder.single(0.5), gen, discrete_delta(x), 0.02, DT, 1.0)
        u = f.values[-1]
        var = np.sum(x**2 * u) * f.dx
        assert abs(var - 1 / special.gamma(1.5)) <= 2e-2
        # Mass is conserved per step to rounding.
        assert f.info["max_step_mass_change"] <= 1e-10
        assert f.info["mass_drift"] <= 1e-10
        # Mass in the outer 5 percent strips; the tails decay like exp(-c |x|^(4/3)).
        assert f.info["boundary_mass"] < 1e-5
        ok, details = f.check_density(skip_initial=True)
        assert ok, details

    def test_distributed_order_relaxation_vs_talbot(self):
        order = DistributedOrder(((1.0, 0.4), (1.0, 0.8)))
        t, u = solve_relaxation(order, 1.0, 1.0, 2.5e-3)
        sym = lambda s: order.symbol(s)
        ref = specfun.talbot_inversion(lambda s: sym(s) / (s * (sym(s) + 1.0)), 1.0)
        assert abs(u[-1] - ref) <= 1e-3

    def test_time_grid_mismatch(self):
        with pytest.raises(PreconditionError):
            solve_relaxation(DistributedOrder.single(0.5), 1.0, 1.0, 0.3)

    def test_phi_shape(self):
        gen = GeneratorSpec.drift_diffusion(L=1.0)
        with pytest.raises(PreconditionError):
            solve_dode(DistributedOrder.single(0.5), gen, np.ones(3), 0.1, 0.1, 1.0)


class TestSubordinationSolution:
    HALF = sb.MixtureSpec.single(0.5)

    def test_constant_field(self):
        tau = np.linspace(0, 12, 600)
        p = np.tile(np.array([0.3, 1.0, 2.0]), (tau.size, 1))
        assert np.allclose(subordination_solution(self.HALF, p, tau, 1.0), [0.3, 1.0, 2.0], rtol=1e-14)

    def test_exponential_field(self):
        tau = np.concatenate([[0.0], np.geomspace(1e-6, 12, 2000)])
        val = subordination_solution(self.HALF, np.exp(-tau), tau, 1.0)
        assert abs(val - 0.4276) <= 1e-3
        assert val == pytest.approx(float(specfun.mittag_leffler(0.5, -1.0)), abs=1e-5)

    def test_short_grid(self):
        tau = np.linspace(0, 2, 50)
        with pytest.raises(PreconditionError, match="need tau_max"):
            subordination_solution(self.HALF, np.ones(50), tau, 1.0)

    def test_commuting_routes(self):
        dx, L = 0.02, 8.0
        gen = GeneratorSpec.drift_diffusion(b=0.0, sigma2=1.0, L=L)
        x = gen.grid(dx)
        pde = solve_dode(DistributedOrder.single(0.5), gen, discrete_delta(x), dx, DT, 1.0).values[-1]
        # Gaussian of variance tau (exact heat semigroup), tau grid clustered at 0.
        tau = np.concatenate([[0.0], np.geomspace(1e-6, 0.005, 200), np.arange(0.01, 9.0, 0.005)])
        tau = np.unique(tau)
        p = np.zeros((tau.size, x.size))
        p[0] = discrete_delta(x)
        p[1:] = np.exp(-x[None, :] ** 2 / (2 * tau[1:, None])) / np.sqrt(2 * np.pi * tau[1:, None])
        sub = subordination_solution(self.HALF, p, tau, 1.0)
        l2 = math.sqrt(np.sum((sub - pde) ** 2) * dx)
        assert l2 <= 5e-3

    def test_semigroup_field_matches_heat_kernel(self):
        gen = GeneratorSpec.drift_diffusion(b=0.0, sigma2=1.0, L=8.0)
        x = gen.grid(0.05)
        phi = np.exp(-x**2 / 2) / math.sqrt(2 * math.pi)
        out = semigroup_field(gen, phi, 0.05, [0.0, 0.5, 1.0])
        for i, s in enumerate([0.0, 0.5, 1.0]):
            exact = np.exp(-x**2 / (2 * (1 + s))) / math.sqrt(2 * math.pi * (1 + s))
            assert np.max(np.abs(out[i] - exact)) <= 1e-3


class TestFieldOnGrid:
    def field(self):
        t = np.linspace(0, 1, 4)
        x = periodic_grid(2.0, 0.5)
        v = np.exp(-np.add.outer(t, x**2)) / 7.0
        return FieldOnGrid(t, x, v, {"note": 1})

    def test_csv_round_trip(self, tmp_path):
        f = self.field()
        f.to_csv(tmp_path / "f.csv")
        g = FieldOnGrid.from_csv(tmp_path / "f.csv")
        assert np.array_equal(g.values, f.values) and np.array_equal(g.x, f.x) and np.array_equal(g.t, f.t)
        assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t,x,value"

    def test_binary_round_trip(self, tmp_path):
        f = self.field()
        f.to_binary(tmp_path / "f.bin")
        blob = (tmp_path / "f.bin").read_bytes()
        assert blob[:8] == b"SUBDIFF1"
        g = FieldOnGrid.from_binary(tmp_path / "f.bin")
        assert np.array_equal(g.values, f.values)
        with pytest.raises(PreconditionError):
            FieldOnGrid.from_bytes(blob[:-8])
        with pytest.raises(PreconditionError):
            FieldOnGrid.from_bytes(b"BADMAGIC" + blob[8:])

    def test_validation(self):
        with pytest.raises(DomainError):
            FieldOnGrid([0, 1], [0, 1, 2], np.zeros((2, 2)))
        with pytest.raises(DomainError):
            FieldOnGrid([0, 1], [0, 1], np.array([[0.0, np.nan], [0, 0]]))
        with pytest.raises(DomainError):
            FieldOnGrid([0, 1], [0, 1, 3], np.zeros((2, 3)))

    def test_density_checks(self):
        x = periodic_grid(8.0, 0.05)
        u = np.exp(-x**2 / 2) / math.sqrt(2 * math.pi)
        f = FieldOnGrid([0.0, 1.0], x, np.vstack([u, u]))
        assert f.check_density()[0]
        g = FieldOnGrid([0.0, 1.0], x, np.vstack([u, u - 1e-6]))
        ok, details = g.check_density()
        assert not ok and details["min_value"] < -1e-8
        assert f.cdf(1.0)(0.0) == pytest.approx(0.5, abs=1e-12)
        assert f.characteristic(1.0, 1.0)[0] == pytest.approx(math.exp(-0.5), abs=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 5), st.integers(4, 12), st.integers(0, 2**32 - 1))
    def test_bytes_round_trip(self, nt, m, seed):
        v = np.random.default_rng(seed).standard_normal((nt, m))
        f = FieldOnGrid(np.arange(nt) * 0.1, np.arange(m) * 0.25 - 1.0, v)
        g = FieldOnGrid.from_bytes(f.to_bytes())
        assert np.array_equal(g.values, f.values)

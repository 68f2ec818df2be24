import numpy as np
import pytest

from dnlslab.errors import BoundaryError
from dnlslab.grid import ComplexField, GridSpec, l2_norm, linf_norm, spectral_derivative
from dnlslab.solver import SolverConfig, evolve, linear_propagate
from dnlslab.vector_field import (
    apply_L,
    apply_L_derivative,
    evolve_linearized_z,
    growth_exponent,
    ks_inequality_ratio,
    vf_observer,
)

from conftest import random_field


def small_gaussian(grid, amp=0.05):
    return ComplexField(grid, 0.0, amp * np.exp(-grid.x**2 / 2.0).astype(complex))


class TestApplyL:
    def test_t_zero_is_x_weighting(self, gaussian_field):
        lu = apply_L(gaussian_field)
        assert np.array_equal(lu.values, gaussian_field.grid.x * gaussian_field.values)

    def test_commutator_is_identity(self, wide_grid):
        # d/dx (L u) - L(u_x) == u
        f = random_field(wide_grid, seed=41).with_values(
            random_field(wide_grid, seed=41).values, time=0.7
        )
        lhs = spectral_derivative(apply_L(f), 1).values - apply_L(
            spectral_derivative(f, 1)
        ).values
        assert np.max(np.abs(lhs - f.values)) < 1e-10 * linf_norm(f)

    def test_derivative_identity(self, wide_grid):
        # L(u_x) = d/dx(L u) - u, pointwise
        f = random_field(wide_grid, seed=42).with_values(
            random_field(wide_grid, seed=42).values, time=1.3
        )
        direct = apply_L(spectral_derivative(f, 1)).values
        via_identity = apply_L_derivative(f).values
        assert np.max(np.abs(direct - via_identity)) < 1e-10 * np.max(np.abs(direct))

    def test_linear_flow_preserves_lu_norm(self):
        g = GridSpec(256.0, 8192)
        u0 = small_gaussian(g, amp=1.0)
        ref = l2_norm(u0.with_values(g.x * u0.values))
        for t in (0.5, 2.0, 10.0):
            lu = apply_L(linear_propagate(u0, t))
            assert l2_norm(lu) == pytest.approx(ref, rel=1e-9)

    def test_free_flow_commutes_with_schrodinger_operator(self):
        # (i d/dt + dxx)(L u) = 0 along the free flow, via centered
        # differences of snapshots
        g = GridSpec(64.0, 2048)
        u0 = small_gaussian(g, amp=1.0)
        t, dt = 2.0, 1e-4
        lus = [apply_L(linear_propagate(u0, s)) for s in (t - dt, t, t + dt)]
        dt_lu = (lus[2].values - lus[0].values) / (2.0 * dt)
        dxx_lu = spectral_derivative(lus[1], 2).values
        resid = 1j * dt_lu + dxx_lu
        assert np.max(np.abs(resid)) < 1e-6 * np.max(np.abs(dxx_lu))

    def test_boundary_guard_raises(self, small_grid):
        g = small_grid
        f = ComplexField(g, 1.0, np.exp(-((g.x - 0.97 * g.half_width) ** 2)))
        with pytest.raises(BoundaryError):
            apply_L(f)

    def test_x_weighted_guard_catches_far_edge_mass(self):
        # edge amplitude passes the plain 1e-10 relative guard but the
        # x-weighting (factor ~ half_width) pushes it over the weighted one
        g = GridSpec(1024.0, 8192)
        vals = np.exp(-g.x**2 / 2.0) + 5e-11 * np.exp(
            -((g.x - g.x[-1]) ** 2)
        )
        f = ComplexField(g, 1.0, vals)
        assert max(abs(vals[0]), abs(vals[-1])) < 1e-10 * np.max(np.abs(vals))
        with pytest.raises(BoundaryError):
            apply_L(f)


class TestKsRatio:
    def test_linear_gaussian_family_bounded_by_two(self):
        g = GridSpec(1024.0, 16384)
        u0 = small_gaussian(g, amp=1.0)
        for t in (1.0, 2.0, 5.0, 10.0, 50.0):
            u = linear_propagate(u0, t)
            ratio = ks_inequality_ratio(u, apply_L(u))
            assert 0.0 < ratio < 2.0

    def test_small_data_run_stays_near_linear_constant(self):
        g = GridSpec(128.0, 2048)
        u0 = small_gaussian(g, amp=0.02)
        cfg = SolverConfig(dt=2e-3, t_end=5.0, snapshot_times=(1.0, 3.0, 5.0))
        snaps, _ = evolve(u0, cfg)
        for s in snaps:
            assert ks_inequality_ratio(s, apply_L(s)) < 2.0 * 1.5

    def test_requires_positive_time(self, gaussian_field):
        with pytest.raises(ValueError):
            ks_inequality_ratio(gaussian_field, apply_L(gaussian_field))

    def test_zero_field_sentinel(self, small_grid):
        z = ComplexField(small_grid, 1.0, np.zeros(small_grid.n_points))
        assert ks_inequality_ratio(z, z) == np.inf


class TestGrowthExponent:
    def test_too_few_points(self):
        assert growth_exponent([1, 2], [1.0, 1.1]) == 0.0

    def test_recovers_slope(self):
        t = np.linspace(1, 80, 60)
        vals = 2.0 * (1 + t**2) ** (0.03 / 2)
        assert growth_exponent(t, vals) == pytest.approx(0.03, abs=1e-12)


class TestLinearizedZ:
    def test_free_flow_when_potential_vanishes(self):
        # zero u: the z equation loses its potential and forcing, so z
        # follows the free propagator from any seed
        g = GridSpec(64.0, 1024)
        u0 = ComplexField(g, 0.0, np.zeros(g.n_points))
        z0 = small_gaussian(g, amp=1.0).with_values(
            g.x * np.exp(-g.x**2 / 2.0)
        )
        cfg = SolverConfig(dt=1e-3, t_end=1.0, snapshot_times=(1.0,))
        _, zs = evolve_linearized_z(u0, cfg, z0=z0)
        exact = linear_propagate(z0, 1.0)
        assert np.max(np.abs(zs[-1].values - exact.values)) < 1e-10

    def test_consistency_with_vector_field_of_nonlinear_solution(self):
        # dual route to Lu: co-evolved z versus apply_L of the evolved u
        g = GridSpec(64.0, 1024)
        u0 = small_gaussian(g, amp=0.15)
        cfg = SolverConfig(dt=1e-3, t_end=1.0, snapshot_times=(1.0,))
        us, zs = evolve_linearized_z(u0, cfg)
        lu = apply_L(us[-1])
        rel = l2_norm(zs[-1].with_values(zs[-1].values - lu.values)) / l2_norm(lu)
        assert rel < 1e-7

    def test_epsilon_scaling_of_z(self):
        # doubling the data doubles z at leading order; the deviation is a
        # cubic-in-amplitude effect and is reported via its relative size
        g = GridSpec(64.0, 1024)
        cfg = SolverConfig(dt=2e-3, t_end=1.0, snapshot_times=(1.0,))
        devs = {}
        for amp in (0.05, 0.1):
            _, z1 = evolve_linearized_z(small_gaussian(g, amp), cfg)
            _, z2 = evolve_linearized_z(small_gaussian(g, 2 * amp), cfg)
            dev = z2[-1].values - 2.0 * z1[-1].values
            devs[amp] = np.max(np.abs(dev)) / np.max(np.abs(z2[-1].values))
            assert devs[amp] < 10.0 * amp**2
        # quadratic-in-amplitude relative deviation: 4x per amplitude doubling
        assert 2.0 < devs[0.1] / devs[0.05] < 8.0

    def test_grid_mismatch_is_structural_error(self):
        from dnlslab.errors import ShapeMismatchError

        g1 = GridSpec(64.0, 1024)
        g2 = GridSpec(32.0, 512)
        cfg = SolverConfig(dt=1e-2, t_end=0.1)
        with pytest.raises(ShapeMismatchError):
            evolve_linearized_z(
                small_gaussian(g1), cfg, z0=small_gaussian(g2)
            )


class TestObserver:
    def test_records_get_vector_field_columns(self):
        g = GridSpec(128.0, 2048)
        u0 = small_gaussian(g, amp=0.05)
        cfg = SolverConfig(dt=2e-3, t_end=2.0, snapshot_times=(1.0, 2.0))
        _, recs = evolve(u0, cfg, observers=(vf_observer(),))
        for rec in recs:
            assert rec.lu_l2 is not None and np.isfinite(rec.lu_l2)
            assert rec.lux_l2 is not None and np.isfinite(rec.lux_l2)
            assert rec.ks_ratio is not None
            assert np.isfinite(rec.growth_exponent)

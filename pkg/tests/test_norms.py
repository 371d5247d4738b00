import numpy as np
import pytest

from conftest import random_divfree
from nslab.norms import (
    BochnerExponents,
    Trajectory,
    bochner_norm,
    data_norm_0muT,
    data_norm_kmuT,
    bkss_vel_norm,
    dual_h1_norm,
    grad_power_l2,
    inner_l2,
    l2_norm,
    lp_norm,
    norm_table,
    sobolev_norm,
    sol_norm_0muT,
    trajectory_from_callable,
)
from nslab.solver import ProblemData, SolverConfig, make_initial_data, solve_stokes
from nslab.spectral import (
    GridSpec,
    RealScalarField,
    SpectralVectorField,
    forward_transform,
    partial_derivative,
    random_spectral_noise,
)

VOL = (2 * np.pi) ** 3


def single_mode(grid, amplitude=1.0):
    _, Y, _ = grid.meshgrid()
    return SpectralVectorField.from_physical(
        grid,
        np.stack([amplitude * np.sin(Y), np.zeros(grid.shape), np.zeros(grid.shape)]),
    )


class TestLpNorm:
    def test_constant_cubed(self, grid16):
        f = RealScalarField(grid16, np.ones(grid16.shape))
        assert lp_norm(f, 3.0) == pytest.approx(VOL ** (1 / 3), rel=1e-13)

    def test_sine_l2(self, grid16, mesh16):
        X, _, _ = mesh16
        f = RealScalarField(grid16, np.sin(X))
        assert lp_norm(f, 2.0) == pytest.approx(np.sqrt(VOL / 2), rel=1e-13)

    def test_sine_sup(self, grid16, mesh16):
        X, _, _ = mesh16
        f = RealScalarField(grid16, np.sin(X))
        assert lp_norm(f, np.inf) == pytest.approx(1.0, abs=1e-12)

    def test_p_validation(self, grid16):
        f = RealScalarField(grid16, np.ones(grid16.shape))
        with pytest.raises(ValueError):
            lp_norm(f, 0.5)

    def test_l2_matches_parseval(self, grid16):
        v = random_spectral_noise(grid16, 4, vector=True)
        assert lp_norm(v, 2.0) == pytest.approx(l2_norm(v), rel=1e-12)


class TestSobolevNorm:
    @pytest.mark.parametrize("s", [-2, -1, 0, 1, 3])
    def test_single_mode_weight(self, grid16, mesh16, s):
        X, _, _ = mesh16
        F = forward_transform(RealScalarField(grid16, np.sin(X)))
        assert sobolev_norm(F, s) ** 2 == pytest.approx(2.0**s * VOL / 2, rel=1e-12)

    def test_s0_is_l2(self, grid16):
        v = random_spectral_noise(grid16, 8, vector=True)
        assert sobolev_norm(v, 0) == pytest.approx(lp_norm(v, 2.0), rel=1e-12)

    def test_h1_splits_into_l2_plus_gradients(self, grid16):
        u = random_spectral_noise(grid16, 9, vector=True)
        parts = l2_norm(u) ** 2 + sum(
            l2_norm(partial_derivative(u, ax)) ** 2 for ax in (1, 2, 3)
        )
        assert sobolev_norm(u, 1) ** 2 == pytest.approx(parts, rel=1e-12)

    def test_monotone_in_s(self, grid16):
        u = random_spectral_noise(grid16, 10, vector=False)
        norms = [sobolev_norm(u, s) for s in (-2, -1, 0, 1, 2)]
        assert all(a <= b * (1 + 1e-13) for a, b in zip(norms, norms[1:]))


class TestGradPower:
    def test_single_mode_all_orders_equal(self, grid16):
        u = single_mode(grid16)
        for j in (0, 1, 2, 3):
            assert grad_power_l2(u, j) == pytest.approx(l2_norm(u), rel=1e-12)

    def test_constant_kills_gradients(self, grid16):
        coeffs = np.zeros((3,) + grid16.shape, dtype=complex)
        coeffs[0, 0, 0, 0] = 1.0
        u = SpectralVectorField.from_stack(grid16, coeffs)
        assert grad_power_l2(u, 1) == 0.0
        assert grad_power_l2(u, 2) == 0.0

    def test_first_power_sums_partials(self, grid16):
        u = random_spectral_noise(grid16, 12, vector=True)
        total = sum(l2_norm(partial_derivative(u, ax)) ** 2 for ax in (1, 2, 3))
        assert grad_power_l2(u, 1) ** 2 == pytest.approx(total, rel=1e-12)

    def test_negative_order_rejected(self, grid16):
        u = random_spectral_noise(grid16, 12, vector=True)
        with pytest.raises(ValueError):
            grad_power_l2(u, -1)


class TestBochnerNorm:
    def test_time_constant_field(self, grid16):
        u = single_mode(grid16)
        traj = trajectory_from_callable(grid16, np.linspace(0, 2.0, 41), lambda t: u)
        exps = BochnerExponents(4.0, 2.0)
        assert bochner_norm(traj, exps) == pytest.approx(
            2.0 ** (1 / 4) * lp_norm(u, 2.0), rel=1e-12
        )

    def test_zero_trajectory(self, grid16):
        z = single_mode(grid16, amplitude=0.0)
        traj = trajectory_from_callable(grid16, [0.0, 1.0], lambda t: z)
        assert bochner_norm(traj, BochnerExponents(2.0, 2.0)) == 0.0

    def test_exponential_decay_closed_form(self, grid16):
        u = single_mode(grid16)
        traj = trajectory_from_callable(
            grid16, np.linspace(0.0, 1.0, 100), lambda t: u * float(np.exp(-t))
        )
        expected = lp_norm(u, 2.0) * np.sqrt((1 - np.exp(-2.0)) / 2.0)
        got = bochner_norm(traj, BochnerExponents(2.0, 2.0))
        assert got == pytest.approx(expected, abs=1e-4 * expected)

    def test_sup_exponent_is_max(self, grid16):
        u = single_mode(grid16)
        traj = trajectory_from_callable(
            grid16, np.linspace(0.0, 1.0, 11), lambda t: u * float(np.exp(-t))
        )
        assert bochner_norm(traj, BochnerExponents(np.inf, 2.0)) == pytest.approx(
            lp_norm(u, 2.0), rel=1e-12
        )

    def test_sup_dominates_scaled_finite_exponent(self, grid16):
        u = single_mode(grid16)
        traj = trajectory_from_callable(
            grid16, np.linspace(0.0, 1.5, 31), lambda t: u * float(np.exp(-0.7 * t))
        )
        T = traj.final_time
        for s in (1.0, 2.0, 5.0):
            finite = bochner_norm(traj, BochnerExponents(s, 2.0))
            sup = bochner_norm(traj, BochnerExponents(np.inf, 2.0))
            assert sup >= finite / T ** (1 / s) - 1e-12


class TestExponentPairs:
    def test_lps_tag_validates(self):
        BochnerExponents.lps(4.0)
        with pytest.raises(ValueError):
            BochnerExponents(2.0, 2.0, tag="LPS")

    def test_energy_tag_validates(self):
        BochnerExponents.energy(6.0)
        with pytest.raises(ValueError):
            BochnerExponents(2.0, 8.0, tag="energy")


class TestCompositeNorms:
    def test_data_norm_without_forcing(self, grid16):
        u0 = single_mode(grid16)
        assert data_norm_0muT(u0, None, 0.1, 1.0) == pytest.approx(
            l2_norm(u0), rel=1e-13
        )

    def test_sol_norm_time_constant_single_mode(self, grid16):
        u = single_mode(grid16)
        mu, T = 0.3, 2.0
        traj = trajectory_from_callable(
            grid16, np.linspace(0, T, 21), lambda t: u, mu=mu
        )
        expected = l2_norm(u) ** 2 * (1 + mu * T)
        assert sol_norm_0muT(traj) ** 2 == pytest.approx(expected, rel=1e-12)

    def test_stokes_decay_closed_form(self, grid16):
        mu, T = 0.2, 1.0
        u0 = make_initial_data("single_mode", grid16)
        data = ProblemData(u0=u0, forcing=None, mu=mu, T=T)
        traj = solve_stokes(data, SolverConfig(dt=1e-3, snapshot_every=5))
        e0 = l2_norm(u0) ** 2
        expected = e0 * (1 + (1 - np.exp(-2 * mu * T)) / 2)
        assert sol_norm_0muT(traj) ** 2 == pytest.approx(expected, abs=1e-6 * e0)

    def test_data_norm_k_without_forcing(self, grid16):
        u0 = random_divfree(grid16, 3)
        assert data_norm_kmuT(u0, None, 0.1, 1.0, 1) == pytest.approx(
            grad_power_l2(u0, 1), rel=1e-13
        )

    def test_data_norm_k_forcing_only(self, grid16):
        mu, T = 0.4, 2.0
        f = single_mode(grid16, amplitude=0.7)
        zero = single_mode(grid16, amplitude=0.0)
        f_traj = trajectory_from_callable(grid16, np.linspace(0, T, 41), lambda t: f)
        got = data_norm_kmuT(zero, f_traj, mu, T, 1)
        assert got == pytest.approx(np.sqrt(4.0 / mu * T) * lp_norm(f, 2.0), rel=1e-12)

    def test_data_norm_k_single_mode_initial(self, grid16):
        u0 = single_mode(grid16)
        for k in (1, 2, 3):
            assert data_norm_kmuT(u0, None, 0.1, 1.0, k) == pytest.approx(
                l2_norm(u0), rel=1e-12
            )

    def test_dual_norm_uses_projection(self, grid16, mesh16):
        X, _, _ = mesh16
        grad_field = SpectralVectorField.from_physical(
            grid16, np.stack([np.cos(X), np.zeros_like(X), np.zeros_like(X)])
        )
        assert dual_h1_norm(grad_field) <= 1e-13
        v = single_mode(grid16)
        assert dual_h1_norm(v) == pytest.approx(l2_norm(v) / np.sqrt(2.0), rel=1e-12)


class TestParabolicNorm:
    def _decay_traj(self, grid, mu, n_snap=41):
        u = single_mode(grid)
        rate = mu  # |zeta| = 1 mode
        times = np.linspace(0.0, 1.0, n_snap)
        return trajectory_from_callable(
            grid,
            times,
            lambda t: u * float(np.exp(-rate * t)),
            mu=mu,
            dudt_fn=lambda t: u * float(-rate * np.exp(-rate * t)),
        )

    def test_zero_trajectory(self, grid16):
        z = single_mode(grid16, amplitude=0.0)
        traj = trajectory_from_callable(
            grid16, [0.0, 1.0], lambda t: z, mu=0.1, dudt_fn=lambda t: z
        )
        assert bkss_vel_norm(traj, 1, 1) == 0.0

    def test_time_constant_reduces_to_spatial(self, grid16):
        u = single_mode(grid16)
        zero = single_mode(grid16, amplitude=0.0)
        traj = trajectory_from_callable(
            grid16,
            np.linspace(0, 1, 11),
            lambda t: u,
            mu=0.5,
            dudt_fn=lambda t: zero,
        )
        with_time = bkss_vel_norm(traj, 1, 1)
        # same norm computed with the time-derivative slots removed
        spatial_only = bkss_vel_norm(
            trajectory_from_callable(
                grid16, np.linspace(0, 1, 11), lambda t: u, mu=0.5,
                dudt_fn=lambda t: zero,
            ),
            1,
            1,
        )
        assert with_time == pytest.approx(spatial_only, rel=1e-13)
        assert with_time > 0

    def test_decay_run_finite_and_matches_piece_recomputation(self, grid16):
        # independent oracle: assemble the s = 1, k = 0 norm from its eleven
        # pieces (all |alpha| <= 2 spatial derivatives plus the first time
        # derivative), each piece being sup ||grad^0 v||^2 + mu int ||grad v||^2
        traj = self._decay_traj(grid16, 0.3)
        mu = traj.mu

        def piece(fields):
            sup_sq = max(l2_norm(f) ** 2 for f in fields)
            ints = np.array([grad_power_l2(f, 1) ** 2 for f in fields])
            return sup_sq + mu * np.trapezoid(ints, traj.times)

        def derived(fields, alpha):
            out = list(fields)
            for axis, reps in enumerate(alpha):
                for _ in range(reps):
                    out = [partial_derivative(f, axis + 1) for f in out]
            return out

        alphas = [
            (0, 0, 0),
            (1, 0, 0), (0, 1, 0), (0, 0, 1),
            (2, 0, 0), (0, 2, 0), (0, 0, 2),
            (1, 1, 0), (1, 0, 1), (0, 1, 1),
        ]
        total = sum(piece(derived(traj.velocities, a)) for a in alphas)
        total += piece(traj.dudt)
        expected = np.sqrt(total)
        got = bkss_vel_norm(traj, 0, 1)
        assert np.isfinite(got)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_decay_run_viscosity_scaling(self, grid16):
        # time-derivative pieces scale like mu^2 on decay runs, so the norm
        # grows with viscosity for this family
        lo = bkss_vel_norm(self._decay_traj(grid16, 0.1), 0, 1)
        hi = bkss_vel_norm(self._decay_traj(grid16, 0.8), 0, 1)
        assert np.isfinite(lo) and np.isfinite(hi)
        assert hi > lo

    def test_missing_dudt_rejected(self, grid16):
        u = single_mode(grid16)
        traj = trajectory_from_callable(grid16, [0.0, 1.0], lambda t: u, mu=0.1)
        with pytest.raises(ValueError):
            bkss_vel_norm(traj, 0, 1)

    def test_higher_time_order_warns(self, grid16):
        traj = self._decay_traj(grid16, 0.3, n_snap=21)
        with pytest.warns(RuntimeWarning):
            val = bkss_vel_norm(traj, 0, 2)
        assert np.isfinite(val)


class TestTrajectoryValidation:
    def test_needs_two_snapshots(self, grid16):
        u = single_mode(grid16)
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0]), velocities=[u])

    def test_needs_increasing_times(self, grid16):
        u = single_mode(grid16)
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 0.0]), velocities=[u, u])

    def test_needs_zero_start(self, grid16):
        u = single_mode(grid16)
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.5, 1.0]), velocities=[u, u])

    def test_norm_table_columns(self, grid16):
        u = single_mode(grid16)
        traj = trajectory_from_callable(grid16, [0.0, 1.0], lambda t: u, mu=0.1)
        rows = norm_table(traj, r_values=(4.0,))
        assert set(rows[0]) == {"t", "l2", "grad1_l2", "linf", "l4"}
        assert rows[0]["l2"] == pytest.approx(l2_norm(u), rel=1e-12)


def test_inner_product_grid_mismatch(grid16):
    a = single_mode(grid16)
    b = single_mode(GridSpec(8))
    with pytest.raises(ValueError):
        inner_l2(a, b)

"""Tests for the Burgers right-hand sides and the MacCormack integrator."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lesmodel.analytic import ForcingSpec, preset
from lesmodel.closures import ModelParams
from lesmodel.fields import FieldHistory, InsufficientHistoryError, ScalarField, SpaceTimeGrid, l2_norm_1d
from lesmodel.filtering import FilterSpec, fitted_slope
from lesmodel.solvers import (
    SolverBlowUp,
    SolverConfig,
    rhs_filtered,
    rhs_generalized,
    rhs_plain,
    run,
    total_variation,
)


def grid(dx, dt=1e-3):
    return SpaceTimeGrid.from_spacing(0.0, 1.0, dx, dt)


def periodic_cfg(model="plain", **kw):
    base = dict(dx=0.05, dt=0.005, t_end=0.05, bc_mode="periodic", model=model,
                initial_condition=lambda x: 2.3 + 0 * x)
    if model == "filtered":
        base["filter"] = FilterSpec(0.1)
    base.update(kw)
    return SolverConfig(**base)


class TestPlainRHS:
    def test_constant_is_steady(self):
        g = grid(0.1)
        out = rhs_plain(ScalarField(g, np.full(11, 1.7)), 0.01, mode="periodic")
        assert np.all(out.values == 0.0)

    def test_forcing_only(self):
        g = grid(0.1)
        out = rhs_plain(ScalarField(g, np.zeros(11)), 0.01, f=3.0)
        np.testing.assert_array_equal(out.values, 3.0)

    def test_consistent_with_analytic_time_derivative(self):
        s = preset(2).solution
        steps = (1 / 400, 1 / 800, 1 / 1600)
        errs = []
        for dx in steps:
            g = grid(dx)
            x = g.coords(0)
            u, u_t, _, _ = s.u_partials(0.0, x)
            r = rhs_plain(ScalarField(g, u), s.nu).values
            errs.append(np.max(np.abs(r - u_t)[1:-1]))
        assert fitted_slope(steps, errs) == pytest.approx(2.0, abs=0.1)


class TestGeneralizedRHS:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 3.0))
    def test_zero_lambda_is_plain(self, seed, q):
        g = grid(0.05)
        u = ScalarField(g, np.random.default_rng(seed).normal(size=21))
        for mode in ("periodic", "one-sided"):
            a = rhs_plain(u, 0.02, mode=mode).values
            b = rhs_generalized(u, ModelParams(nu=0.02, lam=0.0, q=q), mode=mode).values
            np.testing.assert_array_equal(a, b)

    def test_affine_has_no_viscous_term(self):
        g = grid(0.1)
        x = g.coords(0)
        a = 1.5
        out = rhs_generalized(ScalarField(g, a * x), ModelParams(nu=0.3, lam=2.0)).values
        np.testing.assert_allclose(out[1:-1], -a * a * x[1:-1], atol=1e-12)

    def test_flux_divergence_order(self):
        k = 2 * np.pi
        steps = (1 / 100, 1 / 200, 1 / 400)
        errs = []
        for dx in steps:
            g = grid(dx)
            x = g.coords(0)
            u = np.sin(k * x)
            out = rhs_generalized(ScalarField(g, u), ModelParams(nu=1.0, lam=1.0), mode="periodic").values
            w = k * np.cos(k * x)
            w_x = -k * k * np.sin(k * x)
            exact_visc = w_x * (1 + w * w) ** -0.5 * (1 + 2 * w * w)
            exact = -u * w + exact_visc
            errs.append(np.max(np.abs(out - exact)))
        assert fitted_slope(steps, errs) == pytest.approx(2.0, abs=0.1)


class TestFilteredRHS:
    def test_needs_history(self):
        g = grid(0.1)
        h = FieldHistory(3, g.dt)
        h.push(0.0, g.coords(0))
        with pytest.raises(InsufficientHistoryError):
            rhs_filtered(h, g, ModelParams(nu=0.1), FilterSpec(0.1))

    def test_rejects_general_power(self):
        g = grid(0.1)
        h = FieldHistory(3, g.dt)
        h.push(0.0, g.coords(0))
        h.push(g.dt, g.coords(0))
        with pytest.raises(ValueError):
            rhs_filtered(h, g, ModelParams(nu=0.1, q=1.0), FilterSpec(0.1))

    def test_affine_steady_matches_generalized(self):
        # all closure curvature terms and tau gradients vanish on a steady affine state
        g = grid(0.1)
        x = g.coords(0)
        h = FieldHistory(3, g.dt)
        for k in range(3):
            h.push(k * g.dt, 0.7 * x)
        p = ModelParams(nu=0.1, lam=2.0)
        a = rhs_filtered(h, g, p, FilterSpec(0.1)).values
        b = rhs_generalized(ScalarField(g, 0.7 * x), p).values
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestConfig:
    def test_filtered_needs_filter(self):
        with pytest.raises(ValueError):
            SolverConfig(dx=0.1, dt=0.01, t_end=1, initial_condition=np.sin, bc_mode="periodic",
                         model="filtered")

    def test_dirichlet_needs_boundary(self):
        with pytest.raises(ValueError):
            SolverConfig(dx=0.1, dt=0.01, t_end=1, initial_condition=np.sin)

    def test_t_end_must_be_step_multiple(self):
        cfg = SolverConfig(dx=0.1, dt=0.03, t_end=0.1, initial_condition=np.sin, bc_mode="periodic")
        with pytest.raises(ValueError):
            cfg.n_steps

    @pytest.mark.parametrize("kw", [dict(dx=0.0), dict(dt=-1.0), dict(domain=(1.0, 1.0)), dict(model="les"),
                                    dict(bc_mode="open"), dict(advection="upwind")])
    def test_invalid_fields(self, kw):
        base = dict(dx=0.1, dt=0.01, t_end=1.0, initial_condition=np.sin, bc_mode="periodic")
        base.update(kw)
        with pytest.raises(ValueError):
            SolverConfig(**base)


class TestMacCormack:
    def test_forcing_only_single_step(self):
        cfg = periodic_cfg(initial_condition=lambda x: 0 * x, forcing=lambda t, x: 2.0 + 0 * x,
                           t_end=0.005)
        np.testing.assert_allclose(run(cfg).final, 2.0 * 0.005, rtol=1e-14)

    @pytest.mark.parametrize("model", ["plain", "generalized", "filtered"])
    def test_constant_preserved(self, model):
        cfg = periodic_cfg(model, params=ModelParams(nu=0.01, lam=3.0), t_end=5.0)
        assert cfg.n_steps == 1000
        np.testing.assert_array_equal(run(cfg).final, 2.3)

    def test_periodic_mean_conserved(self):
        cfg = periodic_cfg(initial_condition=lambda x: 1.0 + 0.5 * np.sin(2 * np.pi * x), t_end=0.5,
                           params=ModelParams(nu=0.01))
        traj = run(cfg)
        means = [np.mean(v[:-1]) for v in traj.values]
        assert np.max(np.abs(np.diff(means))) <= 1e-10

    def test_periodic_storage_wraps(self):
        traj = run(periodic_cfg(initial_condition=lambda x: np.sin(2 * np.pi * x)))
        assert all(v[0] == v[-1] for v in traj.values)

    def test_dirichlet_boundaries_clamped(self):
        cfg = SolverConfig(dx=0.1, dt=0.01, t_end=0.1, initial_condition=lambda x: x,
                           boundary=lambda t: (t, 1.0 + t), params=ModelParams(nu=0.01))
        traj = run(cfg)
        assert traj.final[0] == pytest.approx(0.1) and traj.final[-1] == pytest.approx(1.1)

    def test_zero_end_time(self):
        traj = run(periodic_cfg(t_end=0.0))
        assert traj.times == [0.0]

    def test_snapshot_stride_keeps_final(self):
        traj = run(periodic_cfg(t_end=0.05, snapshot_stride=4))
        assert traj.times[-1] == pytest.approx(0.05)
        assert len(traj.times) == 1 + 2 + 1

    def test_smooth_preset_regime_is_finite(self):
        s = preset(1).solution
        cfg = SolverConfig(dx=0.1, dt=0.01, t_end=1.0, initial_condition=lambda x: s.u(0, x),
                           boundary=lambda t: (s.u(t, 0.0), s.u(t, 1.0)), params=ModelParams(nu=s.nu))
        traj = run(cfg)
        assert np.all(np.isfinite(traj.final))
        assert l2_norm_1d(traj.final - s.u(1.0, traj.x), 0.1) < 1e-3

    def test_blow_up_reported(self):
        cfg = periodic_cfg(initial_condition=lambda x: 50 * np.sin(2 * np.pi * x), dt=0.05, t_end=20.0,
                           params=ModelParams(nu=1e-6))
        with pytest.raises(SolverBlowUp) as info:
            run(cfg)
        assert info.value.step >= 0 and info.value.trajectory is not None

    def test_cfl_warning(self, caplog):
        cfg = periodic_cfg(initial_condition=lambda x: 20 + 0 * x, dt=0.005, t_end=0.01)
        with caplog.at_level(logging.WARNING):
            run(cfg)
        assert "CFL" in caplog.text

    def test_forcing_spec_filtered_for_filtered_model(self):
        # uniform forcing keeps the state uniform, so one step sees only the forcing
        w, dt = 20.0, 0.005
        f = ForcingSpec(temporal=((1.0, w),))
        for model, damp in (("plain", 1.0), ("filtered", np.exp(-0.01 * w * w / 6))):
            cfg = periodic_cfg(model, initial_condition=lambda x: 0 * x, forcing=f, t_end=dt, dt=dt)
            np.testing.assert_allclose(run(cfg).final, 0.5 * dt * damp * np.sin(w * dt), rtol=1e-12)


class TestTrajectory:
    def test_csv_has_header_and_columns(self, tmp_path):
        traj = run(periodic_cfg(t_end=0.01))
        path = tmp_path / "traj.csv"
        traj.to_csv(path, {"dx": 0.05})
        lines = path.read_text().splitlines()
        assert lines[0] == "# dx = 0.05"
        assert lines[1] == "t,x,u"
        assert len(lines) == 2 + 3 * 21

    def test_total_variation(self):
        assert total_variation(np.array([0.0, 1.0, 0.0, 2.0])) == 4.0

"""Tests for the Cole-Hopf benchmark family, presets and forcing."""

import math

import numpy as np
import pytest

from lesmodel.analytic import (
    AnalyticDomainError,
    AnalyticSolutionSpec,
    ForcingSpec,
    burgers_residual,
    filtered_reference,
    preset,
)
from lesmodel.filtering import FilterSpec, filter_bruteforce


def probes(n=10_000, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, n), rng.uniform(0, 1, n)


class TestColeHopf:
    @pytest.mark.parametrize("set_id", [1, 2, 3])
    def test_residual_vanishes(self, set_id):
        s = preset(set_id).solution
        t, x = probes()
        _, u_t, _, _ = s.u_partials(t, x)
        assert np.max(np.abs(burgers_residual(s, t, x)) / (1 + np.abs(u_t))) <= 1e-9

    @pytest.mark.parametrize("set_id", [1, 2, 3])
    def test_phi_keeps_one_sign(self, set_id):
        assert preset(set_id).solution.check_nonvanishing(n=1000) > 0

    def test_preset_three_phi_is_negative(self):
        s = preset("set3").solution
        assert np.all(s.phi(*np.meshgrid(np.linspace(0, 1, 50), np.linspace(0, 1, 50))) < 0)

    @pytest.mark.parametrize("set_id", [1, 2, 3])
    def test_u_x_matches_finite_differences(self, set_id):
        s = preset(set_id).solution
        x = np.linspace(0.05, 0.95, 19)
        errs = []
        for h in (1e-3, 5e-4):
            fd = (s.u(0.5, x + h) - s.u(0.5, x - h)) / (2 * h)
            errs.append(np.max(np.abs(fd - s.u_partials(0.5, x)[2])))
        assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)

    def test_sign_change_rejected(self):
        s = AnalyticSolutionSpec(0.0, 1.0, 0, 0, 0, 0, 1.0, 1.0, 0.1)
        with pytest.raises(AnalyticDomainError):
            s.check_nonvanishing((-1.0, 1.0))

    def test_zero_phi_rejected(self):
        s = AnalyticSolutionSpec(0.0, 1.0, 0, 0, 0, 0, 1.0, 1.0, 0.1)
        with pytest.raises(AnalyticDomainError):
            s.u(0.0, 0.0)

    def test_nonpositive_viscosity(self):
        with pytest.raises(ValueError):
            AnalyticSolutionSpec(1, 0, 0, 0, 0, 0, 1, 1, 0.0)


class TestPresets:
    def test_constants(self):
        p1, p2, p3 = preset(1), preset(2), preset(3)
        assert (p1.eta, p1.lam) == (0.1, 1.8e6)
        assert (p2.eta, p2.lam) == (0.1, 5000.0)
        assert (p3.eta, p3.lam) == (0.01, 500.0)
        assert p3.solution.omega2 == pytest.approx(100 * math.pi)
        assert all(p.solution.nu == pytest.approx(2e-5) for p in (p1, p2, p3))

    def test_unknown(self):
        with pytest.raises(ValueError):
            preset("set4")


class TestFilteredReference:
    def test_matches_bruteforce(self):
        s = preset(2).solution
        spec = FilterSpec(0.1)
        ref = filtered_reference(s, spec, 0.5, np.array([0.2, 0.4]))
        direct = [filter_bruteforce(s.u, spec, (0.5, x)) for x in (0.2, 0.4)]
        np.testing.assert_allclose(ref, direct, rtol=1e-14)

    def test_node_count_sensitivity(self):
        # phi of preset 3 vanishes near x = -0.03, in the far tail of the kernel at x = 0
        s = preset(3).solution
        spec = FilterSpec(0.01)
        edge = [filtered_reference(s, spec, 1.0, 0.0, n_nodes=n) for n in (32, 48, 64)]
        inner = [filtered_reference(s, spec, 1.0, 0.1, n_nodes=n) for n in (32, 48, 64)]
        assert np.ptp(edge) <= 5e-8
        assert np.ptp(inner) <= 1e-12 * abs(inner[0])


class TestForcing:
    def test_default_terms(self):
        f = ForcingSpec.periodic_default()
        t, x = 0.013, 0.37
        expected = (2.3 + math.sin(4 * math.pi * x) + 2.9 * math.sin(99 * math.pi * x)
                    + math.sin(4 * math.pi * t) + 2.9 * math.sin(99 * math.pi * t))
        assert f(t, x) == pytest.approx(expected, rel=1e-14)

    def test_exact_filter_matches_quadrature(self):
        f = ForcingSpec.periodic_default()
        spec = FilterSpec(0.05)
        at = (0.21, 0.63)
        got = f.filtered(spec, "exact")(*at)
        assert got == pytest.approx(filter_bruteforce(f, spec, at, n_nodes=64), abs=1e-10)

    def test_taylor_filter_adds_second_derivatives(self):
        f = ForcingSpec(mean=1.0, spatial=((2.0, 3.0),))
        spec = FilterSpec(0.1)
        got = f.filtered(spec, "taylor")(0.0, 0.4)
        assert got == pytest.approx(1.0 + 2.0 * math.sin(1.2) * (1 - 0.01 * 9 / 6))

    def test_raw_and_unknown_modes(self):
        f = ForcingSpec(mean=1.0)
        assert f.filtered(FilterSpec(0.1), "raw")(0.0, 0.0) == 1.0
        with pytest.raises(ValueError):
            f.filtered(FilterSpec(0.1), "box")

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            ForcingSpec(mean=math.inf)

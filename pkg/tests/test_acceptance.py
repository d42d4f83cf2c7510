"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import time

import numpy as np
import sympy as sp

from lesmodel.analytic import burgers_residual, preset
from lesmodel.closures import ModelParams, closure_1d_exact
from lesmodel.config import build_config
from lesmodel.experiments import (
    experiment_analytic_compare,
    experiment_convergence,
    experiment_forced_periodic,
)
from lesmodel.filtering import FilterSpec, SmoothFunction, T, X
from lesmodel.report import RunReport
from lesmodel.verification import (
    closure_3d_rows,
    exactness_rows,
    identity_rows,
    kernel_rows,
    limit_rows,
)

RESULTS: dict[int, str] = {}


def record(number, title, passed, detail, elapsed, budget):
    """Store and print the criterion line; the runtime budget is part of the verdict."""
    ok = bool(passed) and elapsed <= budget
    line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
            f"  [{elapsed:.2f} s, budget {budget:g} s]")
    RESULTS[number] = line
    print(line)
    return ok


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def asserted(report: RunReport):
    return [r for r in report.rows if r.passed is not None]


def summary(rows):
    return "; ".join(f"{r.name} = {r.value:.4g}" for r in rows)


class TestFilterCalculus:
    def test_01_identity_orders(self):
        report = RunReport("c1")
        with Timer() as tm:
            identity_rows(report)
        checked = [report.row(f"{n} slope") for n in ("filtered expansion", "product expansion", "beta expansion")]
        mixed = report.row("mixed expansion with space factor 1 slope")
        detail = summary(checked) + f"; mixed form with space factor 1 (reported) = {mixed.value:.4g}"
        assert record(1, "filter-identity orders >= 3.7", all(r.passed for r in checked), detail, tm.elapsed, 10)

    def test_02_kernel_normalization(self):
        report = RunReport("c2")
        with Timer() as tm:
            kernel_rows(report, n_specs=20, tol=1e-12)
        rows = asserted(report)
        assert len(rows) == 2
        assert record(2, "kernel normalization <= 1e-12", all(r.passed for r in rows), summary(rows),
                      tm.elapsed, 5)

    def test_03_exactness_classes(self):
        report = RunReport("c3")
        with Timer() as tm:
            exactness_rows(report)
            a, b, eta = 1.7, -0.4, 0.1
            spec = FilterSpec(eta)
            ubar = SmoothFunction(sp.Float(a) * X + sp.Float(b) + 0 * T)
            x = np.linspace(0.0, 1.0, 11)
            tau = closure_1d_exact(ubar, ModelParams(nu=0.01, lam=1.0), spec, (0.3 + 0 * x, x))["tau"]
            expected = eta**2 * a**2 / spec.gamma_L
            rel = float(np.max(np.abs(tau - expected))) / expected
            report.check("1D tau exact on steady affine ubar", rel, rel <= 100 * np.finfo(float).eps,
                         "relative <= 100 eps")
        rows = asserted(report)
        assert record(3, "exactness classes", all(r.passed for r in rows), summary(rows), tm.elapsed, 1)


class TestClosures:
    def test_04_closure_3d_oracle(self):
        report = RunReport("c4")
        with Timer() as tm:
            closure_3d_rows(report, ModelParams(nu=0.3, lam=0.5))
        rows = asserted(report)
        assert {r.name for r in rows} == {"3D tau closure slope", "3D S closure slope"}
        assert record(4, "3D closure oracle slope >= 3.5 at 5 probes", all(r.passed for r in rows),
                      summary(rows), tm.elapsed, 300)


class TestAnalytic:
    def test_05_cole_hopf_residual(self):
        rng = np.random.default_rng(5)
        t, x = rng.uniform(0.0, 1.0, 10_000), rng.uniform(0.0, 1.0, 10_000)
        worst = {}
        with Timer() as tm:
            for set_id in (1, 2, 3):
                s = preset(set_id).solution
                _, u_t, _, _ = s.u_partials(t, x)
                worst[set_id] = float(np.max(np.abs(burgers_residual(s, t, x)) / (1.0 + np.abs(u_t))))
        detail = "; ".join(f"set{k} = {v:.3g}" for k, v in worst.items())
        assert record(5, "Cole-Hopf residual <= 1e-9 relative", max(worst.values()) <= 1e-9, detail,
                      tm.elapsed, 5)


class TestSolverExperiments:
    def test_06_solver_order(self, tmp_path):
        cfg = build_config("convergence")
        cfg.grids = (1 / 40, 1 / 80, 1 / 160)
        with Timer() as tm:
            report = experiment_convergence(cfg, tmp_path, bounds=(1.8, 2.2))
        row = report.row("plain self-convergence order (three grids)")
        analytic = report.row("plain L2 order vs analytic")
        detail = f"self-convergence order = {row.value:.4g}; L2 order vs analytic = {analytic.value:.4g}"
        assert record(6, "plain self-convergence order in [1.8, 2.2]", row.passed, detail, tm.elapsed, 30)

    def test_07_coarse_grid_ordering(self, tmp_path):
        cfg = build_config("analytic-compare")
        cfg.grids = (0.1,)
        with Timer() as tm:
            report = experiment_analytic_compare(cfg, tmp_path)
        row = report.row("ordering dx=0.1: filtered L2 < plain L2")
        assert record(7, "filtered L2 < plain L2 at dx=0.1", row.passed, f"{row.value:.4g} vs {row.detail}",
                      tm.elapsed, 10)

    def test_08_refinement_trend(self, tmp_path):
        cfg = build_config("analytic-compare")
        cfg.grids = (0.1, 0.05, 0.01)
        with Timer() as tm:
            report = experiment_analytic_compare(cfg, tmp_path)
        rows = [report.row("trend: filtered error non-increasing"), report.row("trend: plain error or TV growing")]
        detail = "; ".join(f"{r.name} ({r.detail})" for r in rows)
        assert record(8, "refinement trend", all(r.passed for r in rows), detail, tm.elapsed, 120)

    def test_09_forced_periodic_ordering(self, tmp_path):
        cfg = build_config("forced-periodic")
        cfg.grids = (0.1, 0.05, 0.025)
        cfg.fine_dx = 1e-3
        with Timer() as tm:
            report = experiment_forced_periodic(cfg, tmp_path)
        rows = [report.row("filtered dx=0.1 closer than plain dx=0.1"),
                report.row("filtered dx=0.1 closer than plain dx=0.025")]
        detail = "; ".join(f"{r.name}: {r.value:.4g} vs {r.detail}" for r in rows)
        assert record(9, "forced periodic ordering", all(r.passed for r in rows), detail, tm.elapsed, 300)


class TestLimits:
    def test_10_limit_consistency(self):
        report = RunReport("c10")
        with Timer() as tm:
            limit_rows(report)
        rows = asserted(report)
        assert record(10, "limit consistency", all(r.passed for r in rows), summary(rows), tm.elapsed, 10)

"""Experiment drivers behind the ``les`` command.

Each driver takes an :class:`ExperimentConfig`, runs the solvers, writes
CSV artifacts (with a ``# key = value`` header block) and returns a
:class:`RunReport`.  Nothing random is drawn outside the seeded suites, so
identical configs give byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import AnalyticSolutionSpec, filtered_reference
from .config import ExperimentConfig
from .filtering import FilterSpec, fitted_slope
from .fields import l2_norm_1d
from .report import RunReport, write_header
from .solvers import SolverBlowUp, SolverConfig, Trajectory, run, total_variation
from .verification import closures_suite, filter_suite

log = logging.getLogger(__name__)


# -- shared helpers ------------------------------------------------------------

def _norms(diff: np.ndarray, dx: float) -> tuple[float, float]:
    if not np.all(np.isfinite(diff)):
        return math.inf, math.inf
    return l2_norm_1d(diff, dx), float(np.max(np.abs(diff)))


def _steps(dx: float, ratio: float) -> float:
    """Time step ``ratio * dx`` (rounded so step counts stay integral)."""
    return float(f"{ratio * dx:.12g}")


def _run_safely(cfg: SolverConfig, label: str, report: RunReport) -> tuple[Trajectory | None, bool]:
    with report.timed(label):
        try:
            return run(cfg), False
        except SolverBlowUp as exc:
            log.warning("%s: %s", label, exc)
            report.info(f"{label} blow-up step", exc.step, f"max|u| {exc.max_u:.3e}, CFL {exc.cfl:.3f}")
            return exc.trajectory, True


def _write_rows(path: Path, header: dict, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        write_header(fh, header)
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, str) else f"{v:.17g}" for v in row])


def _tag(value: float) -> str:
    return f"{value:g}"


def _snapshot_or_nan(traj: Trajectory | None, t: float, n: int) -> np.ndarray:
    if traj is None:
        return np.full(n, np.nan)
    try:
        return traj.at(t)
    except KeyError:
        return np.full(n, np.nan)


# -- analytic comparison ---------------------------------------------------------

@dataclass
class CompareResult:
    """Plain and filtered runs on one grid against the analytic references."""

    dx: float
    dt: float
    lam: float
    x: np.ndarray
    plain: Trajectory | None
    filtered: Trajectory | None
    plain_blowup: bool
    filtered_blowup: bool
    errors: dict[str, float] = field(default_factory=dict)
    tv: dict[str, float] = field(default_factory=dict)


def compare_on_grid(cfg: ExperimentConfig, dx: float, report: RunReport,
                    lam: float | None = None, run_plain: bool = True) -> CompareResult:
    """Run the plain and filtered models for ``cfg.analytic`` on one grid."""
    sol: AnalyticSolutionSpec = cfg.analytic
    if sol is None:
        raise ValueError("analytic comparison needs an analytic spec")
    fspec = cfg.filter
    params = cfg.model if lam is None else dataclasses.replace(cfg.model, lam=lam)
    dt = _steps(dx, cfg.step_ratio)
    lo, hi = cfg.domain
    sol.check_nonvanishing((lo, hi), (0.0, max(cfg.t_end, 1e-12)), n=200)

    def fref(t, x):
        return filtered_reference(sol, fspec, t, x)

    if cfg.boundary_reference == "filtered":
        filtered_bc = lambda t: (float(fref(t, lo)), float(fref(t, hi)))  # noqa: E731
    else:
        filtered_bc = lambda t: (float(sol.u(t, lo)), float(sol.u(t, hi)))  # noqa: E731
    common = dict(dx=dx, dt=dt, t_end=cfg.t_end, domain=cfg.domain, bc_mode="dirichlet",
                  advection=cfg.advection, time_order=cfg.time_order,
                  cfl_warn_threshold=cfg.cfl_warn_threshold)
    tag = f"dx={_tag(dx)}" + ("" if lam is None else f",lambda={_tag(lam)}")
    plain = p_blow = None
    if run_plain:
        plain_cfg = SolverConfig(initial_condition=lambda x: sol.u(0.0, x),
                                 boundary=lambda t: (float(sol.u(t, lo)), float(sol.u(t, hi))),
                                 model="plain", params=dataclasses.replace(params, lam=0.0), **common)
        plain, p_blow = _run_safely(plain_cfg, f"plain {tag}", report)
    # raw analytic data is far too steep for the closure at coarse steps
    filt_cfg = SolverConfig(initial_condition=lambda x: fref(0.0, x), boundary=filtered_bc,
                            model="filtered", params=params, filter=fspec, **common)
    filt, f_blow = _run_safely(filt_cfg, f"filtered {tag}", report)
    x = (plain or filt).x
    res = CompareResult(dx, dt, params.lam, x, plain, filt, bool(p_blow), f_blow)

    t = cfg.t_end
    exact, exact_f = sol.u(t, x), fref(t, x)
    if run_plain:
        u_plain = _snapshot_or_nan(None if p_blow else plain, t, x.size)
        res.errors["plain_vs_exact_L2"], res.errors["plain_vs_exact_Linf"] = _norms(u_plain - exact, dx)
        res.errors["plain_vs_filtered_L2"], _ = _norms(u_plain - exact_f, dx)
        res.tv["plain"] = total_variation(u_plain) if np.all(np.isfinite(u_plain)) else math.inf
    u_filt = _snapshot_or_nan(None if f_blow else filt, t, x.size)
    res.errors["filtered_vs_filtered_L2"], res.errors["filtered_vs_filtered_Linf"] = _norms(u_filt - exact_f, dx)
    res.errors["filtered_vs_exact_L2"], _ = _norms(u_filt - exact, dx)
    res.tv["filtered"] = total_variation(u_filt) if np.all(np.isfinite(u_filt)) else math.inf
    res.tv["exact"] = total_variation(exact)
    for norm, value in res.errors.items():
        report.error(tag, norm, value)
    return res


def _snapshot_csv(cfg: ExperimentConfig, res: CompareResult, path: Path) -> None:
    sol, fspec = cfg.analytic, cfg.filter
    x = res.x
    rows = []
    for t in cfg.snapshot_times:
        exact = sol.u(t, x)
        exact_f = filtered_reference(sol, fspec, t, x)
        up = _snapshot_or_nan(res.plain, t, x.size)
        uf = _snapshot_or_nan(res.filtered, t, x.size)
        rows += [(t, *vals) for vals in zip(x, exact, exact_f, up, uf)]
    header = {**cfg.echo(), "run.dx": res.dx, "run.dt": res.dt, "run.lambda": res.lam}
    _write_rows(path, header, ["t", "x", "u_exact", "u_exact_filtered", "u_plain", "u_filtered_model"], rows)


def experiment_analytic_compare(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunReport:
    """Plain against filtered model on each grid of the refinement sequence."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(cfg.kind, cfg.echo())
    grids = cfg.grids or (cfg.dx,)
    results = []
    for dx in grids:
        res = compare_on_grid(cfg, dx, report)
        _snapshot_csv(cfg, res, out / f"snapshots_dx{_tag(dx)}.csv")
        results.append(res)
        e_f = res.errors["filtered_vs_filtered_L2"]
        e_p = res.errors["plain_vs_exact_L2"]
        report.check(f"ordering dx={_tag(dx)}: filtered L2 < plain L2", e_f,
                     (e_f < e_p) if dx == grids[0] else None, f"plain {e_p:.6g}")
        report.info(f"TV dx={_tag(dx)} plain", res.tv["plain"])
        report.info(f"TV dx={_tag(dx)} filtered", res.tv["filtered"])
    if len(results) >= 3:
        f_errs = [r.errors["filtered_vs_filtered_L2"] for r in results]
        p_errs = [r.errors["plain_vs_exact_L2"] for r in results]
        p_tv = [r.tv["plain"] for r in results]
        f_ok = all(b <= a for a, b in zip(f_errs, f_errs[1:]))
        p_err_up = all(b >= a for a, b in zip(p_errs, p_errs[1:]))
        p_tv_up = all(b > a for a, b in zip(p_tv, p_tv[1:]))
        report.check("trend: filtered error non-increasing", f_errs[-1], f_ok,
                     "errors " + ", ".join(f"{e:.4g}" for e in f_errs))
        report.check("trend: plain error or TV growing", p_tv[-1], p_err_up or p_tv_up,
                     "errors " + ", ".join(f"{e:.4g}" for e in p_errs)
                     + "; TV " + ", ".join(f"{v:.4g}" for v in p_tv))
    report.write(out)
    return report


# -- convergence -------------------------------------------------------------------

def experiment_convergence(cfg: ExperimentConfig, out_dir: str | Path | None = None,
                           bounds: tuple[float, float] = (1.8, 2.2)) -> RunReport:
    """Plain-model grid convergence against the analytic solution."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(cfg.kind, cfg.echo())
    sol = cfg.analytic
    lo, hi = cfg.domain
    grids = cfg.grids or (cfg.dx, cfg.dx / 2, cfg.dx / 4)
    finals, errs, linf = [], [], []
    for dx in grids:
        scfg = SolverConfig(dx=dx, dt=_steps(dx, cfg.step_ratio), t_end=cfg.t_end, domain=cfg.domain,
                            initial_condition=lambda x: sol.u(0.0, x),
                            boundary=lambda t: (float(sol.u(t, lo)), float(sol.u(t, hi))),
                            params=dataclasses.replace(cfg.model, lam=0.0), advection=cfg.advection,
                            snapshot_stride=10**9, cfl_warn_threshold=cfg.cfl_warn_threshold)
        traj, blew = _run_safely(scfg, f"plain dx={_tag(dx)}", report)
        u = traj.final if not blew else np.full(traj.x.size, np.nan)
        finals.append(u)
        e2, ei = _norms(u - sol.u(cfg.t_end, traj.x), dx)
        errs.append(e2)
        linf.append(ei)
        report.error(f"dx={_tag(dx)}", "L2", e2)
        report.error(f"dx={_tag(dx)}", "Linf", ei)
    order = fitted_slope(grids, errs) if all(map(math.isfinite, errs)) else math.nan
    report.slope("plain L2 vs analytic", grids, errs, order)
    report.check("plain L2 order vs analytic", order, bounds[0] <= order <= bounds[1],
                 f"in [{bounds[0]}, {bounds[1]}]")
    report.slope("plain Linf vs analytic", grids, linf, fitted_slope(grids, linf) if all(map(math.isfinite, linf)) else math.nan)
    if len(grids) == 3 and math.isclose(grids[0] / grids[1], 2.0) and math.isclose(grids[1] / grids[2], 2.0):
        coarse, mid, fine = finals
        d1 = l2_norm_1d(coarse - mid[::2], grids[0])
        d2 = l2_norm_1d(mid[::2] - fine[::4], grids[0])
        self_order = math.log2(d1 / d2) if d2 > 0 else math.inf
        report.check("plain self-convergence order (three grids)", self_order,
                     bounds[0] <= self_order <= bounds[1],
                     f"in [{bounds[0]}, {bounds[1]}], differences {d1:.4g}, {d2:.4g}")
    report.write(out)
    return report


# -- lambda sweep ------------------------------------------------------------------

def experiment_lambda_sweep(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunReport:
    """Filtered-model errors over a grid of (lambda, dx) cells."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(cfg.kind, cfg.echo())
    lambdas = cfg.lambdas or (0.0, cfg.model.lam, 10.0 * cfg.model.lam)
    grids = cfg.grids or (cfg.dx,)
    rows = []
    for dx in grids:
        plain_err = None
        for lam in lambdas:
            res = compare_on_grid(cfg, dx, report, lam=lam, run_plain=plain_err is None)
            if plain_err is None:
                plain_err = res.errors["plain_vs_exact_L2"]
            e_f = res.errors["filtered_vs_filtered_L2"]
            e_raw = res.errors["filtered_vs_exact_L2"]
            rows.append((lam, dx, res.dt, e_f, res.errors["filtered_vs_filtered_Linf"], e_raw, plain_err))
            report.info(f"cell lambda={_tag(lam)} dx={_tag(dx)} filtered L2", e_f)
            if lam == 0.0:
                # upper bound only: the smoothed start can make this cell far better than plain
                ratio = e_f / plain_err if plain_err > 0 else math.inf
                report.check(f"lambda=0 dx={_tag(dx)}: filtered within 2x of plain", ratio,
                             ratio <= 2.0, f"filtered {e_f:.4g} vs plain {plain_err:.4g}")
    _write_rows(out / "lambda_sweep.csv", cfg.echo(),
                ["lambda", "dx", "dt", "filtered_L2", "filtered_Linf", "filtered_vs_exact_L2", "plain_L2"], rows)
    report.write(out)
    return report


# -- forced periodic -------------------------------------------------------------------

def filter_periodic_trajectory(traj: Trajectory, spec: FilterSpec, t: float) -> np.ndarray:
    """Space-time Gaussian filter of a periodic trajectory at time ``t``.

    Time: discrete Gaussian weights over the stored snapshots (renormalized,
    so the window is one-sided near t = 0).  Space: periodic convolution with
    a normalized discrete Gaussian via FFT.
    """
    times = np.asarray(traj.times)
    values = np.asarray(traj.values)
    wt = np.exp(-0.5 * ((times - t) / spec.sigma_t) ** 2)
    if wt.sum() == 0:
        raise ValueError(f"no snapshots near t={t}")
    u = (wt / wt.sum()) @ values[:, :-1]
    m = u.size
    dx = traj.x[1] - traj.x[0]
    offsets = np.arange(m) - m * (np.arange(m) > m // 2)
    g = np.exp(-0.5 * (offsets * dx / spec.sigma_x) ** 2)
    conv = np.real(np.fft.ifft(np.fft.fft(u) * np.fft.fft(g / g.sum())))
    return np.append(conv, conv[0])


def _sample(fine_x: np.ndarray, fine_u: np.ndarray, x: np.ndarray) -> np.ndarray:
    dxf = fine_x[1] - fine_x[0]
    idx = np.rint((x - fine_x[0]) / dxf).astype(int)
    if not np.allclose(fine_x[idx], x, atol=1e-9):
        raise ValueError("coarse nodes are not nodes of the fine reference")
    return fine_u[idx]


def experiment_forced_periodic(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunReport:
    """Constant start under periodic forcing: plain grids, filtered model and a fine reference."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(cfg.kind, cfg.echo())
    fspec = cfg.filter
    t_probe, x_probe = cfg.profile_time, cfg.probe_x
    u0 = cfg.u0

    def solver(dx, model, t_end, stride=1):
        return SolverConfig(dx=dx, dt=_steps(dx, cfg.step_ratio), t_end=t_end, domain=cfg.domain,
                            bc_mode="periodic", model=model, initial_condition=lambda x: u0 + 0.0 * x,
                            params=cfg.model if model == "filtered" else dataclasses.replace(cfg.model, lam=0.0),
                            filter=fspec if model == "filtered" else None, forcing=cfg.forcing,
                            forcing_filter=cfg.forcing_filter, advection=cfg.advection,
                            time_order=cfg.time_order, snapshot_stride=stride,
                            cfl_warn_threshold=cfg.cfl_warn_threshold)

    t_end = cfg.t_end
    # the fine run extends past the window so the time filter is two-sided at t_end
    fine_dt = _steps(cfg.fine_dx, cfg.step_ratio)
    fine_end = math.ceil((max(t_end, t_probe) + 6.0 * fspec.sigma_t) / fine_dt - 1e-9) * fine_dt
    coarse_dt = _steps(cfg.grids[0] if cfg.grids else cfg.dx, cfg.step_ratio)
    # ten fine snapshots per coarse step keep the discrete time filter accurate
    stride = max(1, int(round(coarse_dt / fine_dt)) // 10)
    fine, fine_blow = _run_safely(solver(cfg.fine_dx, "plain", fine_end, stride), f"fine dx={_tag(cfg.fine_dx)}", report)
    if fine_blow:
        raise SolverBlowUp(0, math.nan, math.nan, fine)
    ref = fine.at(t_probe)
    ref_f = filter_periodic_trajectory(fine, fspec, t_probe)
    report.info("fine reference self-error", l2_norm_1d(ref - fine.at(t_probe), cfg.fine_dx))

    grids = cfg.grids or (cfg.dx,)
    plains, plain_l2 = {}, {}
    for dx in grids:
        traj, blew = _run_safely(solver(dx, "plain", t_end), f"plain dx={_tag(dx)}", report)
        plains[dx] = (traj, blew)
        u = _snapshot_or_nan(None if blew else traj, t_probe, traj.x.size)
        e2, ei = _norms(u - _sample(fine.x, ref, traj.x), dx)
        plain_l2[dx] = e2
        report.error(f"plain dx={_tag(dx)}", "L2", e2)
        report.error(f"plain dx={_tag(dx)}", "Linf", ei)
    dxf = grids[0]
    filt, f_blow = _run_safely(solver(dxf, "filtered", t_end), f"filtered dx={_tag(dxf)}", report)
    u = _snapshot_or_nan(None if f_blow else filt, t_probe, filt.x.size)
    ef2, efi = _norms(u - _sample(fine.x, ref_f, filt.x), dxf)
    report.error(f"filtered dx={_tag(dxf)}", "L2", ef2)
    report.error(f"filtered dx={_tag(dxf)}", "Linf", efi)
    for dx in grids:
        asserted = dx in (grids[0], grids[-1])
        report.check(f"filtered dx={_tag(dxf)} closer than plain dx={_tag(dx)}", ef2,
                     (ef2 < plain_l2[dx]) if asserted else None, f"plain {plain_l2[dx]:.6g}")

    # time series at the probe point on the filtered model's time levels
    times = [t for t in filt.times if t <= t_end + 1e-12]
    header = {**cfg.echo(), "probe_x": x_probe}
    cols = ["t", "u_fine", "u_fine_filtered"] + [f"u_plain_dx{_tag(dx)}" for dx in grids] + ["u_filtered_model"]
    rows = []
    ix_f = int(np.argmin(np.abs(fine.x - x_probe)))
    for t in times:
        fine_t = fine.at(t)
        fine_ft = filter_periodic_trajectory(fine, fspec, t)
        row = [t, fine_t[ix_f], fine_ft[ix_f]]
        for dx in grids:
            traj, blew = plains[dx]
            row.append(_snapshot_or_nan(traj, t, traj.x.size)[int(np.argmin(np.abs(traj.x - x_probe)))])
        row.append(_snapshot_or_nan(filt, t, filt.x.size)[int(np.argmin(np.abs(filt.x - x_probe)))])
        rows.append(row)
    _write_rows(out / f"timeseries_x{_tag(x_probe)}.csv", header, cols, rows)

    profile = [("fine", xi, ui) for xi, ui in zip(fine.x, ref)]
    profile += [("fine_filtered", xi, ui) for xi, ui in zip(fine.x, ref_f)]
    for dx in grids:
        traj, _ = plains[dx]
        profile += [(f"plain_dx{_tag(dx)}", xi, ui)
                    for xi, ui in zip(traj.x, _snapshot_or_nan(traj, t_probe, traj.x.size))]
    profile += [("filtered_model", xi, ui) for xi, ui in zip(filt.x, u)]
    _write_rows(out / f"profile_t{_tag(t_probe)}.csv", {**cfg.echo(), "t": t_probe}, ["run", "x", "u"],
                [(run_id, xi, ui) for run_id, xi, ui in profile])
    report.write(out)
    return report


# -- verification --------------------------------------------------------------------

def experiment_verify(cfg: ExperimentConfig, out_dir: str | Path | None = None,
                      which: str | None = None) -> RunReport:
    """Run the filter and/or closure oracle suites and write the pass/fail table."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    which = which or cfg.kind
    report = RunReport(which, cfg.echo())
    if which in ("verify-filter", "verify"):
        report.extend(filter_suite(seed=cfg.seed))
    if which in ("verify-closures", "verify"):
        report.extend(closures_suite(seed=cfg.seed))
    for s in report.slopes:
        for eta, err in zip(s.steps, s.errors):
            report.error(s.name, f"eta={_tag(eta)}", err)
    report.write(out)
    return report


EXPERIMENTS = {
    "analytic-compare": experiment_analytic_compare,
    "forced-periodic": experiment_forced_periodic,
    "convergence": experiment_convergence,
    "lambda-sweep": experiment_lambda_sweep,
    "verify-filter": experiment_verify,
    "verify-closures": experiment_verify,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunReport:
    return EXPERIMENTS[cfg.kind](cfg, out_dir)

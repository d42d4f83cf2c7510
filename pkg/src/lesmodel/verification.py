"""Oracle suites comparing the Taylor expansions and closures with quadrature.

Every suite returns a :class:`RunReport` whose asserted rows carry the
tolerances used by the acceptance tests.
"""

from __future__ import annotations

import math

import numpy as np
import sympy as sp

from .closures import ModelParams, closure_3d_exact, closure_1d_exact
from .fields import FieldHistory, SpaceTimeGrid
from .filtering import (
    SPACE_SYMBOLS,
    FilterSpec,
    SmoothFunction,
    T,
    X,
    filter_bruteforce,
    filter_bruteforce_many,
    fitted_slope,
    kernel_integral,
    taylor_beta_filter,
    taylor_filter,
    taylor_filtered,
    taylor_mixed_filter,
    taylor_product_filter,
    taylor_product_filtered,
    taylor_unfilter,
)
from .report import RunReport
from .solvers import rhs_filtered, rhs_generalized

ETAS = (0.1, 0.05, 0.025, 0.0125)
IDENTITY_SLOPE = 3.7
CLOSURE_SLOPE = 3.5
LIMIT_SLOPE = 1.9
PROBES_1D = ((0.0, 0.0), (0.3, 0.1), (0.7, 0.45), (1.1, 0.8), (-0.4, 0.62))
PROBES_3D = ((0.0, 0.1, 0.2, 0.3), (0.2, 0.45, 0.05, 0.7), (0.5, 0.8, 0.33, 0.12),
             (0.9, 0.27, 0.61, 0.94), (0.3, 0.66, 0.9, 0.48))

F1 = SmoothFunction(sp.sin(2 * sp.pi * X + 3 * T))
G1 = SmoothFunction(sp.cos(4 * sp.pi * X - T) + sp.Rational(1, 2) * sp.sin(2 * sp.pi * X))


def _max_residual(fn_a, fn_b, probes) -> float:
    return max(abs(float(fn_a(p)) - float(fn_b(p))) for p in probes)


def _study(report: RunReport, name: str, taylor, exact, probes, threshold: float | None,
           etas=ETAS, spec: FilterSpec | None = None) -> float:
    spec = spec or FilterSpec(etas[0])
    errs = []
    for eta in etas:
        s = spec.with_eta(eta)
        errs.append(_max_residual(lambda p: taylor(s, p), lambda p: exact(s, p), probes))
    slope = fitted_slope(etas, errs)
    report.slope(name, etas, errs, slope)
    report.check(f"{name} slope", slope, None if threshold is None else slope >= threshold,
                 "descriptive" if threshold is None else f">= {threshold}")
    return slope


# -- filter calculus --------------------------------------------------------

def kernel_rows(report: RunReport, n_specs: int = 20, seed: int = 0, tol: float = 1e-12) -> None:
    rng = np.random.default_rng(seed)
    for dim in (1, 3):
        worst = 0.0
        for _ in range(n_specs):
            spec = FilterSpec(eta=float(rng.uniform(0.01, 0.5)), gamma_T=float(rng.uniform(1.0, 12.0)),
                              gamma_L=float(rng.uniform(1.0, 12.0)), spatial_dim=dim)
            worst = max(worst, abs(kernel_integral(spec) - 1.0))
        report.check(f"kernel normalization {dim}D", worst, worst <= tol, f"max over {n_specs} specs <= {tol:g}")


def exactness_rows(report: RunReport, seed: int = 0) -> None:
    """Expansion identities that hold exactly on low-degree polynomials."""
    rng = np.random.default_rng(seed)
    eps = np.finfo(float).eps
    spec = FilterSpec(0.1)
    probes = tuple(np.array(v, dtype=float) for v in zip(*PROBES_1D))
    worst = 0.0
    for _ in range(5):
        c = [sp.Float(v) for v in rng.uniform(-2.0, 2.0, 6)]
        f = SmoothFunction(c[0] + c[1] * X + c[2] * X**2 + c[3] * X**3 + c[4] * T**3 + c[5] * T * X**2)
        exact = filter_bruteforce(f, spec, probes)
        rel = np.abs(taylor_filtered(f, spec)(*probes) - exact) / np.maximum(1.0, np.abs(exact))
        worst = max(worst, float(rel.max()))
    report.check("filtered expansion exact on cubics", worst, worst <= 100 * eps, "relative <= 100 eps")

    worst = 0.0
    for _ in range(5):
        a = [sp.Float(v) for v in rng.uniform(-2.0, 2.0, 6)]
        f = SmoothFunction(a[0] + a[1] * X + a[2] * T)
        g = SmoothFunction(a[3] + a[4] * X + a[5] * T)
        exact = filter_bruteforce(f * g, spec, probes)
        rel = np.abs(taylor_product_filtered(f, g, spec)(*probes) - exact) / np.maximum(1.0, np.abs(exact))
        worst = max(worst, float(rel.max()))
    report.check("product expansion exact on affine pairs", worst, worst <= 100 * eps, "relative <= 100 eps")


def identity_rows(report: RunReport, f: SmoothFunction = F1, g: SmoothFunction = G1,
                  probes=PROBES_1D) -> None:
    beta = lambda s: sp.sqrt(1 + s**2)  # noqa: E731
    _study(report, "filtered expansion", lambda s, p: taylor_filter(f, s, p),
           lambda s, p: filter_bruteforce(f, s, p), probes, IDENTITY_SLOPE)
    _study(report, "unfiltered expansion", lambda s, p: taylor_unfilter(taylor_filtered(f, s), s, p),
           lambda s, p: f(*p), probes, IDENTITY_SLOPE)
    _study(report, "product expansion", lambda s, p: taylor_product_filter(f, g, s, p),
           lambda s, p: filter_bruteforce(f * g, s, p), probes, IDENTITY_SLOPE)
    beta_fg = SmoothFunction(sp.sqrt(1 + f.expr**2) * g.expr)
    _study(report, "beta expansion", lambda s, p: taylor_beta_filter(beta, f, g, s, p),
           lambda s, p: filter_bruteforce(beta_fg, s, p), probes, IDENTITY_SLOPE)
    _study(report, "mixed expansion with space factor 1", lambda s, p: taylor_mixed_filter(f, g, s, p),
           lambda s, p: filter_bruteforce(f * g, s, p), probes, None)
    _study(report, "mixed expansion with space factor 2",
           lambda s, p: taylor_mixed_filter(f, g, s, p, space_factor=2.0),
           lambda s, p: filter_bruteforce(f * g, s, p), probes, None)


def filter_suite(seed: int = 0) -> RunReport:
    report = RunReport("verify-filter")
    with report.timed("kernel"):
        kernel_rows(report, seed=seed)
    with report.timed("exactness"):
        exactness_rows(report, seed=seed)
    with report.timed("identities"):
        identity_rows(report)
    return report


# -- closures -----------------------------------------------------------------

def _damped(expr, k2_space: float, k2_time: float, spec: FilterSpec):
    """Exact filter of a single sinusoid with squared wavenumbers ``k2_*``."""
    return expr * sp.exp(-spec.eta**2 * (k2_space / spec.gamma_L + k2_time / spec.gamma_T))


def closure_1d_rows(report: RunReport, p: ModelParams, probes=PROBES_1D) -> None:
    k, w = 2.0 * math.pi, 1.0
    u = SmoothFunction(sp.sin(2 * sp.pi * X + T))
    ux = u.diff("x").expr
    stress = SmoothFunction(p.nu * sp.sqrt(1 + p.lam**2 * ux**2) * ux)
    square = u * u

    def ubar(s):
        return SmoothFunction(_damped(u.expr, k * k, w * w, s))

    # 1D tau belongs to the u^2/2 flux, hence the half
    _study(report, "1D S closure", lambda s, q: closure_1d_exact(ubar(s), p, s, q)["S"],
           lambda s, q: filter_bruteforce(stress, s, q), probes, CLOSURE_SLOPE)
    _study(report, "1D tau closure", lambda s, q: closure_1d_exact(ubar(s), p, s, q)["tau"],
           lambda s, q: 0.5 * (filter_bruteforce(square, s, q) - ubar(s)(*q) ** 2), probes,
           CLOSURE_SLOPE)


def _field_3d():
    """Steady solenoidal test field and its wavenumber (per component)."""
    x, y, z = SPACE_SYMBOLS
    two_pi = 2 * sp.pi
    return [sp.sin(two_pi * z), sp.sin(two_pi * x), sp.sin(two_pi * y)], (2.0 * math.pi) ** 2


def _oracle_3d(p: ModelParams, spec: FilterSpec, probes, n_nodes: int) -> np.ndarray:
    """Brute-force filtered ``u_i u_j`` and ``S_ij`` (upper triangles), shape (probes, 2, 6)."""
    u, _ = _field_3d()
    grads = [[sp.diff(ui, s) for s in SPACE_SYMBOLS] for ui in u]
    D = [[(grads[i][j] + grads[j][i]) / 2 for j in range(3)] for i in range(3)]
    norm2 = sum(D[i][j] ** 2 for i in range(3) for j in range(3))
    mu = p.nu * sp.sqrt(1 + p.lam**2 * norm2)
    tri = [(i, j) for i in range(3) for j in range(i, 3)]
    exprs = [u[i] * u[j] for i, j in tri] + [2 * mu * D[i][j] for i, j in tri]
    funcs = [SmoothFunction(e, 3) for e in exprs]
    out = []
    for at in probes:
        vals = filter_bruteforce_many(funcs, spec, at, n_nodes=n_nodes)
        out.append(np.array(vals, dtype=float).reshape(2, 6))
    return np.array(out)


def _closure_3d_values(p: ModelParams, spec: FilterSpec, probes, grouping: str) -> np.ndarray:
    u, k2 = _field_3d()
    ubar = [SmoothFunction(_damped(ui, k2, 0.0, spec), 3) for ui in u]
    tri = [(i, j) for i in range(3) for j in range(i, 3)]
    out = []
    for at in probes:
        terms = closure_3d_exact(ubar, p, spec, at, khat_grouping=grouping)
        ub = np.array([float(c(*at)) for c in ubar])
        tau = [float(terms["tau"][i, j]) for i, j in tri]
        S = [float(terms["S"][i, j]) for i, j in tri]
        out.append((tau, S, ub))
    return out


def closure_3d_rows(report: RunReport, p: ModelParams, probes=PROBES_3D, n_nodes: int = 24,
                    etas=ETAS) -> None:
    """tau_ij and S_ij against 4-axis quadrature, for both Khat groupings."""
    tri = [(i, j) for i in range(3) for j in range(i, 3)]
    errs = {"tau": [], "S": [], "S_nu_partial": []}
    for eta in etas:
        spec = FilterSpec(eta, spatial_dim=3)
        oracle = _oracle_3d(p, spec, probes, n_nodes)
        main = _closure_3d_values(p, spec, probes, "nu_all")
        partial = _closure_3d_values(p, spec, probes, "nu_partial")
        e_tau = e_S = e_P = 0.0
        for k, ((tau, S, ub), (_, S_p, _)) in enumerate(zip(main, partial)):
            product_bar = oracle[k, 0]
            tau_ref = product_bar - np.array([ub[i] * ub[j] for i, j in tri])
            e_tau = max(e_tau, float(np.max(np.abs(np.array(tau) - tau_ref))))
            e_S = max(e_S, float(np.max(np.abs(np.array(S) - oracle[k, 1]))))
            e_P = max(e_P, float(np.max(np.abs(np.array(S_p) - oracle[k, 1]))))
        errs["tau"].append(e_tau)
        errs["S"].append(e_S)
        errs["S_nu_partial"].append(e_P)
    for name, threshold in (("tau", CLOSURE_SLOPE), ("S", CLOSURE_SLOPE), ("S_nu_partial", None)):
        slope = fitted_slope(etas, errs[name])
        label = f"3D {name} closure"
        report.slope(label, etas, errs[name], slope)
        report.check(f"{label} slope", slope, None if threshold is None else slope >= threshold,
                     "descriptive" if threshold is None else f">= {threshold}, {len(probes)} probes")


def limit_rows(report: RunReport, seed: int = 0, n: int = 41) -> None:
    """lambda = 0 reduces the generalized RHS to the plain one; filtered tends to generalized."""
    from .fields import ScalarField
    from .solvers import rhs_plain

    rng = np.random.default_rng(seed)
    grid = SpaceTimeGrid((0.0,), (1.0,), (n,), 1e-3)
    worst = 0.0
    for _ in range(20):
        u = ScalarField(grid, rng.normal(size=n))
        for mode in ("periodic", "one-sided"):
            a = rhs_plain(u, 0.01, mode=mode).values
            b = rhs_generalized(u, ModelParams(nu=0.01, lam=0.0, q=float(rng.uniform(0, 2))),
                                mode=mode).values
            worst = max(worst, float(np.max(np.abs(a - b))))
    report.check("lambda=0 generalized equals plain", worst, worst == 0.0, "bitwise on 20 random states")

    p = ModelParams(nu=0.01, lam=2.0)
    x = grid.coords(0)
    hist = FieldHistory(3, grid.dt)
    for k in (2, 1, 0):
        t = -k * grid.dt
        hist.push(t, np.sin(2 * np.pi * x + t) + 0.3 * np.cos(4 * np.pi * x))
    gen = rhs_generalized(ScalarField(grid, hist.newest), p, mode="periodic").values
    errs = []
    for eta in ETAS:
        filt = rhs_filtered(hist, grid, p, FilterSpec(eta), mode="periodic").values
        errs.append(float(np.max(np.abs(filt - gen))))
    slope = fitted_slope(ETAS, errs)
    report.slope("filtered RHS to generalized RHS", ETAS, errs, slope)
    report.check("filtered RHS to generalized RHS slope", slope, slope >= LIMIT_SLOPE, f">= {LIMIT_SLOPE}")


def closures_suite(seed: int = 0, n_nodes: int = 24) -> RunReport:
    report = RunReport("verify-closures")
    with report.timed("1D"):
        closure_1d_rows(report, ModelParams(nu=0.3, lam=1.0))
    with report.timed("3D"):
        closure_3d_rows(report, ModelParams(nu=0.3, lam=0.5), n_nodes=n_nodes)
    with report.timed("limits"):
        limit_rows(report, seed=seed)
    return report

"""Nonlinear effective viscosity and the filtered-model closure terms.

The effective viscosity is ``mu_0 (1 + lambda^2 |D|^2)^q``.  For ``q = 1/2``
filtering the generalized momentum flux leaves two closure contributions:

* ``tau``, the subgrid tensor from the advection term;
* ``S``, the filtered nonlinear viscous stress.

Both are available from grid fields (second-order stencils, backward time
differences) and from closed-form fields (exact derivatives).  The two
paths share :func:`terms_1d` / :func:`terms_3d`, which only see derivative
arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import sympy as sp

from .fields import (
    FieldHistory,
    GridError,
    InsufficientHistoryError,
    ScalarField,
    SpaceTimeGrid,
    TensorField3,
    diff1,
    diff2,
    strain_rate,
    time_derivative,
)
from .filtering import SPACE_SYMBOLS, T, FilterSpec, SmoothFunction

KHAT_GROUPINGS = ("nu_all", "nu_partial")


@dataclass(frozen=True)
class ModelParams:
    nu: float
    lam: float = 0.0
    q: float = 0.5
    rho0: float = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.q < 0:
            raise ValueError("q must be non-negative")
        if not self.rho0 > 0:
            raise ValueError("rho0 must be positive")

    @property
    def mu0(self) -> float:
        return self.nu * self.rho0

    def require_filtered(self) -> None:
        if self.q != 0.5:
            raise ValueError(f"filtered closures are derived for q = 1/2, got q = {self.q}")


@dataclass(frozen=True)
class ClosureTerms1D:
    tau: ScalarField
    S: ScalarField
    K4: ScalarField
    K5: ScalarField


@dataclass(frozen=True)
class ClosureTerms3D:
    tau: TensorField3
    S: TensorField3
    K1: ScalarField
    K2: ScalarField
    K3: ScalarField
    Khat: TensorField3


def effective_viscosity(D_norm, p: ModelParams):
    D_norm = np.asarray(D_norm, dtype=float)
    if np.any(D_norm < 0):
        raise ValueError("strain-rate norm must be non-negative")
    out = p.mu0 * (1.0 + p.lam**2 * D_norm**2) ** p.q
    return float(out) if out.ndim == 0 else out


# -- 1D ---------------------------------------------------------------------

def terms_1d(ux, uxx, ut, utx, p: ModelParams, spec: FilterSpec) -> dict[str, np.ndarray]:
    """Pointwise 1D closure from the filtered velocity's derivatives."""
    eta2 = spec.eta**2
    lam2 = p.lam**2
    base = 1.0 + lam2 * ux**2
    tau = eta2 * (ut**2 / spec.gamma_T + ux**2 / spec.gamma_L)
    K4 = np.sqrt(base)
    K5 = base**-1.5 * (utx**2 / spec.gamma_T + uxx**2 / spec.gamma_L) * (3.0 + 2.0 * lam2 * ux**2)
    S = p.nu * (K4 + lam2 * K5 * eta2) * ux
    return {"tau": tau, "S": S, "K4": K4, "K5": K5}


def _check_1d(p: ModelParams, spec: FilterSpec) -> None:
    p.require_filtered()
    if spec.spatial_dim != 1:
        raise ValueError("closure_1d needs a 1D filter")


def closure_1d(history: FieldHistory, grid: SpaceTimeGrid, p: ModelParams, spec: FilterSpec,
               mode: str = "one-sided", time_order: int | None = None) -> ClosureTerms1D:
    """Closure terms at the newest level of a history of filtered velocities."""
    _check_1d(p, spec)
    if len(history) < 2:
        raise InsufficientHistoryError("closure_1d needs at least two time levels")
    if time_order is None:
        time_order = 2 if len(history) >= 3 else 1
    dx = grid.dx[0]
    u = history.newest
    ux = diff1(u, dx, 0, mode)
    uxx = diff2(u, dx, 0, mode)
    ut = time_derivative(history, time_order)
    utx = diff1(ut, dx, 0, mode)
    terms = terms_1d(ux, uxx, ut, utx, p, spec)
    return ClosureTerms1D(**{k: ScalarField(grid, v) for k, v in terms.items()})


def closure_1d_exact(ubar: SmoothFunction, p: ModelParams, spec: FilterSpec, at) -> dict:
    """Closure terms of a closed-form filtered velocity ``ubar(t, x)``."""
    _check_1d(p, spec)
    t, x = at
    ux = ubar.diff("x")(t, x)
    return terms_1d(ux, ubar.diff("x", "x")(t, x), ubar.diff("t")(t, x),
                    ubar.diff("t", "x")(t, x), p, spec)


# -- 3D ---------------------------------------------------------------------

def terms_3d(grad_u, ut, D, Dt, gradD, p: ModelParams, spec: FilterSpec,
             khat_grouping: str = "nu_all") -> dict[str, np.ndarray]:
    """Pointwise 3D closure.

    Shapes: ``grad_u[i, k] = d u_i / d x_k`` is ``(3, 3, ...)``, ``ut`` is
    ``(3, ...)``, ``D`` and ``Dt`` are ``(3, 3, ...)`` and
    ``gradD[m, n, k] = d D_mn / d x_k`` is ``(3, 3, 3, ...)``.

    ``khat_grouping="nu_all"`` multiplies the Khat term by nu, like the rest
    of S; ``"nu_partial"`` leaves it without nu.
    """
    if khat_grouping not in KHAT_GROUPINGS:
        raise ValueError(f"khat_grouping must be one of {KHAT_GROUPINGS}")
    gT, gL = spec.gamma_T, spec.gamma_L
    eta2 = spec.eta**2
    lam2 = p.lam**2

    K1 = np.einsum("mn...,mn...->...", D, D)
    K2 = (np.einsum("mn...,mn...->...", Dt, Dt) / gT
          + np.einsum("mnk...,mnk...->...", gradD, gradD) / gL)
    K1t = 2.0 * np.einsum("mn...,mn...->...", D, Dt)
    gradK1 = 2.0 * np.einsum("mn...,mnk...->k...", D, gradD)
    K3 = K1t**2 / gT + np.einsum("k...,k...->...", gradK1, gradK1) / gL
    Khat = K1t * Dt / gT + np.einsum("k...,ijk...->ij...", gradK1, gradD) / gL

    base = 1.0 + lam2 * K1
    coeff = (np.sqrt(base) + lam2 * K2 * eta2 / np.sqrt(base)
             - 0.25 * lam2**2 * K3 * eta2 * base**-1.5)
    khat_factor = p.nu if khat_grouping == "nu_all" else 1.0
    S = 2.0 * p.nu * coeff * D + 2.0 * khat_factor * lam2 * Khat * eta2 / np.sqrt(base)
    tau = 2.0 * eta2 * (np.einsum("i...,j...->ij...", ut, ut) / gT
                        + np.einsum("ik...,jk...->ij...", grad_u, grad_u) / gL)
    return {"tau": tau, "S": S, "K1": K1, "K2": K2, "K3": K3, "Khat": Khat}


def _check_3d(p: ModelParams, spec: FilterSpec) -> None:
    p.require_filtered()
    if spec.spatial_dim != 3:
        raise ValueError("closure_3d needs a 3D filter")


def _sym(g):
    return 0.5 * (g + np.swapaxes(g, 0, 1))


def closure_3d(history: FieldHistory, grid: SpaceTimeGrid, p: ModelParams, spec: FilterSpec,
               mode: str = "one-sided", time_order: int | None = None,
               khat_grouping: str = "nu_all") -> ClosureTerms3D:
    """Closure terms for a history of velocity levels of shape ``(3, *n)``."""
    _check_3d(p, spec)
    if grid.ndim != 3:
        raise GridError("closure_3d needs a 3D grid")
    if len(history) < 2:
        raise InsufficientHistoryError("closure_3d needs at least two time levels")
    if time_order is None:
        time_order = 2 if len(history) >= 3 else 1
    u = history.newest
    if u.shape != (3,) + grid.n_points:
        raise GridError(f"velocity levels must have shape {(3,) + grid.n_points}")

    def grad(a):
        return np.stack([diff1(a, grid.dx[k], k, mode) for k in range(3)])

    grad_u = np.stack([grad(u[i]) for i in range(3)])
    ut = time_derivative(history, time_order)
    D = _sym(grad_u)
    Dt = _sym(np.stack([grad(ut[i]) for i in range(3)]))
    gradD = np.stack([np.stack([grad(D[m, n]) for n in range(3)]) for m in range(3)])
    terms = terms_3d(grad_u, ut, D, Dt, gradD, p, spec, khat_grouping)
    return _pack_3d(grid, terms)


def _pack_3d(grid: SpaceTimeGrid, terms: dict) -> ClosureTerms3D:
    return ClosureTerms3D(
        tau=TensorField3.from_full(grid, terms["tau"]),
        S=TensorField3.from_full(grid, terms["S"]),
        K1=ScalarField(grid, terms["K1"]),
        K2=ScalarField(grid, terms["K2"]),
        K3=ScalarField(grid, terms["K3"]),
        Khat=TensorField3.from_full(grid, terms["Khat"]),
    )


def closure_3d_exact(ubar: Sequence[SmoothFunction], p: ModelParams, spec: FilterSpec, at,
                     khat_grouping: str = "nu_all") -> dict[str, np.ndarray]:
    """Closure terms of a closed-form filtered velocity at ``at = (t, x, y, z)``."""
    _check_3d(p, spec)
    if len(ubar) != 3:
        raise ValueError("need three velocity components")
    exprs = [u._require_expr() for u in ubar]
    sym = (T,) + SPACE_SYMBOLS

    def ev(e):
        fn = sp.lambdify(sym, e, modules="numpy")
        args = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in at))
        return np.broadcast_to(np.asarray(fn(*args), dtype=float), args[0].shape) + 0.0

    Gs = [[sp.diff(exprs[i], s) for s in SPACE_SYMBOLS] for i in range(3)]
    Ds = [[(Gs[i][j] + Gs[j][i]) / 2 for j in range(3)] for i in range(3)]
    grad_u = np.array([[ev(Gs[i][k]) for k in range(3)] for i in range(3)])
    ut = np.array([ev(sp.diff(e, T)) for e in exprs])
    D = np.array([[ev(Ds[i][j]) for j in range(3)] for i in range(3)])
    Dt = np.array([[ev(sp.diff(Ds[i][j], T)) for j in range(3)] for i in range(3)])
    gradD = np.array([[[ev(sp.diff(Ds[m][n], s)) for s in SPACE_SYMBOLS]
                       for n in range(3)] for m in range(3)])
    return terms_3d(grad_u, ut, D, Dt, gradD, p, spec, khat_grouping)


def stress_tensor(u: Sequence[ScalarField], p: ModelParams, pressure: ScalarField,
                  mode: str = "one-sided") -> TensorField3:
    """Cauchy stress -p I + 2 mu_e(|D|) D."""
    if not pressure.grid.same_space(u[0].grid):
        raise GridError("pressure and velocity live on different grids")
    D = strain_rate(u, mode)
    mu = effective_viscosity(D.frobenius_norm(), p)
    full = 2.0 * mu * D.full()
    for i in range(3):
        full[i, i] -= pressure.values
    return TensorField3.from_full(D.grid, full)

"""MacCormack integration of the 1D Burgers models.

Three right-hand sides share the same discretization:

``plain``
    u_t = -(u^2/2)_x + nu u_xx + f
``generalized``
    u_t = -(u^2/2)_x + nu ((1 + lambda^2 u_x^2)^q u_x)_x + f
``filtered``
    u_t = -(u^2/2)_x + (S - tau)_x + fbar, with S and tau from the
    closure evaluated on the history of u.

Viscous and closure fluxes live on cell faces (compact three-point
divergence).  The advective flux uses forward differences in the predictor
and backward differences in the corrector.  With ``lambda = 0`` the
generalized flux reduces to the plain one bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .closures import ModelParams, terms_1d
from .fields import FieldHistory, ScalarField, SpaceTimeGrid, backward_time_derivative
from .filtering import FilterSpec

log = logging.getLogger(__name__)

MODELS = ("plain", "generalized", "filtered")
BC_MODES = ("periodic", "dirichlet")
ADVECTION_FORMS = ("conservative", "nonconservative")


class SolverBlowUp(FloatingPointError):
    def __init__(self, step: int, max_u: float, cfl: float, trajectory: "Trajectory | None" = None):
        super().__init__(f"non-finite solution at step {step} (max|u| before step {max_u:.3e}, CFL {cfl:.3f})")
        self.step = step
        self.max_u = max_u
        self.cfl = cfl
        self.trajectory = trajectory


@dataclass
class SolverConfig:
    dx: float
    dt: float
    t_end: float
    initial_condition: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float] = (0.0, 1.0)
    bc_mode: str = "dirichlet"
    model: str = "plain"
    params: ModelParams = field(default_factory=lambda: ModelParams(nu=1.0 / 50000.0))
    filter: FilterSpec | None = None
    forcing: object = None
    forcing_filter: str = "exact"
    boundary: Callable[[float], tuple[float, float]] | None = None
    advection: str = "conservative"
    time_order: int = 2
    snapshot_stride: int = 1
    cfl_warn_threshold: float = 1.0

    def __post_init__(self):
        if not (self.dx > 0 and self.dt > 0):
            raise ValueError("dx and dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if not self.domain[1] > self.domain[0]:
            raise ValueError("degenerate domain")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.bc_mode not in BC_MODES:
            raise ValueError(f"bc_mode must be one of {BC_MODES}")
        if self.advection not in ADVECTION_FORMS:
            raise ValueError(f"advection must be one of {ADVECTION_FORMS}")
        if self.model == "filtered":
            if self.filter is None:
                raise ValueError("the filtered model needs a FilterSpec")
            self.params.require_filtered()
        if self.bc_mode == "dirichlet" and self.boundary is None:
            raise ValueError("dirichlet boundaries need a boundary callable")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def grid(self) -> SpaceTimeGrid:
        return SpaceTimeGrid.from_spacing(self.domain[0], self.domain[1], self.dx, self.dt)

    @property
    def n_steps(self) -> int:
        n = self.t_end / self.dt
        if abs(n - round(n)) > 1e-6:
            raise ValueError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")
        return int(round(n))


@dataclass
class Trajectory:
    x: np.ndarray
    times: list[float] = field(default_factory=list)
    values: list[np.ndarray] = field(default_factory=list)

    def record(self, t: float, u: np.ndarray) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("snapshot times must increase")
        self.times.append(float(t))
        self.values.append(np.array(u, dtype=float))

    def at(self, t: float, tol: float = 1e-9) -> np.ndarray:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > tol + 1e-9 * abs(t):
            raise KeyError(f"no snapshot at t={t}")
        return self.values[i]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def to_csv(self, path: str | Path, header: dict | None = None) -> None:
        with open(path, "w") as fh:
            for k, v in (header or {}).items():
                fh.write(f"# {k} = {v}\n")
            fh.write("t,x,u\n")
            for t, u in zip(self.times, self.values):
                for xi, ui in zip(self.x, u):
                    fh.write(f"{t:.10g},{xi:.10g},{ui:.17g}\n")


# -- discrete operators ---------------------------------------------------

class Stencil1D:
    """Face/node operators on the solver state.

    In periodic mode the state holds the ``m = n - 1`` distinct nodes and
    there are ``m`` faces (face ``i`` sits between node ``i`` and ``i+1``).
    Otherwise the state holds all ``n`` nodes, there are ``n - 1`` faces and
    boundary rows of every divergence are zero.
    """

    def __init__(self, dx: float, periodic: bool):
        self.dx = dx
        self.periodic = periodic

    def face_diff(self, u):
        if self.periodic:
            return (np.roll(u, -1) - u) / self.dx
        return (u[1:] - u[:-1]) / self.dx

    def face_avg(self, a):
        if self.periodic:
            return 0.5 * (a + np.roll(a, -1))
        return 0.5 * (a[1:] + a[:-1])

    def div(self, face_flux):
        if self.periodic:
            return (face_flux - np.roll(face_flux, 1)) / self.dx
        out = np.zeros(face_flux.size + 1)
        out[1:-1] = (face_flux[1:] - face_flux[:-1]) / self.dx
        return out

    def node_d2(self, u):
        if self.periodic:
            return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / self.dx**2
        out = np.empty_like(u)
        out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / self.dx**2
        if u.size >= 4:
            out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / self.dx**2
            out[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / self.dx**2
        else:
            out[0], out[-1] = out[1], out[-2]
        return out

    def advection(self, u, bias: str, form: str = "conservative"):
        """(u^2/2)_x with a forward, backward or central difference."""
        if form == "conservative":
            a = 0.5 * u * u
        else:
            a = u
        if self.periodic:
            if bias == "forward":
                d = (np.roll(a, -1) - a) / self.dx
            elif bias == "backward":
                d = (a - np.roll(a, 1)) / self.dx
            else:
                d = (np.roll(a, -1) - np.roll(a, 1)) / (2.0 * self.dx)
        else:
            d = np.zeros_like(a)
            if bias == "forward":
                d[1:-1] = (a[2:] - a[1:-1]) / self.dx
            elif bias == "backward":
                d[1:-1] = (a[1:-1] - a[:-2]) / self.dx
            else:
                d[1:-1] = (a[2:] - a[:-2]) / (2.0 * self.dx)
        return d if form == "conservative" else u * d


def _viscous_flux(w, p: ModelParams):
    """nu (1 + lambda^2 w^2)^q w on faces."""
    base = 1.0 + p.lam**2 * w * w
    k = np.sqrt(base) if p.q == 0.5 else base**p.q
    return p.nu * (k * w)


def _plain_rhs(u, nu, f, st: Stencil1D, bias, form):
    return -st.advection(u, bias, form) + st.div(nu * st.face_diff(u)) + f


def _generalized_rhs(u, p, f, st: Stencil1D, bias, form):
    return -st.advection(u, bias, form) + st.div(_viscous_flux(st.face_diff(u), p)) + f


def _closure_flux(levels, dt, p, spec, st: Stencil1D, time_order):
    """S - tau on faces from state levels (newest first)."""
    u = levels[0]
    order = min(time_order, len(levels) - 1)
    ut = backward_time_derivative(levels, dt, order)
    terms = terms_1d(st.face_diff(u), st.face_avg(st.node_d2(u)), st.face_avg(ut),
                     st.face_diff(ut), p, spec)
    return terms["S"] - terms["tau"]


def _filtered_rhs(levels, dt, p, spec, fbar, st: Stencil1D, bias, form, time_order):
    u = levels[0]
    return -st.advection(u, bias, form) + st.div(_closure_flux(levels, dt, p, spec, st, time_order)) + fbar


# -- public RHS evaluation on fields ---------------------------------------

def _mode_setup(u: ScalarField, mode: str):
    periodic = mode == "periodic"
    vals = np.asarray(u.values, dtype=float)
    return Stencil1D(u.grid.dx[0], periodic), (vals[:-1] if periodic else vals)


def _forcing_array(f, t, x):
    if f is None:
        return np.zeros_like(x)
    if callable(f):
        return np.asarray(f(t, x), dtype=float) + np.zeros_like(x)
    return np.asarray(f, dtype=float) + np.zeros_like(x)


def _as_field(grid, state, periodic):
    return ScalarField(grid, np.append(state, state[0]) if periodic else state)


def rhs_plain(u: ScalarField, nu: float, f=None, mode: str = "one-sided", t: float = 0.0,
              form: str = "conservative") -> ScalarField:
    """Plain Burgers tendency with centred advection.

    Non-periodic boundary rows carry only the forcing.
    """
    st, s = _mode_setup(u, mode)
    x = u.grid.coords(0)[: s.size]
    return _as_field(u.grid, _plain_rhs(s, nu, _forcing_array(f, t, x), st, "central", form), st.periodic)


def rhs_generalized(u: ScalarField, p: ModelParams, f=None, mode: str = "one-sided",
                    t: float = 0.0, form: str = "conservative") -> ScalarField:
    st, s = _mode_setup(u, mode)
    x = u.grid.coords(0)[: s.size]
    return _as_field(u.grid, _generalized_rhs(s, p, _forcing_array(f, t, x), st, "central", form),
                     st.periodic)


def rhs_filtered(history: FieldHistory, grid: SpaceTimeGrid, p: ModelParams, spec: FilterSpec,
                 fbar=None, mode: str = "one-sided", time_order: int = 2,
                 form: str = "conservative") -> ScalarField:
    """Filtered-model tendency at the newest level of ``history`` (full-grid levels)."""
    p.require_filtered()
    if len(history) < 2:
        from .fields import InsufficientHistoryError
        raise InsufficientHistoryError("rhs_filtered needs at least two levels")
    periodic = mode == "periodic"
    st = Stencil1D(grid.dx[0], periodic)
    levels = [np.asarray(history.level(k))[:-1] if periodic else np.asarray(history.level(k))
              for k in range(min(len(history), 3))]
    x = grid.coords(0)[: levels[0].size]
    out = _filtered_rhs(levels, history.dt, p, spec, _forcing_array(fbar, history.time, x),
                        st, "central", form, time_order)
    return _as_field(grid, out, periodic)


# -- time stepping --------------------------------------------------------

class _Model:
    """Binds a SolverConfig to the stage RHS used by maccormack_step."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.periodic = cfg.bc_mode == "periodic"
        grid = cfg.grid
        self.x_full = grid.coords(0)
        self.x = self.x_full[:-1] if self.periodic else self.x_full
        self.st = Stencil1D(grid.dx[0], self.periodic)
        self.forcing = self._resolve_forcing()

    def _resolve_forcing(self):
        f = self.cfg.forcing
        if f is None:
            return None
        if self.cfg.model == "filtered" and hasattr(f, "filtered"):
            return f.filtered(self.cfg.filter, self.cfg.forcing_filter)
        return f

    def force(self, t):
        return _forcing_array(self.forcing, t, self.x)

    def rhs(self, levels, t, bias):
        cfg = self.cfg
        f = self.force(t)
        if cfg.model == "plain":
            return _plain_rhs(levels[0], cfg.params.nu, f, self.st, bias, cfg.advection)
        if cfg.model == "generalized":
            return _generalized_rhs(levels[0], cfg.params, f, self.st, bias, cfg.advection)
        return _filtered_rhs(levels, cfg.dt, cfg.params, cfg.filter, f, self.st, bias,
                             cfg.advection, cfg.time_order)

    def apply_bc(self, u, t):
        if not self.periodic:
            u[0], u[-1] = self.cfg.boundary(t)
        return u

    def to_full(self, u):
        return np.append(u, u[0]) if self.periodic else u


def maccormack_step(levels: list[np.ndarray], t: float, model: _Model) -> np.ndarray:
    """Advance the newest state level from ``t`` to ``t + dt``.

    ``levels`` is newest first; the predictor sees the stored history, the
    corrector sees the provisional state prepended to it.
    """
    dt = model.cfg.dt
    u = levels[0]
    predicted = model.apply_bc(u + dt * model.rhs(levels, t, "forward"), t + dt)
    r2 = model.rhs([predicted] + list(levels[:-1]), t + dt, "backward")
    return model.apply_bc(0.5 * (u + predicted + dt * r2), t + dt)


def cfl_number(u: np.ndarray, dt: float, dx: float) -> float:
    return float(np.max(np.abs(u)) * dt / dx)


def run(cfg: SolverConfig) -> Trajectory:
    """Integrate ``cfg`` from t = 0 to ``cfg.t_end``.

    Raises :class:`SolverBlowUp` (carrying the partial trajectory) if the
    state becomes non-finite.
    """
    model = _Model(cfg)
    n_steps = cfg.n_steps
    u = np.asarray(cfg.initial_condition(model.x), dtype=float) + np.zeros_like(model.x)
    u = model.apply_bc(u.copy(), 0.0)
    traj = Trajectory(model.x_full.copy())
    traj.record(0.0, model.to_full(u))
    # the duplicated start level gives zero initial time derivative
    levels = [u, u.copy(), u.copy()]
    warned = False
    for n in range(n_steps):
        t = n * cfg.dt
        cfl = cfl_number(levels[0], cfg.dt, cfg.dx)
        if cfl > cfg.cfl_warn_threshold and not warned:
            log.warning("CFL %.3f exceeds %.3f at step %d", cfl, cfg.cfl_warn_threshold, n)
            warned = True
        with np.errstate(over="ignore", invalid="ignore"):
            new = maccormack_step(levels, t, model)
        if not np.all(np.isfinite(new)):
            raise SolverBlowUp(n, float(np.max(np.abs(levels[0]))), cfl, traj)
        levels = [new] + levels[:-1]
        if (n + 1) % cfg.snapshot_stride == 0 or n + 1 == n_steps:
            traj.record((n + 1) * cfg.dt, model.to_full(new))
    return traj


def total_variation(u: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(u))))

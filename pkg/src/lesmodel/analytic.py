"""Exact viscous Burgers solutions and the forcing used by the periodic test.

Solutions have the Cole-Hopf form ``u = -2 nu phi_x / phi`` with

    phi = A0 + B0 x + (A1 sin w1 x + B1 cos w1 x) exp(-nu w1^2 t)
                    + (A2 sin w2 x + B2 cos w2 x) exp(-nu w2^2 t),

a solution of the heat equation ``phi_t = nu phi_xx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .filtering import FilterSpec, filter_bruteforce


class AnalyticDomainError(ValueError):
    pass


@dataclass(frozen=True)
class AnalyticSolutionSpec:
    A0: float
    B0: float
    A1: float
    B1: float
    A2: float
    B2: float
    omega1: float
    omega2: float
    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")

    def phi_partials(self, t, x):
        """Return ``(phi, phi_t, phi_x, phi_xx, phi_xxx, phi_tx)`` evaluated exactly."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        phi = self.A0 + self.B0 * x
        phi_t = np.zeros(np.broadcast(t, x).shape)
        phi_x = self.B0 + phi_t
        phi_xx = np.zeros_like(phi_t)
        phi_xxx = np.zeros_like(phi_t)
        phi_tx = np.zeros_like(phi_t)
        for a, b, w in ((self.A1, self.B1, self.omega1), (self.A2, self.B2, self.omega2)):
            if a == 0 and b == 0:
                continue
            rate = self.nu * w * w
            decay = np.exp(-rate * t)
            s, c = np.sin(w * x), np.cos(w * x)
            mode = (a * s + b * c) * decay
            mode_x = w * (a * c - b * s) * decay
            phi = phi + mode
            phi_t = phi_t - rate * mode
            phi_x = phi_x + mode_x
            phi_xx = phi_xx - w * w * mode
            phi_xxx = phi_xxx - w * w * mode_x
            phi_tx = phi_tx - rate * mode_x
        return phi, phi_t, phi_x, phi_xx, phi_xxx, phi_tx

    def phi(self, t, x):
        return self.phi_partials(t, x)[0]

    def u_partials(self, t, x):
        """Return ``(u, u_t, u_x, u_xx)`` at ``(t, x)``."""
        phi, phi_t, phi_x, phi_xx, phi_xxx, phi_tx = self.phi_partials(t, x)
        if np.any(phi == 0):
            raise AnalyticDomainError("phi vanishes at a probe point")
        k = -2.0 * self.nu
        r = phi_x / phi
        u = k * r
        u_t = k * (phi_tx / phi - r * phi_t / phi)
        u_x = k * (phi_xx / phi - r * r)
        u_xx = k * (phi_xxx / phi - 3.0 * r * phi_xx / phi + 2.0 * r**3)
        return u, u_t, u_x, u_xx

    def u(self, t, x):
        phi, _, phi_x, *_ = self.phi_partials(t, x)
        if np.any(phi == 0):
            raise AnalyticDomainError("phi vanishes at a probe point")
        return -2.0 * self.nu * phi_x / phi

    def __call__(self, t, x):
        return self.u(t, x)

    def check_nonvanishing(self, x_range=(0.0, 1.0), t_range=(0.0, 1.0), n: int = 1000) -> float:
        """Smallest |phi| over an ``n x n`` sample; raises if phi changes sign or vanishes."""
        tt, xx = np.meshgrid(np.linspace(*t_range, n), np.linspace(*x_range, n), indexing="ij")
        phi = self.phi(tt, xx)
        if not (np.all(phi > 0) or np.all(phi < 0)):
            raise AnalyticDomainError("phi changes sign on the sampled domain")
        return float(np.min(np.abs(phi)))


def analytic_u(t, x, spec: AnalyticSolutionSpec):
    return spec.u(t, x)


def burgers_residual(spec: AnalyticSolutionSpec, t, x):
    """u_t + u u_x - nu u_xx from the exact partials."""
    u, u_t, u_x, u_xx = spec.u_partials(t, x)
    return u_t + u * u_x - spec.nu * u_xx


@dataclass(frozen=True)
class Preset:
    solution: AnalyticSolutionSpec
    eta: float
    lam: float


def preset(set_id) -> Preset:
    """The three reference parameter sets (ids 1, 2, 3 or ``"set1"`` ...)."""
    key = str(set_id).removeprefix("set")
    pi = math.pi
    nu = 1.0 / 50000.0
    if key == "1":
        sol = AnalyticSolutionSpec(A0=1000.0, B0=-10.0, A1=1.0 / pi, B1=0.0, A2=1.0 / (100.0 * pi),
                                   B2=0.0, omega1=2.0 * pi, omega2=50.0 * pi, nu=nu)
        return Preset(sol, eta=0.1, lam=1.8e6)
    if key == "2":
        sol = AnalyticSolutionSpec(A0=10.0, B0=-7.0, A1=3.0 / pi, B1=0.0, A2=3.0 / (100.0 * pi),
                                   B2=0.0, omega1=2.0 * pi, omega2=50.0 * pi, nu=nu)
        return Preset(sol, eta=0.1, lam=5000.0)
    if key == "3":
        sol = AnalyticSolutionSpec(A0=1.0, B0=-10.0, A1=-15.0 / pi, B1=-7.0 / pi,
                                   A2=1.0 / (10.0 * pi), B2=-1.0 / (100.0 * pi),
                                   omega1=2.0 * pi, omega2=100.0 * pi, nu=nu)
        return Preset(sol, eta=0.01, lam=500.0)
    raise ValueError(f"unknown preset {set_id!r}; expected 1, 2 or 3")


@dataclass(frozen=True)
class ForcingSpec:
    """``mean + sum a sin(k x) + sum b sin(w t)``."""

    mean: float = 0.0
    spatial: tuple[tuple[float, float], ...] = ()
    temporal: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        vals = [self.mean] + [v for term in self.spatial + self.temporal for v in term]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("forcing parameters must be finite")

    @classmethod
    def periodic_default(cls) -> "ForcingSpec":
        pi = math.pi
        return cls(mean=2.3, spatial=((1.0, 4.0 * pi), (2.9, 99.0 * pi)),
                   temporal=((1.0, 4.0 * pi), (2.9, 99.0 * pi)))

    def value(self, t, x, d_t: int = 0, d_x: int = 0):
        """f or one of its pure partial derivatives (``d_t`` or ``d_x`` up to 2)."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast(t, x).shape)
        if d_t == 0 and d_x == 0:
            out = out + self.mean
        if d_t == 0:
            for a, k in self.spatial:
                out = out + a * k**d_x * _sin_derivative(k * x, d_x)
        if d_x == 0:
            for b, w in self.temporal:
                out = out + b * w**d_t * _sin_derivative(w * t, d_t)
        return out

    def __call__(self, t, x):
        return self.value(t, x)

    def filtered(self, spec: FilterSpec, mode: str = "exact"):
        """Filtered forcing as a callable ``(t, x) -> array``.

        ``"exact"`` damps every sinusoid by its Gaussian factor,
        ``"taylor"`` uses the eta^2 expansion, ``"raw"`` returns f itself.
        """
        if mode == "raw":
            return self.value
        if mode == "taylor":
            def taylor(t, x):
                return self.value(t, x) + spec.eta**2 * (
                    self.value(t, x, d_t=2) / spec.gamma_T + self.value(t, x, d_x=2) / spec.gamma_L)
            return taylor
        if mode == "exact":
            damped = replace(
                self,
                spatial=tuple((a * math.exp(-spec.eta**2 * k**2 / spec.gamma_L), k)
                              for a, k in self.spatial),
                temporal=tuple((b * math.exp(-spec.eta**2 * w**2 / spec.gamma_T), w)
                               for b, w in self.temporal))
            return damped.value
        raise ValueError(f"unknown forcing filter mode {mode!r}")


def _sin_derivative(arg, order: int):
    return (np.sin(arg), np.cos(arg), -np.sin(arg))[order]


def forcing_value(t, x, spec: ForcingSpec | None = None):
    return (spec or ForcingSpec.periodic_default()).value(t, x)


@dataclass(frozen=True)
class ForcedPeriodicSetup:
    u0: float = 2.3
    nu: float = 1.0 / 5000.0
    forcing: ForcingSpec = field(default_factory=ForcingSpec.periodic_default)


def filtered_reference(u_spec: AnalyticSolutionSpec, spec: FilterSpec, t, x, n_nodes: int = 32):
    """Gaussian-filtered analytic solution at ``(t, x)`` by quadrature."""
    return filter_bruteforce(u_spec.u, spec, (t, x), n_nodes=n_nodes)

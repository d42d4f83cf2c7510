"""Gaussian space-time filter and its small-width Taylor expansions.

The kernel is a product of centred Gaussians with variance
``2 eta**2 / gamma_T`` in time and ``2 eta**2 / gamma_L`` along every
spatial axis.  :func:`filter_bruteforce` integrates it with tensor-product
Gauss-Hermite quadrature and is the reference every expansion is checked
against.  The ``taylor_*`` functions keep terms up to ``eta**2``.

Closed-form test fields are wrapped in :class:`SmoothFunction`, which holds
a sympy expression so that derivatives of any order are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import sympy as sp

T, X, Y, Z = sp.symbols("t x y z", real=True)
SPACE_SYMBOLS = (X, Y, Z)
_BY_NAME = {"t": T, "x": X, "y": Y, "z": Z}


class MissingDerivativeError(ValueError):
    pass


class FilterQuadratureError(FloatingPointError):
    pass


@dataclass(frozen=True)
class FilterSpec:
    eta: float
    gamma_T: float = 6.0
    gamma_L: float = 6.0
    spatial_dim: int = 1

    def __post_init__(self):
        if not (self.eta > 0 and self.gamma_T > 0 and self.gamma_L > 0):
            raise ValueError("eta, gamma_T and gamma_L must be strictly positive")
        if self.spatial_dim not in (1, 3):
            raise ValueError("spatial_dim must be 1 or 3")

    @property
    def sigma_t(self) -> float:
        """Standard deviation of the kernel in time."""
        return math.sqrt(2.0) * self.eta / math.sqrt(self.gamma_T)

    @property
    def sigma_x(self) -> float:
        return math.sqrt(2.0) * self.eta / math.sqrt(self.gamma_L)

    def with_eta(self, eta: float) -> "FilterSpec":
        return FilterSpec(eta, self.gamma_T, self.gamma_L, self.spatial_dim)


class SmoothFunction:
    """A closed-form field ``f(t, x[, y, z])`` on all of space-time.

    Built from a sympy expression (exact derivatives available) or, via
    :meth:`from_callable`, from a vectorised numpy callable that can only
    be evaluated.
    """

    def __init__(self, expr, dim: int = 1):
        if dim not in (1, 3):
            raise ValueError("dim must be 1 or 3")
        self.expr = sp.sympify(expr) if expr is not None else None
        self.dim = dim
        self._callable: Callable | None = None

    @classmethod
    def from_callable(cls, fn: Callable, dim: int = 1) -> "SmoothFunction":
        obj = cls(None, dim)
        obj._callable = fn
        return obj

    @property
    def variables(self) -> tuple[sp.Symbol, ...]:
        return (T,) + SPACE_SYMBOLS[: self.dim]

    @property
    def has_derivatives(self) -> bool:
        return self.expr is not None

    @cached_property
    def _numeric(self) -> Callable:
        if self.expr is None:
            return self._callable
        return sp.lambdify(self.variables, self.expr, modules="numpy")

    def __call__(self, t, *x):
        if len(x) != self.dim:
            raise ValueError(f"expected {self.dim} spatial coordinates, got {len(x)}")
        args = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t,) + x))
        out = np.asarray(self._numeric(*args), dtype=float)
        return np.broadcast_to(out, args[0].shape) + 0.0

    def _require_expr(self) -> sp.Expr:
        if self.expr is None:
            raise MissingDerivativeError("function has no closed-form derivatives")
        return self.expr

    def diff(self, *names: str) -> "SmoothFunction":
        """Partial derivative, e.g. ``f.diff("t", "x")`` for d2f/dtdx."""
        return SmoothFunction(sp.diff(self._require_expr(), *(_BY_NAME[n] for n in names)), self.dim)

    def grad(self) -> list["SmoothFunction"]:
        return [self.diff(s.name) for s in SPACE_SYMBOLS[: self.dim]]

    def laplacian(self) -> "SmoothFunction":
        e = self._require_expr()
        return SmoothFunction(sum(sp.diff(e, s, 2) for s in SPACE_SYMBOLS[: self.dim]), self.dim)

    def _wrap(self, other):
        if isinstance(other, SmoothFunction):
            return other._require_expr()
        return sp.sympify(other)

    def __add__(self, other):
        return SmoothFunction(self._require_expr() + self._wrap(other), self.dim)

    __radd__ = __add__

    def __sub__(self, other):
        return SmoothFunction(self._require_expr() - self._wrap(other), self.dim)

    def __rsub__(self, other):
        return SmoothFunction(self._wrap(other) - self._require_expr(), self.dim)

    def __mul__(self, other):
        return SmoothFunction(self._require_expr() * self._wrap(other), self.dim)

    __rmul__ = __mul__

    def __neg__(self):
        return SmoothFunction(-self._require_expr(), self.dim)

    def __repr__(self):
        body = self.expr if self.expr is not None else self._callable
        return f"SmoothFunction({body}, dim={self.dim})"


def as_smooth(f, dim: int = 1) -> SmoothFunction:
    if isinstance(f, SmoothFunction):
        return f
    if isinstance(f, (sp.Expr, int, float)):
        return SmoothFunction(f, dim)
    return SmoothFunction.from_callable(f, dim)


# -- kernel ---------------------------------------------------------------

def gaussian_kernel(s, y, spec: FilterSpec):
    """Kernel value G(s, y); ``y`` is a scalar in 1D or a length-3 vector in 3D."""
    eta2 = spec.eta**2
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.spatial_dim == 1:
        pref = math.sqrt(spec.gamma_T * spec.gamma_L) / (4.0 * math.pi * eta2)
        r2 = y**2
    else:
        pref = math.sqrt(spec.gamma_T) * spec.gamma_L**1.5 / (16.0 * math.pi**2 * eta2**2)
        r2 = np.sum(y**2, axis=-1)
    return pref * np.exp(-(spec.gamma_T * s**2 + spec.gamma_L * r2) / (4.0 * eta2))


def _hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.hermite.hermgauss(n)


def _axis_sigmas(spec: FilterSpec) -> list[float]:
    return [spec.sigma_t] + [spec.sigma_x] * spec.spatial_dim


def kernel_integral(spec: FilterSpec, n_nodes: int = 32) -> float:
    """Integral of G over all of space-time by Gauss-Hermite quadrature."""
    xi, w = _hermite(n_nodes)
    sigmas = _axis_sigmas(spec)
    nd = len(sigmas)
    total = 0.0
    # the integrand is evaluated as G(node) * exp(xi^2) * jacobian per axis
    axes = np.meshgrid(*([xi] * nd), indexing="ij")
    weights = np.ones_like(axes[0])
    for a, sig in enumerate(sigmas):
        wa = (w * np.exp(xi**2) * math.sqrt(2.0) * sig).reshape([-1 if k == a else 1 for k in range(nd)])
        weights = weights * wa
    s = math.sqrt(2.0) * sigmas[0] * axes[0]
    if spec.spatial_dim == 1:
        y = math.sqrt(2.0) * sigmas[1] * axes[1]
    else:
        y = np.stack([math.sqrt(2.0) * sigmas[k] * axes[k] for k in (1, 2, 3)], axis=-1)
    total = float(np.sum(weights * gaussian_kernel(s, y, spec)))
    return total


# -- brute-force filtering --------------------------------------------------

def filter_bruteforce(f, spec: FilterSpec, at, n_nodes: int = 32,
                      derivative: str | None = None):
    """Filtered value of ``f`` at ``at = (t, x[, y, z])``.

    The coordinates in ``at`` may be arrays of a common shape; the result
    then has that shape.  With ``derivative="x"`` (or ``"t"``, ...) the
    derivative of the filtered field is returned, obtained by differentiating
    the kernel rather than ``f``.
    """
    f = as_smooth(f, spec.spatial_dim)
    coords, contract = _quadrature(spec, at, n_nodes, derivative)
    return contract(f(*coords))


def filter_bruteforce_many(fs, spec: FilterSpec, at, n_nodes: int = 32) -> list:
    """Filter several closed-form fields with one shared evaluation pass.

    The expressions are lambdified together with common-subexpression
    elimination, which matters for the four-axis quadrature in 3D.
    """
    exprs = [as_smooth(f, spec.spatial_dim)._require_expr() for f in fs]
    variables = (T,) + SPACE_SYMBOLS[: spec.spatial_dim]
    fn = sp.lambdify(variables, exprs, modules="numpy", cse=True)
    coords, contract = _quadrature(spec, at, n_nodes, None)
    shape = np.broadcast_shapes(*(c.shape for c in coords))
    return [contract(np.broadcast_to(np.asarray(v, dtype=float), shape)) for v in fn(*coords)]


def _quadrature(spec: FilterSpec, at, n_nodes: int, derivative: str | None):
    nd = spec.spatial_dim + 1
    if len(at) != nd:
        raise ValueError(f"expected {nd} coordinates, got {len(at)}")
    centre = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in at))
    pshape = centre[0].shape
    xi, w = _hermite(n_nodes)
    w = w / math.sqrt(math.pi)
    sigmas = _axis_sigmas(spec)

    coords = []
    for a, (c, sig) in enumerate(zip(centre, sigmas)):
        shape = [1] * nd
        shape[a] = n_nodes
        coords.append(c.reshape(pshape + (1,) * nd) + math.sqrt(2.0) * sig * xi.reshape(shape))

    names = ["t", "x", "y", "z"][:nd]
    weights = []
    for a in range(nd):
        wa = w
        if derivative is not None and names[a] == derivative:
            wa = w * math.sqrt(2.0) * xi / sigmas[a]
        weights.append(wa)

    def contract(values):
        if not np.all(np.isfinite(values)):
            raise FilterQuadratureError("integrand is not finite on the quadrature support")
        out = values
        # contract the trailing axis repeatedly, last spatial axis first
        for wa in reversed(weights):
            out = out @ wa
        return out if pshape else float(out)

    return coords, contract


# -- Taylor expansions ----------------------------------------------------

def _correction(f: SmoothFunction, spec: FilterSpec) -> sp.Expr:
    """eta^2 [f_tt / gamma_T + lap f / gamma_L] as an expression."""
    e = f._require_expr()
    lap = sum(sp.diff(e, s, 2) for s in SPACE_SYMBOLS[: f.dim])
    return spec.eta**2 * (sp.diff(e, T, 2) / spec.gamma_T + lap / spec.gamma_L)


def _gradient_product(f: SmoothFunction, g: SmoothFunction, spec: FilterSpec,
                      time_factor: float = 1.0, space_factor: float = 1.0) -> sp.Expr:
    """time_factor/gamma_T f_t g_t + space_factor/gamma_L grad f . grad g."""
    fe, ge = f._require_expr(), g._require_expr()
    space = sum(sp.diff(fe, s) * sp.diff(ge, s) for s in SPACE_SYMBOLS[: f.dim])
    return (time_factor * sp.diff(fe, T) * sp.diff(ge, T) / spec.gamma_T
            + space_factor * space / spec.gamma_L)


def taylor_filtered(f, spec: FilterSpec) -> SmoothFunction:
    """Closed-form f + eta^2 (f_tt / gamma_T + lap f / gamma_L)."""
    f = as_smooth(f, spec.spatial_dim)
    return SmoothFunction(f._require_expr() + _correction(f, spec), f.dim)


def taylor_unfiltered(fbar, spec: FilterSpec) -> SmoothFunction:
    fbar = as_smooth(fbar, spec.spatial_dim)
    return SmoothFunction(fbar._require_expr() - _correction(fbar, spec), fbar.dim)


def taylor_filter(f, spec: FilterSpec, at):
    return taylor_filtered(f, spec)(*at)


def taylor_unfilter(fbar, spec: FilterSpec, at):
    return taylor_unfiltered(fbar, spec)(*at)


def taylor_product_filtered(f, g, spec: FilterSpec) -> SmoothFunction:
    """Expansion of the filtered product: fbar gbar + 2 eta^2 [fbar_t gbar_t / gamma_T + grad fbar . grad gbar / gamma_L]."""
    fb, gb = taylor_filtered(f, spec), taylor_filtered(g, spec)
    expr = fb.expr * gb.expr + 2.0 * spec.eta**2 * _gradient_product(fb, gb, spec)
    return SmoothFunction(expr, fb.dim)


def taylor_product_filter(f, g, spec: FilterSpec, at):
    return taylor_product_filtered(f, g, spec)(*at)


def taylor_mixed_filtered(f, g, spec: FilterSpec, space_factor: float = 1.0) -> SmoothFunction:
    """Expansion of the filtered product around ``fbar * g`` (g unfiltered).

    fbar g + eta^2 [2/gamma_T fbar_t g_t + space_factor/gamma_L grad fbar . grad g
    + fbar (g_tt / gamma_T + lap g / gamma_L)].

    ``space_factor=1`` is the default grouping; its remainder is only
    O(eta^2) because the exact cross-space coefficient is 2 (use
    ``space_factor=2`` for the consistent expansion).
    """
    fb = taylor_filtered(f, spec)
    g = as_smooth(g, spec.spatial_dim)
    expr = fb.expr * g._require_expr() + spec.eta**2 * _gradient_product(
        fb, g, spec, time_factor=2.0, space_factor=space_factor)
    expr = expr + fb.expr * _correction(g, spec)
    return SmoothFunction(expr, fb.dim)


def taylor_mixed_filter(f, g, spec: FilterSpec, at, space_factor: float = 1.0):
    return taylor_mixed_filtered(f, g, spec, space_factor)(*at)


_S = sp.Symbol("s", real=True)


def _beta_derivatives(beta) -> tuple[sp.Expr, sp.Expr, sp.Expr]:
    try:
        b0 = sp.sympify(beta(_S))
    except (TypeError, AttributeError, sp.SympifyError) as exc:
        raise MissingDerivativeError("beta must accept a sympy symbol to be differentiated") from exc
    return b0, sp.diff(b0, _S), sp.diff(b0, _S, 2)


def taylor_beta_filtered(beta, f, g, spec: FilterSpec) -> SmoothFunction:
    """Expansion of the filtered ``beta(f) g`` for a smooth scalar law ``beta``.

    ``beta`` maps a sympy expression to a sympy expression, e.g.
    ``lambda s: sympy.sqrt(1 + s**2)``.
    """
    b0, b1, b2 = _beta_derivatives(beta)
    fb, gb = taylor_filtered(f, spec), taylor_filtered(g, spec)
    sub = {_S: fb.expr}
    expr = (b0.subs(sub) * gb.expr
            + spec.eta**2 * (2.0 * b1.subs(sub) * _gradient_product(fb, gb, spec)
                             + b2.subs(sub) * _gradient_product(fb, fb, spec) * gb.expr))
    return SmoothFunction(expr, fb.dim)


def taylor_beta_filter(beta, f, g, spec: FilterSpec, at):
    return taylor_beta_filtered(beta, f, g, spec)(*at)


# -- convergence helpers ----------------------------------------------------

def fitted_slope(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step)."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


def residual_study(taylor: Callable[[FilterSpec], float], exact: Callable[[FilterSpec], float],
                   spec: FilterSpec, etas=(0.1, 0.05, 0.025, 0.0125)) -> tuple[list, list, float]:
    """Residual |taylor - exact| for each eta and the fitted log-log slope."""
    errs = []
    for eta in etas:
        s = spec.with_eta(eta)
        errs.append(float(np.max(np.abs(np.asarray(taylor(s)) - np.asarray(exact(s))))))
    return list(etas), errs, fitted_slope(etas, errs)

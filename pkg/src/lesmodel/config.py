"""Experiment configuration files.

INI-style sections ``[experiment]``, ``[analytic]``, ``[filter]``,
``[model]``, ``[solver]`` and ``[forcing]``; ``#`` starts a comment.
Unknown sections or keys are errors reported with their line number.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .analytic import AnalyticSolutionSpec, ForcingSpec, preset
from .closures import ModelParams
from .filtering import FilterSpec

KINDS = ("analytic-compare", "forced-periodic", "verify-filter", "verify-closures",
         "convergence", "lambda-sweep")

_KEYS = {
    "experiment": {"kind", "output_dir", "snapshot_times", "probe_points", "seed", "grids",
                   "dt_ratio", "lambdas", "fine_dx", "probe_x", "profile_time",
                   "boundary_reference"},
    "analytic": {"preset", "A0", "B0", "A1", "B1", "A2", "B2", "omega1", "omega2", "nu"},
    "filter": {"eta", "gamma_T", "gamma_L"},
    "model": {"nu", "lambda", "q", "rho0"},
    "solver": {"dx", "dt", "t_end", "x_min", "x_max", "bc_mode", "advection", "time_order",
               "snapshot_stride", "cfl_warn_threshold", "forcing_filter"},
    "forcing": {"mean", "spatial", "temporal", "u0"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    analytic: AnalyticSolutionSpec | None = None
    preset_id: str | None = None
    filter: FilterSpec = field(default_factory=lambda: FilterSpec(0.1))
    model: ModelParams = field(default_factory=lambda: ModelParams(nu=1.0 / 50000.0))
    dx: float = 0.1
    dt: float = 0.01
    t_end: float = 1.0
    domain: tuple[float, float] = (0.0, 1.0)
    bc_mode: str = "dirichlet"
    advection: str = "conservative"
    time_order: int = 2
    snapshot_stride: int = 1
    cfl_warn_threshold: float = 1.0
    forcing_filter: str = "exact"
    boundary_reference: str = "analytic"
    forcing: ForcingSpec | None = None
    u0: float = 2.3
    grids: tuple[float, ...] = ()
    dt_ratio: float | None = None
    lambdas: tuple[float, ...] = ()
    fine_dx: float = 1e-3
    probe_x: float = 0.5
    profile_time: float = 0.7
    snapshot_times: tuple[float, ...] = ()
    probe_points: int = 5
    seed: int = 0
    output_dir: Path = Path("les_output")

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if any(not 0.0 <= t <= self.t_end for t in self.snapshot_times):
            raise ConfigError("snapshot times must lie within [0, t_end]")
        if self.boundary_reference not in ("analytic", "filtered"):
            raise ConfigError("boundary_reference must be 'analytic' or 'filtered'")

    @property
    def step_ratio(self) -> float:
        return self.dt_ratio if self.dt_ratio is not None else self.dt / self.dx

    def echo(self) -> dict[str, object]:
        """Every physical and numerical parameter, for report and CSV headers."""
        out: dict[str, object] = {"kind": self.kind}
        if self.preset_id:
            out["preset"] = self.preset_id
        if self.analytic is not None:
            for k, v in vars(self.analytic).items():
                out[f"analytic.{k}"] = repr(v)
        out.update({"filter.eta": self.filter.eta, "filter.gamma_T": self.filter.gamma_T,
                    "filter.gamma_L": self.filter.gamma_L, "model.nu": repr(self.model.nu),
                    "model.lambda": self.model.lam, "model.q": self.model.q,
                    "model.rho0": self.model.rho0})
        for k in ("dx", "dt", "t_end", "domain", "bc_mode", "advection", "time_order",
                  "forcing_filter", "boundary_reference", "grids", "dt_ratio", "lambdas",
                  "fine_dx", "probe_x", "profile_time", "snapshot_times", "seed"):
            out[k] = getattr(self, k)
        if self.forcing is not None:
            out["forcing"] = repr(self.forcing)
            out["u0"] = self.u0
        return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(_num(v)) for v in re.split(r"[,\s]+", text.strip()) if v)


def _num(text: str) -> float:
    """Float with optional ``pi`` factors and fractions, e.g. ``1/50000`` or ``3/pi``."""
    text = text.strip()
    if not re.fullmatch(r"[0-9eE.+\-*/ ()pi]+", text):
        raise ValueError(f"not a number: {text!r}")
    return float(eval(text, {"__builtins__": {}}, {"pi": math.pi}))  # noqa: S307


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    """``amp:k, amp:k`` lists of sinusoid terms."""
    out = []
    for item in filter(None, (p.strip() for p in text.split(","))):
        amp, _, k = item.partition(":")
        out.append((_num(amp), _num(k)))
    return tuple(out)


def _line_of(lines: list[str], section: str, key: str) -> int:
    current = None
    for no, line in enumerate(lines, 1):
        s = line.strip()
        m = re.fullmatch(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return no
    return 0


def parse_config_text(text: str, source: str = "<string>", default_kind: str | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from exc
    lines = text.splitlines()
    for section in parser.sections():
        if section not in _KEYS:
            raise ConfigError(f"{source}:{_line_of(lines, section, '') or '?'}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _KEYS[section]:
                raise ConfigError(f"{source}:{_line_of(lines, section, key)}: unknown key "
                                  f"{key!r} in [{section}]")

    def get(section, key, conv=_num, default=None):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}:{_line_of(lines, section, key)}: bad value for "
                                  f"{key}: {exc}") from exc
        return default

    kind = get("experiment", "kind", str)
    if kind and default_kind and kind != default_kind:
        raise ConfigError(f"{source}: config is for {kind!r}, not {default_kind!r}")
    kind = kind or default_kind
    if not kind:
        raise ConfigError(f"{source}: experiment kind required")
    return build_config(kind, get, source)


def build_config(kind: str, get=None, source: str = "<defaults>") -> ExperimentConfig:
    """Resolve defaults for ``kind``; ``get(section, key, conv, default)`` supplies overrides."""
    if get is None:
        def get(section, key, conv=_num, default=None):
            return default

    preset_default = {"convergence": "set1"}.get(kind, "set3")
    preset_id = get("analytic", "preset", str, None)
    custom = {k: get("analytic", k) for k in ("A0", "B0", "A1", "B1", "A2", "B2", "omega1", "omega2", "nu")}
    analytic = None
    eta = lam = None
    nu = 1.0 / 50000.0
    if kind == "forced-periodic":
        nu = 1.0 / 5000.0
        eta, lam = 0.1, 10.0
    elif any(v is not None for v in custom.values()) and preset_id is None:
        missing = [k for k, v in custom.items() if v is None and k != "nu"]
        if missing:
            raise ConfigError(f"{source}: custom analytic spec is missing {missing}")
        nu = custom["nu"] if custom["nu"] is not None else nu
        analytic = AnalyticSolutionSpec(**{**custom, "nu": nu})
        eta, lam = 0.1, 0.0
    elif kind not in ("verify-filter", "verify-closures"):
        preset_id = preset_id or preset_default
        try:
            p = preset(preset_id)
        except ValueError as exc:
            raise ConfigError(f"{source}: {exc}") from exc
        analytic, eta, lam, nu = p.solution, p.eta, p.lam, p.solution.nu
    else:
        eta, lam = 0.1, 1.0

    try:
        fspec = FilterSpec(get("filter", "eta", default=eta),
                           get("filter", "gamma_T", default=6.0),
                           get("filter", "gamma_L", default=6.0))
        model = ModelParams(nu=get("model", "nu", default=nu),
                            lam=get("model", "lambda", default=lam),
                            q=get("model", "q", default=0.5),
                            rho0=get("model", "rho0", default=1.0))
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    forcing = None
    if kind == "forced-periodic":
        base = ForcingSpec.periodic_default()
        forcing = ForcingSpec(mean=get("forcing", "mean", default=base.mean),
                              spatial=get("forcing", "spatial", _pairs, base.spatial),
                              temporal=get("forcing", "temporal", _pairs, base.temporal))

    defaults = {
        "forced-periodic": dict(grids=(0.1, 0.05, 0.025), bc_mode="periodic"),
        "convergence": dict(grids=(1 / 40, 1 / 80, 1 / 160)),
        "lambda-sweep": dict(grids=(0.1, 0.05)),
    }.get(kind, {})
    dx = get("solver", "dx", default=0.1)
    dt = get("solver", "dt", default=0.01)
    t_end = get("solver", "t_end", default=1.0)
    snapshot_default = (0.0, t_end)
    try:
        return ExperimentConfig(
            kind=kind,
            analytic=analytic,
            preset_id=preset_id,
            filter=fspec,
            model=model,
            dx=dx,
            dt=dt,
            t_end=t_end,
            domain=(get("solver", "x_min", default=0.0), get("solver", "x_max", default=1.0)),
            bc_mode=get("solver", "bc_mode", str, defaults.get("bc_mode", "dirichlet")),
            advection=get("solver", "advection", str, "conservative"),
            time_order=int(get("solver", "time_order", default=2)),
            snapshot_stride=int(get("solver", "snapshot_stride", default=1)),
            cfl_warn_threshold=get("solver", "cfl_warn_threshold", default=1.0),
            forcing_filter=get("solver", "forcing_filter", str, "exact"),
            boundary_reference=get("experiment", "boundary_reference", str, "analytic"),
            forcing=forcing,
            u0=get("forcing", "u0", default=2.3),
            grids=get("experiment", "grids", _floats, defaults.get("grids", ())),
            dt_ratio=get("experiment", "dt_ratio", default=None),
            lambdas=get("experiment", "lambdas", _floats, ()),
            fine_dx=get("experiment", "fine_dx", default=1e-3),
            probe_x=get("experiment", "probe_x", default=0.5),
            profile_time=get("experiment", "profile_time", default=0.7),
            snapshot_times=get("experiment", "snapshot_times", _floats, snapshot_default),
            probe_points=int(get("experiment", "probe_points", default=5)),
            seed=int(get("experiment", "seed", default=0)),
            output_dir=Path(get("experiment", "output_dir", str, "les_output")),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_config(path: str | Path, default_kind: str | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), str(path), default_kind)

"""Freshwater / temperature forcing generators and the six forcing setups.

Forcing values are in the same units as the box-model fluxes (they enter the
tendencies divided by a box volume).  The magnitudes below are chosen here,
not taken from published numbers: F1's ramp collapses the circulation that
the tabulated initial state carries, and the sinusoidal setups reverse the
flow twice per period, which the tipping detector in ``evaluation`` picks up.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Mapping, Optional, Union

import numpy as np

from .boxmodel import (BoxState, DeltaState, DensityLaw, ModelConfig,
                       TimeGrid, Variant, TABLE_INITIAL)
from .errors import ConfigError, DomainError


class ForcingKind(str, Enum):
    ZERO = "zero"
    LINEAR = "linear"
    SINUSOID_STATIONARY = "sinusoid_stationary"
    SINUSOID_NONSTATIONARY = "sinusoid_nonstationary"


@dataclass(frozen=True)
class ForcingSpec:
    kind: ForcingKind = ForcingKind.ZERO
    base: float = 0.0
    slope: float = 0.0
    amplitude: float = 0.0
    period: float = 1.0
    amp_growth: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ForcingKind(self.kind))
        if self.kind in (ForcingKind.SINUSOID_STATIONARY, ForcingKind.SINUSOID_NONSTATIONARY):
            if not self.period > 0:
                raise ConfigError("sinusoidal forcing needs period > 0")
        if self.amp_growth < 0:
            raise ConfigError("amp_growth must be >= 0")

    def value(self, tau, tau_max: float):
        return eval_forcing(self, tau, tau_max)


def eval_forcing(spec: ForcingSpec, tau, tau_max: float):
    """Forcing value(s) at ``tau`` years; ``tau`` may be a scalar or an array."""
    t = np.asarray(tau, dtype=float)
    if not tau_max > 0:
        raise DomainError("tau_max must be positive")
    if np.any(t < 0) or np.any(t > tau_max):
        raise DomainError(f"tau outside [0, {tau_max}]")
    kind = spec.kind
    if kind is ForcingKind.ZERO:
        out = np.zeros_like(t)
    elif kind is ForcingKind.LINEAR:
        out = spec.base + spec.slope * (t / tau_max)
    else:
        wave = np.sin(2.0 * math.pi * t / spec.period)
        amp = spec.amplitude
        if kind is ForcingKind.SINUSOID_NONSTATIONARY:
            amp = amp * (1.0 + spec.amp_growth * t / tau_max)
        out = spec.base + amp * wave
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

SCENARIO_IDS = ("F1", "F2", "F3", "F4", "F5", "F6")

# Default magnitudes (implementation-chosen).  An amplitude of 2.5e11 holds
# |delta_s| near 5.6 under the linear law at the forcing extremes.
FORCING_SCALE = 2.5e11
SINUSOID_PERIOD = 2500.0

EOS80_INITIAL = BoxState(s1=12.0, s2=14.0, t1=1.0, t2=10.0)


def _shape(kind: str) -> ForcingSpec:
    if kind == "linear":
        return ForcingSpec(ForcingKind.LINEAR, base=0.0, slope=FORCING_SCALE)
    if kind == "stationary":
        return ForcingSpec(ForcingKind.SINUSOID_STATIONARY, amplitude=FORCING_SCALE,
                           period=SINUSOID_PERIOD)
    return ForcingSpec(ForcingKind.SINUSOID_NONSTATIONARY, amplitude=FORCING_SCALE / 2,
                       period=SINUSOID_PERIOD, amp_growth=1.0)


_TABLE = {
    # id: (forcing shape, density law)
    "F1": ("linear", DensityLaw.LINEAR),
    "F2": ("stationary", DensityLaw.LINEAR),
    "F3": ("nonstationary", DensityLaw.LINEAR),
    "F4": ("linear", DensityLaw.EOS80),
    "F5": ("stationary", DensityLaw.EOS80),
    "F6": ("nonstationary", DensityLaw.EOS80),
}


@dataclass(frozen=True)
class Scenario:
    """A fully bound experiment configuration."""

    id: str
    model: ModelConfig
    fs: ForcingSpec
    ft: ForcingSpec
    grid: TimeGrid
    initial: Union[BoxState, DeltaState]
    implementation_chosen_defaults: bool = True

    def integrate(self, method="rk4"):
        from .boxmodel import integrate
        return integrate(self.model, self.fs, self.ft, self.grid, self.initial, method)

    def resolved(self) -> dict:
        """Flat ``section.key -> value`` view of every field (for echoing)."""
        out = {"scenario.id": self.id,
               "scenario.implementation_chosen_defaults": self.implementation_chosen_defaults}
        model = asdict(self.model)
        density = model.pop("density")
        for k, v in model.items():
            out[f"model.{k}"] = _plain(v)
        for k, v in density.items():
            out[f"density.{k}"] = v
        for prefix, obj in (("fs", self.fs), ("ft", self.ft), ("grid", self.grid),
                            ("initial", self.initial)):
            for k, v in asdict(obj).items():
                out[f"{prefix}.{k}"] = _plain(v)
        return out


def _plain(v):
    return v.value if isinstance(v, Enum) else v


def scenario(scenario_id: str, overrides: Optional[Mapping[str, object]] = None) -> Scenario:
    """Build one of the F1..F6 setups, optionally overriding fields.

    Override keys are dotted: ``fs.amplitude``, ``ft.period``, ``grid.dt``,
    ``model.k``, ``density.rho0``, ``initial.s1`` and so on.

    F1-F3 use the standard variant with linear density and no temperature
    forcing; F4-F6 use the extended variant with EOS-80 and give ``F_t`` the
    same shape as ``F_s``.
    """
    sid = str(scenario_id).upper()
    if sid not in _TABLE:
        raise ConfigError(f"unknown scenario id {scenario_id!r}; expected one of {SCENARIO_IDS}")
    shape, law = _TABLE[sid]
    fs = _shape(shape)
    if law is DensityLaw.LINEAR:
        model = ModelConfig(density_law=law, variant=Variant.STANDARD)
        ft = ForcingSpec(ForcingKind.ZERO)
        initial: Union[BoxState, DeltaState] = TABLE_INITIAL.to_delta()
    else:
        model = ModelConfig(density_law=law, variant=Variant.EXTENDED)
        ft = _shape(shape)
        initial = EOS80_INITIAL
    grid = TimeGrid()
    density = model.density

    groups: dict = {}
    for key, value in (overrides or {}).items():
        if "." not in key:
            raise ConfigError(f"override key {key!r} must look like 'section.field'")
        section, name = key.split(".", 1)
        groups.setdefault(section, {})[name] = value

    def apply(obj, section):
        changes = groups.pop(section, {})
        if not changes:
            return obj
        known = {f.name: f for f in fields(obj)}
        typed = {}
        for name, value in changes.items():
            if name not in known:
                raise ConfigError(f"unknown field {section}.{name}")
            typed[name] = _coerce(value, getattr(obj, name))
        return replace(obj, **typed)

    fs = apply(fs, "fs")
    ft = apply(ft, "ft")
    grid = apply(grid, "grid")
    density = apply(density, "density")
    model = apply(replace(model, density=density), "model")
    model_changes = {k for k in (overrides or {}) if k.startswith("model.")}
    if ({"model.area", "model.depth"} & model_changes
            and not {"model.volume1", "model.volume2"} & model_changes):
        # volumes follow area x depth unless given explicitly
        model = replace(model, volume1=model.area * model.depth,
                        volume2=model.area * model.depth)
    if isinstance(initial, DeltaState) and "initial" in groups:
        # allow absolute salinities/temperatures for the standard variant too
        vals = groups.pop("initial")
        if set(vals) <= {"delta_s", "delta_t"}:
            initial = replace(initial, **{k: float(v) for k, v in vals.items()})
        else:
            base = replace(TABLE_INITIAL, **{k: float(v) for k, v in vals.items()})
            initial = base.to_delta()
    else:
        initial = apply(initial, "initial")
    if groups:
        raise ConfigError(f"unknown override sections {sorted(groups)}")
    return Scenario(sid, model, fs, ft, grid, initial)


def _coerce(value, current):
    if isinstance(current, Enum):
        return type(current)(value)
    if isinstance(current, bool):
        return str(value).lower() in ("1", "true", "yes")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(value)
    if current is None or isinstance(current, float):
        return float(value)
    return value


# --------------------------------------------------------------------------
# scenario files
# --------------------------------------------------------------------------

def read_scenario_file(path) -> Scenario:
    """Read an INI-style scenario file.

    ``[scenario] id = F2`` names the setup; other sections (``fs``, ``ft``,
    ``grid``, ``model``, ``density``, ``initial``) override single fields.
    """
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_option("scenario", "id"):
        raise ConfigError(f"{path}: missing [scenario] id")
    sid = parser.get("scenario", "id")
    overrides = {}
    for section in parser.sections():
        if section == "scenario":
            continue
        for key, value in parser.items(section):
            overrides[f"{section}.{key}"] = value
    return scenario(sid, overrides)


def write_scenario_file(sc: Scenario, path) -> None:
    """Write every resolved field so that the file is self-describing."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for key, value in sc.resolved().items():
        section, name = key.split(".", 1)
        if section == "scenario" and name != "id":
            continue
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, repr(value) if isinstance(value, float) else str(value))
    with open(path, "w") as fh:
        parser.write(fh)

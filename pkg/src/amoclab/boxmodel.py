"""Stommel two-box model: density laws, dynamics and a fixed-step integrator.

Two formulations are supported:

* ``Variant.STANDARD`` evolves the differences ``delta_s = S1 - S2`` and
  ``delta_t = T1 - T2`` of two equal-volume boxes, with linear density.
* ``Variant.EXTENDED`` evolves all four of ``S1, S2, T1, T2`` and works with
  either the linear law or the one-atmosphere EOS-80 polynomial.

The exchange flow is ``q = k (rho1 - rho2)``.  All time quantities are in
years.  The integrator loop runs on Python floats, which is considerably
faster than numpy for a two- or four-variable state.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, DomainError, IntegrationError


class DensityLaw(str, Enum):
    LINEAR = "linear"
    EOS80 = "eos80"


class Variant(str, Enum):
    STANDARD = "standard"
    EXTENDED = "extended"


class Method(str, Enum):
    EULER = "euler"
    RK4 = "rk4"


@dataclass(frozen=True)
class DensityParams:
    """Coefficients of the linear density law.

    ``alpha`` and ``beta`` are the thermal expansion and haline contraction
    coefficients of the box model parameter table (0.2 and 0.8).  ``rho0`` is
    not given there; it cancels from ``rho1 - rho2`` under the linear law.
    """

    rho0: float = 1027.0
    t0: float = 24.0
    s0: float = 35.0
    alpha: float = 0.2
    beta: float = 0.8

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ConfigError(f"rho0 must be positive, got {self.rho0}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class ModelConfig:
    density_law: DensityLaw = DensityLaw.LINEAR
    variant: Variant = Variant.STANDARD
    k: float = 1e10
    area: float = 5e7
    depth: float = 4000.0
    volume1: Optional[float] = None
    volume2: Optional[float] = None
    density: DensityParams = field(default_factory=DensityParams)

    def __post_init__(self):
        object.__setattr__(self, "density_law", DensityLaw(self.density_law))
        object.__setattr__(self, "variant", Variant(self.variant))
        box = self.area * self.depth
        if self.volume1 is None:
            object.__setattr__(self, "volume1", box)
        if self.volume2 is None:
            object.__setattr__(self, "volume2", box)
        if not (self.volume1 > 0 and self.volume2 > 0):
            raise ConfigError("box volumes must be positive")
        if self.variant is Variant.STANDARD:
            if self.volume1 != self.volume2:
                raise ConfigError("the standard variant needs volume1 == volume2")
            if self.density_law is DensityLaw.EOS80:
                raise ConfigError(
                    "EOS-80 needs absolute temperatures and salinities; "
                    "use the extended variant"
                )


@dataclass(frozen=True)
class BoxState:
    s1: float
    s2: float
    t1: float
    t2: float

    def __post_init__(self):
        vals = (self.s1, self.s2, self.t1, self.t2)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"non-finite box state {vals}")
        if self.s1 < 0 or self.s2 < 0:
            raise DomainError(f"negative salinity in {vals}")

    def to_delta(self) -> "DeltaState":
        return DeltaState(self.s1 - self.s2, self.t1 - self.t2)


@dataclass(frozen=True)
class DeltaState:
    delta_s: float
    delta_t: float

    def __post_init__(self):
        if not (math.isfinite(self.delta_s) and math.isfinite(self.delta_t)):
            raise DomainError(f"non-finite delta state ({self.delta_s}, {self.delta_t})")


# Table of box model parameters: initial values of both boxes.
TABLE_INITIAL = BoxState(s1=12.0, s2=20.0, t1=1.0, t2=10.0)


@dataclass(frozen=True)
class TimeGrid:
    tau_max: float = 150_000.0
    dt: float = 2.0
    output_stride: int = 50

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.tau_max >= self.dt:
            raise ConfigError("tau_max must be at least dt")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ConfigError("output_stride must be an integer >= 1")
        object.__setattr__(self, "output_stride", int(self.output_stride))
        if self.n_steps < 2:
            raise ConfigError("the grid must hold at least two steps")

    @property
    def n_steps(self) -> int:
        # small guard so that 150000/2 does not become 74999 through rounding
        return int(math.floor(self.tau_max / self.dt + 1e-9))

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.output_stride + 1

    @property
    def last_step(self) -> int:
        """Index of the final integration step (always a stored sample)."""
        return (self.n_samples - 1) * self.output_stride


# --------------------------------------------------------------------------
# density
# --------------------------------------------------------------------------

def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise DomainError(f"non-finite input {v!r}")


def rho_linear(t, s, p: DensityParams = DensityParams()):
    """Linear density ``rho0 - alpha (T - T0) + beta (S - S0)`` in kg/m^3."""
    _check_finite(t, s)
    return p.rho0 - p.alpha * (t - p.t0) + p.beta * (s - p.s0)


# UNESCO (1983) one-atmosphere polynomial, temperature on the IPTS-68 scale.
_A = (999.842594, 6.793952e-2, -9.095290e-3, 1.001685e-4, -1.120083e-6, 6.536332e-9)
_B = (8.24493e-1, -4.0899e-3, 7.6438e-5, -8.2467e-7, 5.3875e-9)
_C = (-5.72466e-3, 1.0227e-4, -1.6546e-6)
_D0 = 4.8314e-4

EOS80_T_RANGE = (0.0, 40.0)
EOS80_S_RANGE = (0.0, 42.0)


def _eos80_poly(t, s):
    pure = _A[0] + t * (_A[1] + t * (_A[2] + t * (_A[3] + t * (_A[4] + t * _A[5]))))
    lin = _B[0] + t * (_B[1] + t * (_B[2] + t * (_B[3] + t * _B[4])))
    three_halves = _C[0] + t * (_C[1] + t * _C[2])
    return pure + lin * s + three_halves * s * np.sqrt(s) + _D0 * s * s


def rho_eos80(t, s):
    """Seawater density (kg/m^3) at atmospheric pressure from EOS-80.

    Valid for 0 <= t <= 40 degC and 0 <= s <= 42; anything outside raises
    ``DomainError`` rather than extrapolating.  Accepts scalars or arrays.
    """
    t_arr = np.asarray(t, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    _check_finite(t_arr, s_arr)
    if np.any(t_arr < EOS80_T_RANGE[0]) or np.any(t_arr > EOS80_T_RANGE[1]):
        raise DomainError(f"temperature outside EOS-80 range {EOS80_T_RANGE}: {t}")
    if np.any(s_arr < EOS80_S_RANGE[0]) or np.any(s_arr > EOS80_S_RANGE[1]):
        raise DomainError(f"salinity outside EOS-80 range {EOS80_S_RANGE}: {s}")
    rho = _eos80_poly(t_arr, s_arr)
    return float(rho) if rho.ndim == 0 else rho


def _rho_eos80_scalar(t: float, s: float) -> float:
    if not (0.0 <= t <= 40.0 and 0.0 <= s <= 42.0):
        raise DomainError(f"(T={t}, S={s}) outside the EOS-80 validity range")
    pure = _A[0] + t * (_A[1] + t * (_A[2] + t * (_A[3] + t * (_A[4] + t * _A[5]))))
    lin = _B[0] + t * (_B[1] + t * (_B[2] + t * (_B[3] + t * _B[4])))
    three_halves = _C[0] + t * (_C[1] + t * _C[2])
    return pure + lin * s + three_halves * s * math.sqrt(s) + _D0 * s * s


# --------------------------------------------------------------------------
# flow strength
# --------------------------------------------------------------------------

def q_from_state(state: Union[BoxState, DeltaState], cfg: ModelConfig) -> float:
    """Overturning strength ``k (rho1 - rho2)``."""
    p = cfg.density
    if cfg.density_law is DensityLaw.EOS80:
        if not isinstance(state, BoxState):
            raise ConfigError("EOS-80 flow needs a BoxState (absolute T and S)")
        return cfg.k * (_rho_eos80_scalar(state.t1, state.s1)
                        - _rho_eos80_scalar(state.t2, state.s2))
    if isinstance(state, BoxState):
        ds, dtemp = state.s1 - state.s2, state.t1 - state.t2
    else:
        ds, dtemp = state.delta_s, state.delta_t
    return cfg.k * (p.beta * ds - p.alpha * dtemp)


# --------------------------------------------------------------------------
# right-hand sides (plain floats, tuples)
# --------------------------------------------------------------------------

def _standard_rhs(cfg: ModelConfig):
    k, a, b, v = cfg.k, cfg.density.alpha, cfg.density.beta, cfg.volume1

    def rhs(y, fs, ft):
        ds, dtemp = y
        aq = abs(k * (b * ds - a * dtemp))
        return (-2.0 * (aq * ds + fs) / v, -2.0 * (aq * dtemp + ft) / v)

    return rhs


def _extended_rhs(cfg: ModelConfig):
    k, v1, v2 = cfg.k, cfg.volume1, cfg.volume2
    if cfg.density_law is DensityLaw.EOS80:
        rho = _rho_eos80_scalar
    else:
        p = cfg.density

        def rho(t, s):
            return p.rho0 - p.alpha * (t - p.t0) + p.beta * (s - p.s0)

    def rhs(y, fs, ft):
        s1, s2, t1, t2 = y
        aq = abs(k * (rho(t1, s1) - rho(t2, s2)))
        return (
            (aq * (s2 - s1) - fs) / v1,
            (aq * (s1 - s2) + fs) / v2,
            (aq * (t2 - t1) - ft) / v1,
            (aq * (t1 - t2) + ft) / v2,
        )

    return rhs


def _euler(rhs, y, f0, f_half, f1, h):
    d = rhs(y, *f0)
    return tuple(yi + h * di for yi, di in zip(y, d))


def _rk4(rhs, y, f0, f_half, f1, h):
    if len(y) == 4:
        return _rk4_four(rhs, y, f0, f_half, f1, h)
    if len(y) == 2:
        return _rk4_two(rhs, y, f0, f_half, f1, h)
    k1 = rhs(y, *f0)
    k2 = rhs(tuple(yi + 0.5 * h * di for yi, di in zip(y, k1)), *f_half)
    k3 = rhs(tuple(yi + 0.5 * h * di for yi, di in zip(y, k2)), *f_half)
    k4 = rhs(tuple(yi + h * di for yi, di in zip(y, k3)), *f1)
    return tuple(
        yi + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
        for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
    )


# unrolled copies of _rk4 for the two hot loops
def _rk4_two(rhs, y, f0, f_half, f1, h):
    a, b = y
    hh = 0.5 * h
    k1 = rhs(y, *f0)
    k2 = rhs((a + hh * k1[0], b + hh * k1[1]), *f_half)
    k3 = rhs((a + hh * k2[0], b + hh * k2[1]), *f_half)
    k4 = rhs((a + h * k3[0], b + h * k3[1]), *f1)
    w = h / 6.0
    return (
        a + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        b + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    )


def _rk4_four(rhs, y, f0, f_half, f1, h):
    a, b, c, d = y
    hh = 0.5 * h
    k1 = rhs(y, *f0)
    k2 = rhs((a + hh * k1[0], b + hh * k1[1], c + hh * k1[2], d + hh * k1[3]), *f_half)
    k3 = rhs((a + hh * k2[0], b + hh * k2[1], c + hh * k2[2], d + hh * k2[3]), *f_half)
    k4 = rhs((a + h * k3[0], b + h * k3[1], c + h * k3[2], d + h * k3[3]), *f1)
    w = h / 6.0
    return (
        a + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        b + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        c + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        d + w * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
    )


_STEPPERS = {Method.EULER: _euler, Method.RK4: _rk4}


def _require_finite(y, tau):
    for v in y:
        if not math.isfinite(v):
            raise IntegrationError(f"non-finite state {y} at tau={tau}", tau=tau)


def step_standard(ds: DeltaState, fs: float, ft: float, cfg: ModelConfig,
                  dt: float, method: Method = Method.RK4) -> DeltaState:
    """Advance ``(delta_s, delta_t)`` by one step with forcing held constant."""
    if cfg.variant is not Variant.STANDARD:
        raise ConfigError("step_standard needs a standard-variant config")
    if not dt > 0:
        raise ConfigError("dt must be positive")
    f = (fs, ft)
    y = _STEPPERS[Method(method)](_standard_rhs(cfg), (ds.delta_s, ds.delta_t), f, f, f, dt)
    _require_finite(y, None)
    return DeltaState(*y)


def step_extended(bs: BoxState, fs: float, ft: float, cfg: ModelConfig,
                  dt: float, method: Method = Method.RK4) -> BoxState:
    """Advance ``(S1, S2, T1, T2)`` by one step with forcing held constant."""
    if cfg.variant is not Variant.EXTENDED:
        raise ConfigError("step_extended needs an extended-variant config")
    if not dt > 0:
        raise ConfigError("dt must be positive")
    f = (fs, ft)
    y = _STEPPERS[Method(method)](
        _extended_rhs(cfg), (bs.s1, bs.s2, bs.t1, bs.t2), f, f, f, dt)
    _require_finite(y, None)
    return BoxState(*y)


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------

CSV_COLUMNS = ("tau", "s1", "s2", "t1", "t2", "delta_s", "delta_t", "fs", "ft", "q")


@dataclass
class Trajectory:
    """Time series produced by :func:`integrate`.

    ``s1``..``t2`` are ``None`` for the standard variant; ``delta_s`` and
    ``delta_t`` are always filled (derived for the extended variant).
    """

    variant: Variant
    tau: np.ndarray
    delta_s: np.ndarray
    delta_t: np.ndarray
    fs: np.ndarray
    ft: np.ndarray
    q: np.ndarray
    s1: Optional[np.ndarray] = None
    s2: Optional[np.ndarray] = None
    t1: Optional[np.ndarray] = None
    t2: Optional[np.ndarray] = None

    def __post_init__(self):
        self.variant = Variant(self.variant)
        n = len(self.tau)
        if n < 2:
            raise ConfigError("a trajectory needs at least two samples")
        for name in CSV_COLUMNS[1:]:
            col = getattr(self, name)
            if col is not None and len(col) != n:
                raise ConfigError(f"column {name} has length {len(col)}, expected {n}")
        if np.any(np.diff(self.tau) <= 0):
            raise ConfigError("tau must be strictly increasing")

    def __len__(self):
        return len(self.tau)

    def column(self, name: str) -> np.ndarray:
        col = getattr(self, name, None)
        if col is None:
            raise KeyError(f"trajectory has no column '{name}'")
        return col

    def has(self, name: str) -> bool:
        return getattr(self, name, None) is not None

    def state_at(self, i: int) -> Union[BoxState, DeltaState]:
        if self.variant is Variant.EXTENDED:
            return BoxState(float(self.s1[i]), float(self.s2[i]),
                            float(self.t1[i]), float(self.t2[i]))
        return DeltaState(float(self.delta_s[i]), float(self.delta_t[i]))

    def to_csv(self, path) -> None:
        """Write with 17 significant digits; absent columns stay empty."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            cols = [getattr(self, c) for c in CSV_COLUMNS]
            for i in range(len(self)):
                w.writerow(["" if c is None else format(float(c[i]), ".17g") for c in cols])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if tuple(header) != CSV_COLUMNS:
            raise ConfigError(f"unexpected trajectory header {header}")
        data = {}
        for j, name in enumerate(header):
            vals = [r[j] for r in body]
            data[name] = None if all(v == "" for v in vals) else np.array(vals, dtype=float)
        variant = Variant.EXTENDED if data["s1"] is not None else Variant.STANDARD
        return cls(variant=variant, **data)


def _forcing_values(f, taus: np.ndarray, tau_max: float) -> np.ndarray:
    """Evaluate a ForcingSpec (anything with ``.value``) or a callable on ``taus``."""
    if f is None:
        return np.zeros_like(taus)
    if hasattr(f, "value"):
        return np.asarray(f.value(taus, tau_max), dtype=float)
    return np.asarray([float(f(t)) for t in taus], dtype=float)


def integrate(cfg: ModelConfig, fs, ft, grid: TimeGrid,
              initial: Union[BoxState, DeltaState],
              method: Method = Method.RK4) -> Trajectory:
    """Integrate the box model on a fixed grid.

    Parameters
    ----------
    cfg : ModelConfig
    fs, ft : ForcingSpec or callable
        Freshwater and temperature forcing as functions of tau (years).
        ``None`` means identically zero.
    grid : TimeGrid
        The run covers ``grid.last_step`` steps of ``grid.dt`` and stores
        every ``output_stride``-th state, tau=0 and the last step included.
    initial : BoxState or DeltaState
        Must match ``cfg.variant``.  A BoxState is accepted for the
        standard variant and reduced to its differences.
    method : Method

    Raises
    ------
    IntegrationError
        When the state turns non-finite, leaves the EOS-80 range or produces
        negative salinity.  ``err.tau`` is the model time of the failure.
    """
    method = Method(method)
    extended = cfg.variant is Variant.EXTENDED
    if extended:
        if not isinstance(initial, BoxState):
            raise ConfigError("the extended variant needs a BoxState initial condition")
        y = (initial.s1, initial.s2, initial.t1, initial.t2)
        rhs = _extended_rhs(cfg)
    else:
        if isinstance(initial, BoxState):
            initial = initial.to_delta()
        y = (initial.delta_s, initial.delta_t)
        rhs = _standard_rhs(cfg)

    h = grid.dt
    n = grid.last_step
    stride = grid.output_stride
    # forcing at every half step: index 2i is tau_i, 2i+1 is tau_i + h/2
    half_taus = np.arange(2 * n + 1) * (0.5 * h)
    fs_half = _forcing_values(fs, half_taus, grid.tau_max).tolist()
    ft_half = _forcing_values(ft, half_taus, grid.tau_max).tolist()
    stepper = _STEPPERS[method]

    stored = [y]
    try:
        for i in range(n):
            j = 2 * i
            y = stepper(rhs, y,
                        (fs_half[j], ft_half[j]),
                        (fs_half[j + 1], ft_half[j + 1]),
                        (fs_half[j + 2], ft_half[j + 2]), h)
            if extended:
                if not (math.isfinite(y[0]) and math.isfinite(y[1])
                        and math.isfinite(y[2]) and math.isfinite(y[3])):
                    raise IntegrationError(f"non-finite state {y}", tau=(i + 1) * h)
                if y[0] < 0 or y[1] < 0:
                    raise IntegrationError(f"negative salinity {y}", tau=(i + 1) * h)
            elif not (math.isfinite(y[0]) and math.isfinite(y[1])):
                raise IntegrationError(f"non-finite state {y}", tau=(i + 1) * h)
            if (i + 1) % stride == 0:
                stored.append(y)
    except DomainError as exc:
        # the EOS polynomial refused a stage value
        raise IntegrationError(f"state left the density law's domain: {exc}",
                               tau=(i + 1) * h) from exc
    except OverflowError as exc:
        raise IntegrationError(f"overflow: {exc}", tau=(i + 1) * h) from exc

    arr = np.array(stored, dtype=float)
    idx = np.arange(len(stored)) * stride
    tau = idx * h
    fs_out = np.asarray(fs_half, dtype=float)[2 * idx]
    ft_out = np.asarray(ft_half, dtype=float)[2 * idx]
    if extended:
        states = [BoxState(*row) for row in arr]
        q = np.array([q_from_state(s, cfg) for s in states])
        return Trajectory(
            variant=cfg.variant, tau=tau,
            delta_s=arr[:, 0] - arr[:, 1], delta_t=arr[:, 2] - arr[:, 3],
            fs=fs_out, ft=ft_out, q=q,
            s1=arr[:, 0], s2=arr[:, 1], t1=arr[:, 2], t2=arr[:, 3],
        )
    p = cfg.density
    q = cfg.k * (p.beta * arr[:, 0] - p.alpha * arr[:, 1])
    return Trajectory(variant=cfg.variant, tau=tau, delta_s=arr[:, 0],
                      delta_t=arr[:, 1], fs=fs_out, ft=ft_out, q=q)

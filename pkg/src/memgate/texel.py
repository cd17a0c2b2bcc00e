"""Texels (template pixels) and texel arrays.

A texel is a two-memristor inverter whose mid node ``V_MID`` feeds the
current-output read-out. It sources the most current when ``V_MID`` sits
at the read-out switch point (``V_OPT``), i.e. when the input equals the
peak input ``v_pk`` set by the stored resistance ``r1`` (pull-down). An
array sums texel currents into one load resistor.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .dcsolver import solve_dc
from .devices import MemristorState, MosfetParams, memristor_program, nmos, pmos
from .netlist import build_inverter_2t2r
from .readout import ReadoutParams, mirrored_current, switch_point

TEXEL_R_MIN = 1e3
TEXEL_R_MAX = 1e6
DEFAULT_LOAD = 300e3
V_PK_TOL = 1e-9


class UnreachableTarget(ValueError):
    def __init__(self, message, achievable=None, index=None):
        super().__init__(message)
        self.achievable = achievable
        self.index = index


def texel_memristor(r):
    return MemristorState(float(r), r_min=TEXEL_R_MIN, r_max=TEXEL_R_MAX)


def _default_readout():
    return ReadoutParams(mirror_gain=0.5)


@dataclass(frozen=True)
class TexelConfig:
    pmos: MosfetParams = field(default_factory=lambda: pmos(w=30.0))
    nmos: MosfetParams = field(default_factory=lambda: nmos(w=40.0))
    r0: MemristorState = field(default_factory=lambda: texel_memristor(20e3))
    r1: MemristorState = field(default_factory=lambda: texel_memristor(35e3))
    readout: ReadoutParams = field(default_factory=_default_readout)
    vdd: float = 1.65
    r_limit: float | None = None

    def __post_init__(self):
        if abs(self.readout.vdd - self.vdd) > 1e-12:
            raise ValueError("texel and read-out supplies differ")
        if self.r_limit is not None and not self.r_limit > 0:
            raise ValueError("r_limit must be positive")

    @property
    def circuit(self):
        return build_inverter_2t2r(self.pmos, self.nmos, self.r0, self.r1, self.vdd)

    def with_r1(self, r):
        return replace(self, r1=memristor_program(self.r1, r))


def v_mid(t: TexelConfig, v_in) -> float:
    return solve_dc(t.circuit, {"in": v_in}).output


def texel_current(t: TexelConfig, v_in) -> float:
    """Output current of one texel at input ``v_in``."""
    if not 0 <= v_in <= t.vdd:
        raise ValueError(f"v_in={v_in!r} outside [0, vdd]")
    i = mirrored_current(t.readout, v_mid(t, v_in))
    if t.r_limit is not None:
        i = min(i, t.vdd / t.r_limit)
    return i


def peak_input(t: TexelConfig) -> float:
    """Input at which ``V_MID`` equals the read-out switch point."""
    v_opt = switch_point(t.readout)
    circuit = t.circuit

    def excess(v):
        return solve_dc(circuit, {"in": v}).output - v_opt

    lo, hi = excess(0.0), excess(t.vdd)
    if lo * hi > 0:
        raise UnreachableTarget(f"V_OPT={v_opt:.4f} V outside the V_MID range "
                                f"[{hi + v_opt:.4f}, {lo + v_opt:.4f}] V")
    return float(brentq(excess, 0.0, t.vdd, xtol=V_PK_TOL))


@dataclass(frozen=True)
class TexelArrayConfig:
    texels: tuple
    r_load: float = DEFAULT_LOAD
    vdd: float = 1.65

    def __post_init__(self):
        if not self.texels:
            raise ValueError("texel array is empty")
        if not self.r_load > 0:
            raise ValueError("r_load must be positive")
        object.__setattr__(self, "texels", tuple(self.texels))

    @classmethod
    def from_resistances(cls, r1_values, r_load=DEFAULT_LOAD, template=None):
        template = template or TexelConfig()
        texels = tuple(template.with_r1(r) for r in r1_values)
        return cls(texels, r_load, template.vdd)

    @property
    def resistances(self):
        return tuple(t.r1.resistance for t in self.texels)


@dataclass(frozen=True)
class MatchResult:
    v_out: float
    per_texel_current: tuple
    clipped: bool


def achievable_range(t: TexelConfig):
    lo = peak_input(t.with_r1(t.r1.r_min))
    hi = peak_input(t.with_r1(t.r1.r_max))
    return lo, hi


def program_r1(t: TexelConfig, target, tol=1e-4) -> TexelConfig:
    """Texel with ``r1`` chosen so that ``peak_input`` hits ``target``.

    ``peak_input`` rises with ``r1``; the search runs on ``log(r1)``.
    """
    lo_v, hi_v = achievable_range(t)
    if not lo_v <= target <= hi_v:
        raise UnreachableTarget(
            f"target {target:.4f} V outside achievable v_pk range [{lo_v:.4f}, {hi_v:.4f}] V",
            achievable=(lo_v, hi_v))

    def resistance(log_r):
        return float(np.clip(np.exp(log_r), t.r1.r_min, t.r1.r_max))

    def miss(log_r):
        return peak_input(t.with_r1(resistance(log_r))) - target

    log_r = brentq(miss, np.log(t.r1.r_min), np.log(t.r1.r_max), xtol=1e-10)
    programmed = t.with_r1(resistance(log_r))
    if abs(peak_input(programmed) - target) > tol:
        raise UnreachableTarget(f"could not place v_pk within {tol} V of {target}")
    return programmed


def program_template(array: TexelArrayConfig, targets) -> TexelArrayConfig:
    """Reprogram every texel's ``r1`` so its peak input matches ``targets``."""
    targets = list(targets)
    if len(targets) != len(array.texels):
        raise ValueError(f"{len(targets)} targets for {len(array.texels)} texels")
    texels = []
    for k, (t, v) in enumerate(zip(array.texels, targets)):
        try:
            texels.append(program_r1(t, v))
        except UnreachableTarget as exc:
            raise UnreachableTarget(f"texel {k}: {exc}", achievable=exc.achievable,
                                    index=k) from exc
    return replace(array, texels=tuple(texels))


def array_match(array: TexelArrayConfig, inputs) -> MatchResult:
    """Sum texel currents into the common load, clipped at the supply."""
    inputs = list(inputs)
    if len(inputs) != len(array.texels):
        raise ValueError(f"{len(inputs)} inputs for {len(array.texels)} texels")
    currents = tuple(texel_current(t, v) for t, v in zip(array.texels, inputs))
    v = array.r_load * sum(currents)
    clipped = v > array.vdd
    return MatchResult(min(v, array.vdd), currents, clipped)

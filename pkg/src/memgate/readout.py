"""Read-out stage: a plain CMOS inverter behind a current mirror.

The inverter digitises an analogue level (``v_out1``); its shoot-through
current, largest when both transistors conduct, is compared with a
reference (``on_target``) or mirrored out as a current. The mirror itself
is behavioural: an ideal comparator or an ideal current source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .dcsolver import solve_dc, supply_current
from .devices import MosfetParams, nmos, pmos
from .netlist import GateCircuit, Node, Transistor, INPUT, OUTPUT, RAIL_GND, RAIL_VDD

ONE, ZERO, AMBIGUOUS = "one", "zero", "ambiguous"


class ConfigurationError(ValueError):
    pass


def beta_matched_pmos(n: MosfetParams, v_th=0.65, k_prime=58e-6) -> MosfetParams:
    """pMOS with the same ``k' * W/L`` as ``n``.

    With equal betas the shoot-through current peaks exactly where the
    output crosses mid-supply.
    """
    return pmos(v_th=v_th, k_prime=k_prime, w=n.beta * n.l / k_prime, l=n.l,
                lam=n.lam, g_min=n.g_min)


def _default_nmos():
    return nmos()


def _default_pmos():
    return beta_matched_pmos(nmos())


@dataclass(frozen=True)
class ReadoutParams:
    pmos: MosfetParams = field(default_factory=_default_pmos)
    nmos: MosfetParams = field(default_factory=_default_nmos)
    vdd: float = 1.65
    i_ref: float = 0.75e-6
    mirror_gain: float = 1.0
    ambiguity_margin: float | None = None

    def __post_init__(self):
        if self.pmos.polarity != "p" or self.nmos.polarity != "n":
            raise ValueError("read-out needs one pMOS and one nMOS")
        if not self.vdd > 0:
            raise ValueError("vdd must be positive")
        if not self.i_ref > 0:
            raise ValueError("i_ref must be positive")
        if not self.mirror_gain > 0:
            raise ValueError("mirror_gain must be positive")
        if self.ambiguity_margin is None:
            object.__setattr__(self, "ambiguity_margin", 0.1 * self.vdd)
        if not 0 < self.ambiguity_margin < self.vdd / 2:
            raise ValueError("ambiguity_margin must lie in (0, vdd/2)")


@dataclass(frozen=True)
class DigitizationResult:
    bit: str
    v_out1: float
    i_shoot: float
    on_target: bool = False
    i_out: float = 0.0
    v_out2: float | None = None


@lru_cache(maxsize=64)
def readout_circuit(p: ReadoutParams) -> GateCircuit:
    """The bare read-out inverter as a solvable circuit (input port ``in``)."""
    return GateCircuit(
        family="readout_inverter",
        nodes=(Node("vdd", RAIL_VDD), Node("gnd", RAIL_GND), Node("out", OUTPUT),
               Node("in", INPUT)),
        transistors=(
            Transistor("MP", p.pmos, gate="in", source="vdd", drain="out"),
            Transistor("MN", p.nmos, gate="in", source="gnd", drain="out"),
        ),
        memristors=(),
        vdd=p.vdd,
        inputs={"in": "in"},
    )


def _solve(p: ReadoutParams, v_mid):
    if not 0 <= v_mid <= p.vdd:
        raise ValueError(f"v_mid={v_mid!r} outside [0, vdd]")
    circuit = readout_circuit(p)
    op = solve_dc(circuit, {"in": v_mid})
    return op.output, supply_current(circuit, op)


def shoot_through(p: ReadoutParams, v_mid) -> float:
    return _solve(p, v_mid)[1]


@lru_cache(maxsize=64)
def switch_point(p: ReadoutParams) -> float:
    """Input level at which the read-out inverter output sits at ``vdd/2``."""
    half = p.vdd / 2

    def excess(v):
        return _solve(p, v)[0] - half

    lo, hi = 0.0, p.vdd
    if excess(lo) * excess(hi) > 0:
        raise ConfigurationError("read-out output never crosses vdd/2")
    return float(brentq(excess, lo, hi, xtol=1e-12))


def digitize(p: ReadoutParams, v_mid) -> DigitizationResult:
    v_out1, i_shoot = _solve(p, v_mid)
    if v_out1 >= p.vdd - p.ambiguity_margin:
        bit = ONE
    elif v_out1 <= p.ambiguity_margin:
        bit = ZERO
    else:
        bit = AMBIGUOUS
    return DigitizationResult(bit, v_out1, i_shoot, i_out=p.mirror_gain * i_shoot)


def on_target(p: ReadoutParams, v_mid) -> DigitizationResult:
    """Digitise and compare the shoot-through current with ``i_ref``.

    ``v_out2`` is two-level: pulled to 0 when on target, else at ``vdd``.
    """
    d = digitize(p, v_mid)
    hit = d.i_shoot >= p.i_ref
    return DigitizationResult(d.bit, d.v_out1, d.i_shoot, on_target=hit, i_out=d.i_out,
                              v_out2=0.0 if hit else p.vdd)


def mirrored_current(p: ReadoutParams, v_mid) -> float:
    return p.mirror_gain * shoot_through(p, v_mid)


def on_target_window(p: ReadoutParams):
    """``(lo, hi)`` input interval where ``i_shoot >= i_ref``, or None if empty."""
    peak = switch_point(p)
    if shoot_through(p, peak) < p.i_ref:
        return None

    def excess(v):
        return shoot_through(p, v) - p.i_ref

    lo = brentq(excess, 0.0, peak, xtol=1e-9) if excess(0.0) < 0 else 0.0
    hi = brentq(excess, peak, p.vdd, xtol=1e-9) if excess(p.vdd) < 0 else p.vdd
    return float(lo), float(hi)


def scan(p: ReadoutParams, grid):
    """``(v_out1, i_shoot)`` arrays over an input grid."""
    grid = np.asarray(grid, dtype=float)
    out = np.array([_solve(p, v) for v in grid])
    return out[:, 0], out[:, 1]

"""Charge and energy bookkeeping for one analogue output transition.

The gate is collapsed into a two-resistor divider driving a load
capacitor::

    VDD --r1--+--r2-- GND
              |
            c_out

After the input steps, the output relaxes from ``v_out_1`` towards
``v_out_2 = vdd * q_div`` with time constant ``r_parallel * c_out``. We
wait ``l`` time constants (``t_set``) and count the charge drawn from the
supply: a steady leakage term plus a capacitor-charging term.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import trapezoid

from .dcsolver import solve_dc, supply_current
from .netlist import GateCircuit

DEFAULT_C_OUT = 10e-15
CURRENT_FLOOR = 1e-15


class DomainError(ValueError):
    pass


def q_div(r1, r2):
    """Divider fraction ``r2 / (r1 + r2)``."""
    if not (r1 > 0 and r2 > 0):
        raise DomainError(f"resistances must be positive, got r1={r1!r}, r2={r2!r}")
    return r2 / (r1 + r2)


def e_flip(c_out, vdd):
    """Energy to flip a digital inverter, ``c_out * vdd**2 / 2``."""
    if c_out < 0 or vdd < 0:
        raise DomainError("c_out and vdd must be non-negative")
    return c_out * vdd * vdd / 2


def toggle_equivalents(q, c_out, vdd):
    """Charge ``q`` in units of one full digital output toggle (``c_out * vdd``)."""
    if not (q >= 0 and c_out > 0 and vdd > 0):
        raise DomainError("q must be >= 0; c_out and vdd positive")
    return q / (c_out * vdd)


@dataclass(frozen=True)
class DividerModel:
    r1: float
    r2: float
    c_out: float
    vdd: float
    v_out_1: float

    def __post_init__(self):
        for name in ("r1", "r2", "c_out", "vdd"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @property
    def q_div(self):
        return q_div(self.r1, self.r2)

    @property
    def v_out_2(self):
        return self.vdd * self.q_div

    @property
    def delta_v_out(self):
        return self.v_out_2 - self.v_out_1

    @property
    def r_parallel(self):
        return self.r1 * self.r2 / (self.r1 + self.r2)

    @property
    def tau(self):
        return self.r_parallel * self.c_out

    def v_out(self, t):
        """Analytic output voltage ``t`` seconds after the input step."""
        return self.v_out_2 - self.delta_v_out * np.exp(-np.asarray(t) / self.tau)

    def mirrored(self):
        """The same transition seen with the rails swapped (falling <-> rising)."""
        return DividerModel(self.r2, self.r1, self.c_out, self.vdd, self.vdd - self.v_out_1)


@dataclass(frozen=True)
class EnergyReport:
    q_div: float
    r_parallel: float
    t_set: float
    l: float
    delta_v_out: float
    q_leak: float
    q_charge: float
    q_tot: float
    q_tot_alt: float
    q_ideal: float
    e_upper: float
    e_flip_ref: float
    mirrored: bool = False


def _leak(m: DividerModel, l):
    return l * m.tau * m.vdd / (m.r1 + m.r2)


def _charge(m: DividerModel, l):
    return m.c_out * m.delta_v_out * m.q_div * -math.expm1(-l)


def _q_tot_divider_form(m: DividerModel, l):
    # leakage rewritten through q_div alone
    q = m.q_div
    return l * m.c_out * m.vdd * q * (1 - q) + _charge(m, l)


def e_upper(model: DividerModel, l):
    """Upper bound on dissipated energy (``q_div`` rounded up to one).

    Defined for rising outputs; a falling transition is mirrored first.
    """
    if l < 0:
        raise DomainError("l must be >= 0")
    m = model.mirrored() if model.delta_v_out < 0 else model
    t_set = l * m.tau
    return t_set * m.vdd ** 2 / (m.r1 + m.r2) + m.vdd * m.c_out * m.delta_v_out * -math.expm1(-l)


def q_tot(model: DividerModel, l) -> EnergyReport:
    if l < 0:
        raise DomainError("l must be >= 0")
    q_leak = _leak(model, l)
    q_charge = _charge(model, l)
    return EnergyReport(
        q_div=model.q_div,
        r_parallel=model.r_parallel,
        t_set=l * model.tau,
        l=l,
        delta_v_out=model.delta_v_out,
        q_leak=q_leak,
        q_charge=q_charge,
        q_tot=q_leak + q_charge,
        q_tot_alt=_q_tot_divider_form(model, l),
        q_ideal=model.c_out * model.delta_v_out,
        e_upper=e_upper(model, l),
        e_flip_ref=e_flip(model.c_out, model.vdd),
        mirrored=model.delta_v_out < 0,
    )


def settling_error(model: DividerModel, l):
    """``|v_out(t_set) - v_out_2|`` after ``l`` time constants."""
    return abs(float(model.v_out(l * model.tau)) - model.v_out_2)


def transient_oracle(model: DividerModel, l, dt_fraction=1e-3):
    """Trapezoidal integration of supply current and dissipated power.

    Samples the analytic single-pole output waveform on a uniform grid of
    step ``dt_fraction * tau`` and integrates

    * ``I_VDD = (vdd - v_out) / r1`` for the total charge,
    * ``I_VDD - I_VDD(inf)`` for the charging part alone,
    * ``(vdd - v_out)**2 / r1 + v_out**2 / r2`` for the energy burnt in
      the two resistors.

    Returns ``(q_tot, e_dissipated, q_charge)``.
    """
    if dt_fraction > 1e-3:
        raise DomainError("dt_fraction must be <= 1e-3")
    if l == 0:
        return 0.0, 0.0, 0.0
    n = max(int(math.ceil(l / dt_fraction)), 2)
    t = np.linspace(0.0, l * model.tau, n + 1)
    v = model.v_out(t)
    i_vdd = (model.vdd - v) / model.r1
    i_final = (model.vdd - model.v_out_2) / model.r1
    power = (model.vdd - v) ** 2 / model.r1 + v ** 2 / model.r2
    q = float(trapezoid(i_vdd, t))
    q_charge = float(trapezoid(i_vdd - i_final, t))
    e = float(trapezoid(power, t))
    return q, e, q_charge


def effective_divider(circuit: GateCircuit, v_in, c_out=DEFAULT_C_OUT, v_out_1=None,
                      port=None) -> DividerModel:
    """Collapse an inverter at input ``v_in`` into its r1/r2 divider.

    The pull-up and pull-down branch conductances are the supply current
    over the voltage each branch drops. Below ``CURRENT_FLOOR`` the branch
    carrying the larger drop is treated as cut off (``1/g_min``) and the
    other keeps the observed voltage ratio. ``v_out_1`` defaults to the
    solved output, i.e. a zero-swing transition.
    """
    port = port or next(iter(circuit.inputs))
    op = solve_dc(circuit, {port: v_in})
    v_out = op.output
    i = supply_current(circuit, op)
    drop_up = circuit.vdd - v_out
    drop_dn = v_out
    g_min = max((t.params.g_min for t in circuit.transistors), default=0.0) or 1e-12
    r_off = 1.0 / g_min
    if i >= CURRENT_FLOOR and drop_up > 0 and drop_dn > 0:
        r1, r2 = drop_up / i, drop_dn / i
    else:
        big, small = max(drop_up, drop_dn), max(min(drop_up, drop_dn), 0.0)
        r_cut = r_off
        r_other = max(r_cut * small / big, 1e-3) if big > 0 else r_cut
        r1, r2 = (r_cut, r_other) if drop_up >= drop_dn else (r_other, r_cut)
    return DividerModel(r1, r2, c_out, circuit.vdd, v_out if v_out_1 is None else v_out_1)

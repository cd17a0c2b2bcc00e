"""Compact device models: square-law MOSFET and programmable ohmic memristor.

MOSFET regions (nMOS, ``v_ds >= 0``)::

    cutoff      v_ov <= 0              I = 0
    triode      0 <= v_ds < v_ov       I = beta * (v_ov*v_ds - v_ds**2/2) * (1 + lam*v_ds)
    saturation  v_ds >= v_ov > 0       I = beta/2 * v_ov**2 * (1 + lam*v_ds)

with ``v_ov = v_gs - v_th`` and ``beta = k_prime * W/L``. A conductance
``g_min * v_ds`` is always added. For ``v_ds < 0`` source and drain swap
roles. pMOS devices are evaluated by reflecting all terminal voltages:
``I_p(vg, vs, vd) = -I_n(-vg, -vs, -vd)``.

Everything here is written with plain arithmetic and comparisons so the
functions also accept ``mpmath`` numbers (used by the gradient tests).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math


class RangeError(ValueError):
    """A programmed value falls outside the device bounds."""


@dataclass(frozen=True)
class MosfetParams:
    polarity: str = "n"
    v_th: float = 0.5
    k_prime: float = 170e-6
    w: float = 1.0
    l: float = 3.5
    lam: float = 0.05
    g_min: float = 1e-12

    def __post_init__(self):
        if self.polarity not in ("n", "p"):
            raise ValueError(f"polarity must be 'n' or 'p', got {self.polarity!r}")
        for name in ("v_th", "k_prime", "w", "l"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam!r}")
        if not self.g_min >= 0:
            raise ValueError(f"g_min must be >= 0, got {self.g_min!r}")

    @property
    def beta(self):
        return self.k_prime * self.w / self.l

    def flipped(self):
        """Same parameters, opposite polarity."""
        return replace(self, polarity="p" if self.polarity == "n" else "n")


def nmos(**kwargs) -> MosfetParams:
    """Default nMOS: 0.35 um-class process, W/L = 1/3.5."""
    kwargs.setdefault("polarity", "n")
    return MosfetParams(**kwargs)


def pmos(**kwargs) -> MosfetParams:
    """Default pMOS: v_th 0.65 V, k' 58 uA/V^2, W/L = 12/3.5."""
    defaults = dict(polarity="p", v_th=0.65, k_prime=58e-6, w=12.0, l=3.5)
    defaults.update(kwargs)
    return MosfetParams(**defaults)


def _forward(beta, v_th, lam, v_gs, v_ds):
    # v_ds >= 0 here; returns (I, dI/dv_gs, dI/dv_ds) without g_min
    v_ov = v_gs - v_th
    if v_ov <= 0:
        return 0 * v_ds, 0 * v_ds, 0 * v_ds
    clm = 1 + lam * v_ds
    if v_ds < v_ov:
        core = v_ov * v_ds - v_ds * v_ds / 2
        i = beta * core * clm
        d_gs = beta * v_ds * clm
        d_ds = beta * ((v_ov - v_ds) * clm + core * lam)
    else:
        core = v_ov * v_ov / 2
        i = beta * core * clm
        d_gs = beta * v_ov * clm
        d_ds = beta * core * lam
    return i, d_gs, d_ds


def _nmos_eval(p, v_g, v_s, v_d):
    """Current drain->source and partials w.r.t. (v_g, v_s, v_d)."""
    v_ds = v_d - v_s
    if v_ds >= 0:
        i, d_gs, d_ds = _forward(p.beta, p.v_th, p.lam, v_g - v_s, v_ds)
        dg, ds, dd = d_gs, -d_gs - d_ds, d_ds
    else:
        # source/drain swapped: I = -I_fwd(v_gd, v_sd)
        i, d_gd, d_sd = _forward(p.beta, p.v_th, p.lam, v_g - v_d, -v_ds)
        i = -i
        dg, ds, dd = -d_gd, -d_sd, d_gd + d_sd
    i = i + p.g_min * v_ds
    return i, dg, ds - p.g_min, dd + p.g_min


def mosfet_eval(p: MosfetParams, v_g, v_s, v_d):
    """Return ``(I_ds, dI/dv_g, dI/dv_s, dI/dv_d)`` in one pass.

    ``I_ds`` is the current entering the drain terminal and leaving the
    source through the channel, for either polarity.
    """
    if p.polarity == "n":
        return _nmos_eval(p, v_g, v_s, v_d)
    i, dg, ds, dd = _nmos_eval(p, -v_g, -v_s, -v_d)
    # d/dv[-f(-v)] = f'(-v)
    return -i, dg, ds, dd


def mosfet_current(p: MosfetParams, v_g, v_s, v_d):
    return mosfet_eval(p, v_g, v_s, v_d)[0]


def mosfet_conductances(p: MosfetParams, v_g, v_s, v_d):
    """Analytic partials ``(dI/dv_g, dI/dv_s, dI/dv_d)`` of :func:`mosfet_current`."""
    return mosfet_eval(p, v_g, v_s, v_d)[1:]


@dataclass(frozen=True)
class MemristorState:
    """A memristor held at a fixed resistance between DC solves.

    ``read_voltage_ref`` is bookkeeping only: the voltage at which the
    programmed value was (nominally) measured.
    """

    resistance: float
    r_min: float = 1.0
    r_max: float = 1e9
    read_voltage_ref: float = 0.2

    def __post_init__(self):
        if not self.r_min > 0:
            raise ValueError(f"r_min must be positive, got {self.r_min!r}")
        if not self.r_min <= self.r_max:
            raise ValueError(f"r_min {self.r_min!r} exceeds r_max {self.r_max!r}")
        _check_bounds(self.resistance, self.r_min, self.r_max)

    @property
    def conductance(self):
        return 1.0 / self.resistance

    def current(self, v_a, v_b):
        """Current flowing from terminal a to terminal b."""
        return (v_a - v_b) / self.resistance


def _check_bounds(r, r_min, r_max):
    if not math.isfinite(r):
        raise RangeError(f"resistance must be finite, got {r!r}")
    if r < r_min:
        raise RangeError(f"resistance {r:g} ohm below r_min {r_min:g} ohm")
    if r > r_max:
        raise RangeError(f"resistance {r:g} ohm above r_max {r_max:g} ohm")


def memristor_program(m: MemristorState, target: float) -> MemristorState:
    """Return a copy of ``m`` programmed to ``target`` ohms."""
    _check_bounds(target, m.r_min, m.r_max)
    if target == m.resistance:
        return m
    return replace(m, resistance=float(target))

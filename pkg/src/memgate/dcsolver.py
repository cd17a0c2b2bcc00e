"""DC operating points, sweeps and plateau metrics.

The solver writes KCL at every unknown node (currents leaving the node
through devices) and runs a damped Newton iteration. Each Newton update is
clipped to ``STEP_CLAMP`` volts per node and node voltages are kept inside
``[-0.5, vdd + 0.5]``. Should Newton stall, the output node is bisected:
with the output pinned, the remaining nodes are solved by Newton and the
sign of the net output-node current brackets the root.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .devices import mosfet_current, mosfet_eval
from .netlist import GateCircuit, RAIL_GND, RAIL_VDD

RESIDUAL_TOL = 1e-12  # A
STEP_TOL = 1e-12  # V
STEP_CLAMP = 0.1  # V per iteration
MAX_ITER = 200
RAIL_MARGIN = 0.5

PLATEAU_SLOPE = 0.25


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None, index=None):
        super().__init__(message)
        self.residual = residual
        self.index = index


@dataclass(frozen=True)
class OperatingPoint:
    node_voltages: dict
    branch_currents: dict
    residual_norm: float
    iterations: int = 0
    output_node: str = "out"

    @property
    def output(self):
        return self.node_voltages[self.output_node]


@dataclass(frozen=True)
class SweepTrace:
    input_values: np.ndarray
    output_values: np.ndarray
    config_label: str = ""
    points: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if len(self.input_values) != len(self.output_values):
            raise ValueError("input and output lengths differ")


@dataclass(frozen=True)
class PlateauMetrics:
    altitude: float
    width: float
    altitude_input: float


class _System:
    """Index bookkeeping for one circuit plus fixed input voltages."""

    def __init__(self, circuit: GateCircuit, inputs):
        self.circuit = circuit
        missing = set(circuit.inputs) - set(inputs)
        if missing:
            raise ValueError(f"missing input voltages for ports {sorted(missing)}")
        extra = set(inputs) - set(circuit.inputs)
        if extra:
            raise ValueError(f"unknown input ports {sorted(extra)}")
        fixed = {}
        for n in circuit.nodes:
            if n.kind == RAIL_VDD:
                fixed[n.id] = circuit.vdd
            elif n.kind == RAIL_GND:
                fixed[n.id] = 0.0
        for port, v in inputs.items():
            v = float(v)
            if not (0.0 <= v <= circuit.vdd):
                raise ValueError(f"input {port!r}={v!r} outside [0, vdd]")
            fixed[circuit.inputs[port]] = v
        self.fixed = fixed
        self.unknowns = circuit.unknowns
        self.index = {n: i for i, n in enumerate(self.unknowns)}
        self.lo = -RAIL_MARGIN
        self.hi = circuit.vdd + RAIL_MARGIN

    def voltages(self, x):
        v = dict(self.fixed)
        for n, i in self.index.items():
            v[n] = x[i]
        return v

    def evaluate(self, x):
        """Residual vector F (A), Jacobian J (S), and device currents."""
        size = len(self.unknowns)
        f = np.zeros(size)
        jac = np.zeros((size, size))
        v = self.voltages(x)
        idx = self.index
        currents = {}
        for t in self.circuit.transistors:
            i, dg, ds, dd = mosfet_eval(t.params, v[t.gate], v[t.source], v[t.drain])
            currents[t.name] = i
            # I leaves the drain node and enters the source node
            for node, sign in ((t.drain, 1.0), (t.source, -1.0)):
                row = idx.get(node)
                if row is None:
                    continue
                f[row] += sign * i
                for terminal, g in ((t.gate, dg), (t.source, ds), (t.drain, dd)):
                    col = idx.get(terminal)
                    if col is not None:
                        jac[row, col] += sign * g
        for m in self.circuit.memristors:
            g = 1.0 / m.state.resistance
            i = (v[m.a] - v[m.b]) * g
            currents[m.name] = i
            ra, rb = idx.get(m.a), idx.get(m.b)
            if ra is not None:
                f[ra] += i
                jac[ra, ra] += g
                if rb is not None:
                    jac[ra, rb] -= g
            if rb is not None:
                f[rb] -= i
                jac[rb, rb] += g
                if ra is not None:
                    jac[rb, ra] -= g
        return f, jac, currents


def _newton_step(jac, f):
    try:
        return np.linalg.solve(jac, -f)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(jac, -f, rcond=None)[0]


def _newton(system, x, free=None, max_iter=MAX_ITER):
    """Damped Newton on the ``free`` subset of unknowns.

    Returns (x, residual_norm, iterations, converged).
    """
    free = np.arange(len(x)) if free is None else np.asarray(free)
    best_x, best_res = x.copy(), np.inf
    for it in range(1, max_iter + 1):
        f, jac, _ = system.evaluate(x)
        res = np.max(np.abs(f[free])) if len(free) else 0.0
        if res < best_res:
            best_x, best_res = x.copy(), res
        if len(free) == 0:
            return x, res, it, True
        dx = _newton_step(jac[np.ix_(free, free)], f[free])
        if res <= RESIDUAL_TOL and np.max(np.abs(dx)) <= STEP_TOL:
            return x, res, it, True
        dx = np.clip(dx, -STEP_CLAMP, STEP_CLAMP)
        x = x.copy()
        x[free] = np.clip(x[free] + dx, system.lo, system.hi)
    # residual met but the step never settled below STEP_TOL: float noise floor
    return best_x, best_res, max_iter, best_res <= RESIDUAL_TOL


def _bisect_output(system, x0):
    """Fallback: bracket the output node voltage, inner Newton on the rest."""
    rest = np.arange(1, len(x0))
    state = {"x": x0.copy()}

    def net_current(v_out):
        x = state["x"].copy()
        x[0] = v_out
        x, _, _, _ = _newton(system, x, rest)
        state["x"] = x
        return system.evaluate(x)[0][0]

    lo, hi = system.lo, system.hi
    f_lo, f_hi = net_current(lo), net_current(hi)
    if f_lo * f_hi > 0:
        return None
    v_out = brentq(net_current, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                   maxiter=400)
    x = state["x"].copy()
    x[0] = v_out
    x, res, it, ok = _newton(system, x, rest)
    return x


def solve_dc(circuit: GateCircuit, inputs, guess: OperatingPoint | None = None) -> OperatingPoint:
    """Solve the DC operating point for fixed input-port voltages.

    ``guess`` warm-starts Newton; by default every unknown starts at
    mid-rail. Raises :class:`ConvergenceError` when neither Newton nor the
    output bisection reaches ``RESIDUAL_TOL``.
    """
    system = _System(circuit, inputs)
    if guess is not None:
        x0 = np.array([guess.node_voltages.get(n, circuit.vdd / 2) for n in system.unknowns],
                      dtype=float)
    else:
        x0 = np.full(len(system.unknowns), circuit.vdd / 2)
    x, res, iters, ok = _newton(system, x0)
    if not ok:
        fallback = _bisect_output(system, x)
        if fallback is not None:
            x2, res2, it2, ok = _newton(system, fallback)
            if res2 < res:
                x, res = x2, res2
            iters += it2
        if not ok:
            raise ConvergenceError(
                f"DC solve did not converge (best residual {res:.3e} A)", residual=res)
    _, _, currents = system.evaluate(x)
    return OperatingPoint(
        node_voltages=system.voltages([float(v) for v in x]),
        branch_currents={k: float(i) for k, i in currents.items()},
        residual_norm=float(res),
        iterations=iters,
        output_node=circuit.output,
    )


def supply_current(circuit: GateCircuit, op: OperatingPoint) -> float:
    """Current delivered by the VDD rail at ``op``."""
    rail = circuit.rail_vdd
    total = 0.0
    for t in circuit.transistors:
        # channel current I_ds enters at the drain
        if t.drain == rail:
            total += op.branch_currents[t.name]
        if t.source == rail:
            total -= op.branch_currents[t.name]
    for m in circuit.memristors:
        if m.a == rail:
            total += op.branch_currents[m.name]
        if m.b == rail:
            total -= op.branch_currents[m.name]
    return total


def kcl_residuals(circuit: GateCircuit, op: OperatingPoint) -> np.ndarray:
    """Net current leaving each unknown node, recomputed from the node voltages."""
    v = op.node_voltages
    net = {n: 0.0 for n in circuit.unknowns}
    for t in circuit.transistors:
        i = mosfet_current(t.params, v[t.gate], v[t.source], v[t.drain])
        if t.drain in net:
            net[t.drain] += i
        if t.source in net:
            net[t.source] -= i
    for m in circuit.memristors:
        i = m.state.current(v[m.a], v[m.b])
        if m.a in net:
            net[m.a] += i
        if m.b in net:
            net[m.b] -= i
    return np.array([net[n] for n in circuit.unknowns])


def _check_grid(grid, name="grid"):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if len(grid) > 1:
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError(f"{name} must be strictly monotone")
    return grid


def sweep_1d(circuit: GateCircuit, port: str, grid, fixed=None, label="",
             warm_start=True) -> SweepTrace:
    """Output voltage along ``grid`` on ``port``, other inputs held at ``fixed``.

    Points are solved in grid order, each warm-started from its predecessor
    unless ``warm_start`` is False.
    """
    grid = _check_grid(grid)
    fixed = dict(fixed or {})
    out = np.empty(len(grid))
    points = []
    guess = None
    for k, v in enumerate(grid):
        inputs = dict(fixed)
        inputs[port] = v
        try:
            op = solve_dc(circuit, inputs, guess if warm_start else None)
        except ConvergenceError as exc:
            raise ConvergenceError(f"sweep point {k} ({port}={v:g} V): {exc}",
                                   residual=exc.residual, index=k) from exc
        out[k] = op.output
        points.append(op)
        guess = op
    return SweepTrace(grid, out, label, tuple(points))


def surface_2d(circuit: GateCircuit, grid_a, grid_b, port_a="a", port_b="b") -> np.ndarray:
    """Strip-by-strip surface: row i holds ``port_a = grid_a[i]`` swept along B."""
    grid_a = _check_grid(grid_a, "grid_a")
    grid_b = _check_grid(grid_b, "grid_b")
    surface = np.empty((len(grid_a), len(grid_b)))
    for i, va in enumerate(grid_a):
        try:
            trace = sweep_1d(circuit, port_b, grid_b, {port_a: va})
        except ConvergenceError as exc:
            raise ConvergenceError(f"surface row {i}: {exc}", residual=exc.residual,
                                   index=(i, exc.index)) from exc
        surface[i] = trace.output_values
    return surface


def strip_grid(vdd, coarse=0.1, fine=0.05, fine_lo=0.5, fine_hi=0.8):
    """Input-A levels: ``coarse`` steps over the supply, ``fine`` inside the window."""
    n = int(round(vdd / coarse))
    levels = {round(k * coarse, 9) for k in range(n + 1)}
    m = int(round((fine_hi - fine_lo) / fine))
    levels |= {round(fine_lo + k * fine, 9) for k in range(m + 1)}
    levels = sorted(v for v in levels if v <= vdd)
    if levels[-1] < vdd:
        levels.append(vdd)
    return np.array(levels)


def plateau_metrics(trace: SweepTrace, slope_threshold=PLATEAU_SLOPE) -> PlateauMetrics:
    """Plateau altitude and width of an inverter-like trace.

    Slopes are central differences (one-sided at the ends). Only the span
    between the first and last grid points steeper than ``slope_threshold``
    counts as interior; the flat digital tails near the rails are ignored.
    The altitude is the output at the interior point of minimum ``|slope|``
    and the width is the connected run around it with
    ``|slope| <= slope_threshold``, its edges linearly interpolated.
    A trace with one contiguous steep run has no plateau (width 0).
    """
    x = np.asarray(trace.input_values, dtype=float)
    y = np.asarray(trace.output_values, dtype=float)
    if len(x) < 5:
        raise ValueError("plateau metrics need at least 5 points")
    if x[0] > x[-1]:
        x, y = x[::-1], y[::-1]
    slope = np.abs(np.gradient(y, x))
    steep = np.flatnonzero(slope > slope_threshold)
    if len(steep) == 0:
        k = len(x) // 2
        return PlateauMetrics(float(y[k]), 0.0, float(x[k]))
    first, last = steep[0], steep[-1]
    if last - first < 2 or np.all(slope[first:last + 1] > slope_threshold):
        k = int(np.argmax(slope))
        return PlateauMetrics(float(y[k]), 0.0, float(x[k]))
    k = first + 1 + int(np.argmin(slope[first + 1:last]))

    def edge(j_in, j_out):
        s_in, s_out = slope[j_in], slope[j_out]
        frac = (slope_threshold - s_in) / (s_out - s_in)
        return x[j_in] + frac * (x[j_out] - x[j_in])

    lo = k
    while slope[lo - 1] <= slope_threshold:
        lo -= 1
    hi = k
    while slope[hi + 1] <= slope_threshold:
        hi += 1
    width = edge(hi, hi + 1) - edge(lo, lo - 1)
    return PlateauMetrics(float(y[k]), float(width), float(x[k]))


def modality_family(template, spec, grid, label="") -> list:
    """Sweep and measure an inverter for every ``(r_up, r_dn)`` pair of ``spec``.

    ``template`` is a callable ``(r_up, r_dn) -> GateCircuit``; ``spec`` a
    :class:`~memgate.netlist.ModalitySpec` or a plain list of pairs.
    """
    points = getattr(spec, "points", spec)
    results = []
    for r_up, r_dn in points:
        circuit = template(r_up, r_dn)
        port = next(iter(circuit.inputs))
        trace = sweep_1d(circuit, port, grid, label=f"{label}{r_up:g}/{r_dn:g}")
        results.append(((r_up, r_dn), plateau_metrics(trace)))
    return results

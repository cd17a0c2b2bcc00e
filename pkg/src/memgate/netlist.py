"""Gate topologies as small device graphs with named ports.

A :class:`GateCircuit` is an immutable bag of nodes, transistors and
memristors. Rails are the nodes ``"vdd"`` and ``"gnd"``; input nodes only
ever drive transistor gates, so they draw no DC current. Unknowns for the
solver are the output node and every internal node.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Mapping

from .devices import MemristorState, MosfetParams, nmos, pmos

RAIL_VDD = "rail_vdd"
RAIL_GND = "rail_gnd"
INPUT = "input"
OUTPUT = "output"
INTERNAL = "internal"

FLOOR_OHMS = 1.0  # stands in for "no memristor"


class CircuitError(ValueError):
    """Structurally invalid circuit or wrong circuit family."""


@dataclass(frozen=True)
class Node:
    id: str
    kind: str


@dataclass(frozen=True)
class Transistor:
    name: str
    params: MosfetParams
    gate: str
    source: str
    drain: str


@dataclass(frozen=True)
class Memristor:
    name: str
    state: MemristorState
    a: str
    b: str


@dataclass(frozen=True)
class GateCircuit:
    family: str
    nodes: tuple
    transistors: tuple
    memristors: tuple
    vdd: float
    inputs: Mapping[str, str] = field(default_factory=dict)
    output: str = "out"

    def __post_init__(self):
        validate(self)

    @property
    def node_kinds(self):
        return {n.id: n.kind for n in self.nodes}

    @property
    def unknowns(self):
        """Ids of nodes the solver has to find, output first."""
        rest = [n.id for n in self.nodes if n.kind == INTERNAL]
        return [self.output] + rest

    @property
    def rail_vdd(self):
        return next(n.id for n in self.nodes if n.kind == RAIL_VDD)

    @property
    def rail_gnd(self):
        return next(n.id for n in self.nodes if n.kind == RAIL_GND)

    def memristor(self, name):
        for m in self.memristors:
            if m.name == name:
                return m.state
        raise KeyError(name)

    def with_memristors(self, **states):
        """Copy with some memristors replaced (by name)."""
        unknown = set(states) - {m.name for m in self.memristors}
        if unknown:
            raise KeyError(f"no memristor named {sorted(unknown)}")
        mems = tuple(
            replace(m, state=_as_state(states[m.name])) if m.name in states else m
            for m in self.memristors
        )
        return replace(self, memristors=mems)


def _as_state(r):
    if isinstance(r, MemristorState):
        return r
    return MemristorState(float(r))


def validate(c: GateCircuit):
    kinds = {}
    for n in c.nodes:
        if n.id in kinds:
            raise CircuitError(f"duplicate node {n.id!r}")
        if n.kind not in (RAIL_VDD, RAIL_GND, INPUT, OUTPUT, INTERNAL):
            raise CircuitError(f"node {n.id!r} has unknown kind {n.kind!r}")
        kinds[n.id] = n.kind
    for rail in (RAIL_VDD, RAIL_GND):
        count = sum(1 for k in kinds.values() if k == rail)
        if count != 1:
            raise CircuitError(f"expected exactly one {rail} node, found {count}")
    if not c.vdd > 0:
        raise CircuitError(f"vdd must be positive, got {c.vdd!r}")
    if kinds.get(c.output) != OUTPUT:
        raise CircuitError(f"output port {c.output!r} is not an output node")
    for port, node in c.inputs.items():
        if kinds.get(node) != INPUT:
            raise CircuitError(f"input port {port!r} maps to non-input node {node!r}")

    adjacency = {n: set() for n in kinds}
    for t in c.transistors:
        for terminal in (t.gate, t.source, t.drain):
            if terminal not in kinds:
                raise CircuitError(f"{t.name} references unknown node {terminal!r}")
        if kinds[t.source] == INPUT or kinds[t.drain] == INPUT:
            raise CircuitError(f"{t.name}: input nodes may only drive gates")
        adjacency[t.source].add(t.drain)
        adjacency[t.drain].add(t.source)
    for m in c.memristors:
        for terminal in (m.a, m.b):
            if terminal not in kinds:
                raise CircuitError(f"{m.name} references unknown node {terminal!r}")
            if kinds[terminal] == INPUT:
                raise CircuitError(f"{m.name}: input nodes may only drive gates")
        adjacency[m.a].add(m.b)
        adjacency[m.b].add(m.a)

    rails = [n for n, k in kinds.items() if k in (RAIL_VDD, RAIL_GND)]
    seen = set(rails)
    queue = deque(rails)
    while queue:
        for nxt in adjacency[queue.popleft()]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    stranded = [n for n, k in kinds.items() if k in (OUTPUT, INTERNAL) and n not in seen]
    if stranded:
        raise CircuitError(f"nodes with no conducting path to a rail: {stranded}")


def _nodes(inputs, internals):
    nodes = [Node("vdd", RAIL_VDD), Node("gnd", RAIL_GND), Node("out", OUTPUT)]
    nodes += [Node(i, INPUT) for i in inputs]
    nodes += [Node(i, INTERNAL) for i in internals]
    return tuple(nodes)


def _defaults(p, n):
    return (p if p is not None else pmos()), (n if n is not None else nmos())


def build_inverter_2t2r(pmos_params=None, nmos_params=None, r_up=4e6, r_dn=6e6,
                        vdd=1.65) -> GateCircuit:
    """Analogue inverter: VDD-pMOS-R_UP-OUT-R_DN-nMOS-GND.

    The memristors sit on the drain side of each transistor, so each
    rail-to-output path holds exactly one of them.
    """
    p, n = _defaults(pmos_params, nmos_params)
    return GateCircuit(
        family="inverter_2t2r",
        nodes=_nodes(["in"], ["xp", "xn"]),
        transistors=(
            Transistor("M2", p, gate="in", source="vdd", drain="xp"),
            Transistor("M1", n, gate="in", source="gnd", drain="xn"),
        ),
        memristors=(
            Memristor("R_UP", _as_state(r_up), "xp", "out"),
            Memristor("R_DN", _as_state(r_dn), "out", "xn"),
        ),
        vdd=vdd,
        inputs={"in": "in"},
    )


def build_general_inverter_4r(pmos_params=None, nmos_params=None, r_a=FLOOR_OHMS,
                              r_b=4e6, r_c=6e6, r_d=FLOOR_OHMS, vdd=1.65) -> GateCircuit:
    """Fully general inverter: R_A/R_D source-degenerate, R_B/R_C drain-load."""
    p, n = _defaults(pmos_params, nmos_params)
    return GateCircuit(
        family="inverter_4r",
        nodes=_nodes(["in"], ["sp", "dp", "dn", "sn"]),
        transistors=(
            Transistor("M2", p, gate="in", source="sp", drain="dp"),
            Transistor("M1", n, gate="in", source="sn", drain="dn"),
        ),
        memristors=(
            Memristor("R_A", _as_state(r_a), "vdd", "sp"),
            Memristor("R_B", _as_state(r_b), "dp", "out"),
            Memristor("R_C", _as_state(r_c), "out", "dn"),
            Memristor("R_D", _as_state(r_d), "sn", "gnd"),
        ),
        vdd=vdd,
        inputs={"in": "in"},
    )


def build_nand_4t3r(pmos_a=None, pmos_b=None, nmos_a=None, nmos_b=None,
                    m_a=3.5e3, m_b=0.5e3, m_c=4.0e3, vdd=1.65) -> GateCircuit:
    """Fuzzy NAND: two memristive pull-ups, one memristor on the series pull-down.

    Pull-down order from the output: M_C, nMOS_A, nMOS_B, ground.
    """
    pa, na = _defaults(pmos_a, nmos_a)
    pb, nb = _defaults(pmos_b, nmos_b)
    return GateCircuit(
        family="nand_4t3r",
        nodes=_nodes(["a", "b"], ["xpa", "xpb", "xc", "xm"]),
        transistors=(
            Transistor("MPA", pa, gate="a", source="vdd", drain="xpa"),
            Transistor("MPB", pb, gate="b", source="vdd", drain="xpb"),
            Transistor("MNA", na, gate="a", source="xm", drain="xc"),
            Transistor("MNB", nb, gate="b", source="gnd", drain="xm"),
        ),
        memristors=(
            Memristor("M_A", _as_state(m_a), "xpa", "out"),
            Memristor("M_B", _as_state(m_b), "xpb", "out"),
            Memristor("M_C", _as_state(m_c), "out", "xc"),
        ),
        vdd=vdd,
        inputs={"a": "a", "b": "b"},
    )


def build_general_nand_7r(pmos_a=None, pmos_b=None, nmos_a=None, nmos_b=None,
                          r_a1=FLOOR_OHMS, r_a2=3.5e3, r_b1=FLOOR_OHMS, r_b2=0.5e3,
                          r_c=4.0e3, r_f=FLOOR_OHMS, r_d=FLOOR_OHMS,
                          vdd=1.65) -> GateCircuit:
    """Fully general NAND with seven memristors.

    Each pMOS gets a source resistor (``r_*1``) and a drain resistor
    (``r_*2``). The pull-down is OUT-R_C-nMOS_A-R_F-nMOS_B-R_D-GND, so R_F
    loads the drain of nMOS_B and degenerates the source of nMOS_A at once.
    """
    pa, na = _defaults(pmos_a, nmos_a)
    pb, nb = _defaults(pmos_b, nmos_b)
    return GateCircuit(
        family="nand_7r",
        nodes=_nodes(["a", "b"], ["spa", "dpa", "spb", "dpb", "dna", "sna", "dnb", "snb"]),
        transistors=(
            Transistor("MPA", pa, gate="a", source="spa", drain="dpa"),
            Transistor("MPB", pb, gate="b", source="spb", drain="dpb"),
            Transistor("MNA", na, gate="a", source="sna", drain="dna"),
            Transistor("MNB", nb, gate="b", source="snb", drain="dnb"),
        ),
        memristors=(
            Memristor("R_A1", _as_state(r_a1), "vdd", "spa"),
            Memristor("R_A2", _as_state(r_a2), "dpa", "out"),
            Memristor("R_B1", _as_state(r_b1), "vdd", "spb"),
            Memristor("R_B2", _as_state(r_b2), "dpb", "out"),
            Memristor("R_C", _as_state(r_c), "out", "dna"),
            Memristor("R_F", _as_state(r_f), "sna", "dnb"),
            Memristor("R_D", _as_state(r_d), "snb", "gnd"),
        ),
        vdd=vdd,
        inputs={"a": "a", "b": "b"},
    )


_DUAL_FAMILY = {
    "nand_4t3r": "nor_4t3r",
    "nor_4t3r": "nand_4t3r",
    "nand_7r": "nor_7r",
    "nor_7r": "nand_7r",
}


def build_nor_dual(circuit: GateCircuit) -> GateCircuit:
    """Exchange the supplies of a NAND-family gate (and back).

    Rails swap places, every transistor flips polarity with its other
    parameters kept, and all memristor states carry over unchanged.
    """
    if circuit.family not in _DUAL_FAMILY:
        raise CircuitError(f"{circuit.family!r} is not a NAND/NOR-family circuit")
    swap = {"vdd": "gnd", "gnd": "vdd"}

    def rename(node):
        return swap.get(node, node)

    nodes = tuple(
        Node(rename(n.id), {RAIL_VDD: RAIL_GND, RAIL_GND: RAIL_VDD}.get(n.kind, n.kind))
        for n in circuit.nodes
    )
    transistors = tuple(
        Transistor(t.name, t.params.flipped(), rename(t.gate), rename(t.source), rename(t.drain))
        for t in circuit.transistors
    )
    memristors = tuple(
        Memristor(m.name, m.state, rename(m.a), rename(m.b)) for m in circuit.memristors
    )
    return replace(circuit, family=_DUAL_FAMILY[circuit.family], nodes=nodes,
                   transistors=transistors, memristors=memristors)


def reduce_nand(circuit: GateCircuit, held: str) -> GateCircuit:
    """Inverter reduction of a 4T3R NAND with input ``held`` tied to VDD.

    The held input's pMOS is off, so its pull-up branch (and memristor) is
    dropped; its nMOS gate is tied to the supply rail. The result is a
    single-input inverter in the other port.
    """
    if circuit.family != "nand_4t3r":
        raise CircuitError("inverter reduction is defined for nand_4t3r circuits")
    if held not in circuit.inputs:
        raise CircuitError(f"no input port {held!r}")
    free = next(p for p in circuit.inputs if p != held)
    held_node = circuit.inputs[held]
    vdd_node = circuit.rail_vdd
    dropped_pmos = next(t for t in circuit.transistors
                        if t.params.polarity == "p" and t.gate == held_node)
    dropped_nodes = {dropped_pmos.drain}
    transistors = tuple(
        replace(t, gate=vdd_node) if t.gate == held_node else t
        for t in circuit.transistors if t is not dropped_pmos
    )
    memristors = tuple(m for m in circuit.memristors
                       if m.a not in dropped_nodes and m.b not in dropped_nodes)
    nodes = tuple(n for n in circuit.nodes
                  if n.id != held_node and n.id not in dropped_nodes)
    return replace(circuit, family=f"nand_reduction_{free}", nodes=nodes,
                   transistors=transistors, memristors=memristors,
                   inputs={free: circuit.inputs[free]})


@dataclass(frozen=True)
class ModalitySpec:
    """A reprogramming trajectory for the two inverter memristors.

    ``ratio_fixed`` keeps ``r_up / r_dn == c``; ``sum_fixed`` keeps
    ``r_up + r_dn == c`` (ohms).
    """

    mode: str
    c: float
    points: tuple

    def __post_init__(self):
        if self.mode not in ("ratio_fixed", "sum_fixed"):
            raise ValueError(f"unknown modality {self.mode!r}")
        if not self.c > 0:
            raise ValueError("modality constant must be positive")
        for r_up, r_dn in self.points:
            got = r_up / r_dn if self.mode == "ratio_fixed" else r_up + r_dn
            if abs(got - self.c) > 1e-9 * abs(self.c):
                raise ValueError(f"point ({r_up:g}, {r_dn:g}) violates {self.mode} c={self.c:g}")

    @classmethod
    def ratio_fixed(cls, r_up, r_dn, scales):
        """Scale a base pair by each factor in ``scales``."""
        return cls("ratio_fixed", r_up / r_dn, tuple((k * r_up, k * r_dn) for k in scales))

    @classmethod
    def sum_fixed(cls, total, r_up_values):
        return cls("sum_fixed", total, tuple((r, total - r) for r in r_up_values))


def count_dofs(circuit: GateCircuit) -> int:
    """Independently programmable memristors in the gate."""
    return len(circuit.memristors)


def rail_paths(circuit: GateCircuit, rail: str, target: str | None = None):
    """All simple conducting paths from ``rail`` node to the output.

    Each path is a list of device names. Paths never pass through the other
    rail. Used for structural checks on the builders.
    """
    target = target or circuit.output
    other = {circuit.rail_vdd, circuit.rail_gnd} - {rail}
    edges = {}
    for t in circuit.transistors:
        edges.setdefault(t.source, []).append((t.drain, t.name))
        edges.setdefault(t.drain, []).append((t.source, t.name))
    for m in circuit.memristors:
        edges.setdefault(m.a, []).append((m.b, m.name))
        edges.setdefault(m.b, []).append((m.a, m.name))
    paths = []

    def walk(node, visited, devices):
        if node == target:
            paths.append(list(devices))
            return
        for nxt, dev in edges.get(node, []):
            if nxt in visited or nxt in other:
                continue
            walk(nxt, visited | {nxt}, devices + [dev])

    walk(rail, {rail}, [])
    return paths


class Identity:
    """Pass-through stage; output equals the ``in`` port voltage."""

    inputs = {"in": "in"}

    def __init__(self, vdd=1.65):
        self.vdd = vdd


@dataclass(frozen=True)
class Chain:
    """Two stages where ``first``'s output drives ``second``'s ``port``.

    Gate inputs draw no DC current, so the first stage is solved alone and
    its output voltage handed on as an ideal source.
    """

    first: object
    second: object
    port: str

    @property
    def inputs(self):
        return dict(self.first.inputs)

    def evaluate(self, first_inputs, second_inputs=None):
        v_mid = _stage_output(self.first, first_inputs)
        fixed = dict(second_inputs or {})
        fixed[self.port] = v_mid
        return _stage_output(self.second, fixed)


def _stage_output(stage, inputs):
    if isinstance(stage, Identity):
        return float(inputs["in"])
    if isinstance(stage, Chain):
        return stage.evaluate(inputs)
    from .dcsolver import solve_dc

    return solve_dc(stage, inputs).output


def chain(first, second, port: str) -> Chain:
    first_ports = first.inputs
    if isinstance(first, GateCircuit) and not first.output:
        raise CircuitError("first stage has no output")
    if port not in second.inputs:
        raise CircuitError(f"second stage has no input {port!r}")
    if not first_ports:
        raise CircuitError("first stage has no inputs")
    return Chain(first, second, port)

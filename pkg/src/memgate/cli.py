"""Command-line front end.

    memgate <sweep|surface|energy|texel|digitize> --config FILE [--out DIR] [--svg]

The config is one JSON document validated against :data:`SCHEMA` before
anything is computed. Each command reads its own section plus the shared
``vdd``, ``devices`` and ``readout`` sections. Exit codes: 0 success,
1 config or solver error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np

from . import svg
from .dcsolver import ConvergenceError, plateau_metrics, strip_grid, surface_2d, sweep_1d
from .devices import RangeError, nmos, pmos
from .energy import DomainError, DividerModel, effective_divider, q_tot, settling_error
from .energy import toggle_equivalents, transient_oracle
from .netlist import (CircuitError, ModalitySpec, build_general_inverter_4r,
                      build_inverter_2t2r, build_nand_4t3r, build_nor_dual, reduce_nand)
from .readout import ReadoutParams, beta_matched_pmos, on_target, on_target_window
from .spikesort import (GAIN, OFFSET, SAMPLE_OFFSET, DatasetError, ExperimentError,
                        SelectionError, TriggerError, fixture_path, format_report,
                        load_dataset, run_experiment, select_all)
from .texel import (DEFAULT_LOAD, TexelArrayConfig, TexelConfig, UnreachableTarget,
                    program_template, texel_memristor)

WINDOW_BOUNDS = (0.020, 0.300)

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_mosfet = {
    "type": "object",
    "additionalProperties": False,
    "properties": {k: _pos for k in ("k_prime", "w", "l", "g_min")}
    | {"v_th": _pos, "lam": {"type": "number", "minimum": 0}},
}
_grid = {
    "oneOf": [
        {"type": "array", "items": _num, "minItems": 1},
        {"type": "object", "additionalProperties": False,
         "required": ["start", "stop", "num"],
         "properties": {"start": _num, "stop": _num, "num": {"type": "integer", "minimum": 1}}},
    ]
}
_label = {"type": "string", "pattern": "^[A-Za-z0-9_.+-]+$"}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "vdd": _pos,
        "out": {"type": "string"},
        "svg": {"type": "boolean"},
        "devices": {"type": "object", "additionalProperties": False,
                    "properties": {"nmos": _mosfet, "pmos": _mosfet}},
        "readout": {
            "type": "object", "additionalProperties": False,
            "properties": {"i_ref": _pos, "mirror_gain": _pos, "ambiguity_margin": _pos,
                           "nmos": _mosfet, "pmos": _mosfet},
        },
        "sweep": {
            "type": "object", "additionalProperties": False, "required": ["grid"],
            "properties": {
                "builder": {"enum": ["inverter_2t2r", "inverter_4r"]},
                "grid": _grid,
                "configs": {"type": "array", "items": {
                    "type": "object", "additionalProperties": False, "required": ["label"],
                    "properties": {"label": _label, "r_up": _pos, "r_dn": _pos,
                                   "r_a": _pos, "r_b": _pos, "r_c": _pos, "r_d": _pos},
                }},
                "modality": {"type": "array", "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["label", "mode"],
                    "properties": {
                        "label": _label,
                        "mode": {"enum": ["ratio_fixed", "sum_fixed"]},
                        "r_up": _pos, "r_dn": _pos,
                        "scales": {"type": "array", "items": _pos, "minItems": 1},
                        "total": _pos,
                        "r_up_values": {"type": "array", "items": _pos, "minItems": 1},
                    },
                }},
            },
        },
        "surface": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "memristors": {"type": "object", "additionalProperties": False,
                               "properties": {"m_a": _pos, "m_b": _pos, "m_c": _pos}},
                "grid_a": _grid,
                "grid_b": _grid,
                "strip": {"type": "boolean"},
                "nor_dual": {"type": "boolean"},
            },
        },
        "energy": {
            "type": "object", "additionalProperties": False, "required": ["l_grid"],
            "properties": {
                "r1": _pos, "r2": _pos, "c_out": _pos, "v_out_1": _num,
                "l_grid": _grid,
                "oracle": {"type": "boolean"},
                "from_inverter": {
                    "type": "object", "additionalProperties": False,
                    "required": ["v_in_1", "v_in_2"],
                    "properties": {"r_up": _pos, "r_dn": _pos, "v_in_1": _num, "v_in_2": _num},
                },
                "toggle_check": {
                    "type": "object", "additionalProperties": False,
                    "required": ["q", "q_toggle"],
                    "properties": {"q": _pos, "q_toggle": _pos},
                },
            },
        },
        "digitize": {
            "type": "object", "additionalProperties": False, "required": ["grid"],
            "properties": {
                "r_up": _pos, "r_dn": _pos,
                "grid": _grid,
                "i_ref_scan": {"type": "array", "items": _pos},
            },
        },
        "texel": {
            "type": "object", "additionalProperties": False, "required": ["dataset", "v_trig"],
            "properties": {
                "dataset": {"type": "string"},
                "v_trig": _num,
                "gain": _num,
                "offset": _num,
                "sample_offset": {"type": "integer", "minimum": 1},
                "r_load": _pos,
                "r0": _pos,
                "mirror_gain": _pos,
                "r_limit": _pos,
                "nmos": _mosfet,
                "pmos": _mosfet,
                "program": {"oneOf": [
                    {"type": "object", "additionalProperties": False, "required": ["r1"],
                     "properties": {"r1": {"type": "array", "items": _pos,
                                           "minItems": 4, "maxItems": 4}}},
                    {"type": "object", "additionalProperties": False, "required": ["targets"],
                     "properties": {"targets": {"type": "array", "items": _pos,
                                                "minItems": 4, "maxItems": 4}}},
                    {"type": "object", "additionalProperties": False, "required": ["template"],
                     "properties": {"template": {
                         "type": "object", "additionalProperties": False,
                         "required": ["class", "tag"],
                         "properties": {"class": {"type": "integer"},
                                        "tag": {"enum": ["L", "M", "H"]}}}}},
                ]},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


# Config -------------------------------------------------------------------

def load_config(path):
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    validate_config(cfg)
    cfg["_base"] = str(Path(path).resolve().parent)
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None
    vdd = cfg.get("vdd", 1.65)
    for section, keys in (("sweep", ["grid"]), ("surface", ["grid_a", "grid_b"]),
                          ("digitize", ["grid"])):
        for key in keys:
            if key in cfg.get(section, {}):
                g = make_grid(cfg[section][key])
                if g.min() < 0 or g.max() > vdd + 1e-12:
                    raise ConfigError(f"config {section}/{key}: values outside [0, {vdd}]")
    if "energy" in cfg and make_grid(cfg["energy"]["l_grid"]).min() < 0:
        raise ConfigError("config energy/l_grid: l must be >= 0")


def make_grid(spec):
    if isinstance(spec, dict):
        g = np.linspace(spec["start"], spec["stop"], spec["num"])
    else:
        g = np.asarray(spec, dtype=float)
    if g.size == 0:
        raise ConfigError("empty grid")
    if g.size > 1 and not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
        raise ConfigError("grid must be strictly monotone")
    return g


def _devices(cfg):
    d = cfg.get("devices", {})
    return pmos(**d.get("pmos", {})), nmos(**d.get("nmos", {}))


def _readout(cfg):
    r = dict(cfg.get("readout", {}))
    n = nmos(**r.pop("nmos", {}))
    p = pmos(**r.pop("pmos")) if "pmos" in r else beta_matched_pmos(n)
    return ReadoutParams(pmos=p, nmos=n, vdd=cfg.get("vdd", 1.65), **r)


# Output -------------------------------------------------------------------

def _volts(x):
    return f"{x:.6f}"


def _amps(x):
    return f"{x:.6e}"


def _write(out, name, text):
    path = Path(out) / name
    path.write_text(text)
    return path


def _csv(header, rows):
    return "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"


# Commands -----------------------------------------------------------------

def cmd_sweep(cfg, out, emit_svg):
    s = cfg["sweep"]
    vdd = cfg.get("vdd", 1.65)
    p, n = _devices(cfg)
    grid = make_grid(s["grid"])
    builder = s.get("builder", "inverter_2t2r")
    jobs = []
    for c in s.get("configs", []):
        kw = {k: v for k, v in c.items() if k != "label"}
        if builder == "inverter_2t2r":
            bad = set(kw) - {"r_up", "r_dn"}
            build = build_inverter_2t2r
        else:
            bad = set(kw) - {"r_a", "r_b", "r_c", "r_d"}
            build = build_general_inverter_4r
        if bad:
            raise ConfigError(f"sweep config {c['label']}: keys {sorted(bad)} not valid "
                              f"for {builder}")
        jobs.append((c["label"], kw.get("r_up", kw.get("r_b")), kw.get("r_dn", kw.get("r_c")),
                     build(p, n, vdd=vdd, **kw)))
    for m in s.get("modality", []):
        if m["mode"] == "ratio_fixed":
            spec = ModalitySpec.ratio_fixed(m["r_up"], m["r_dn"], m["scales"])
        else:
            spec = ModalitySpec.sum_fixed(m["total"], m["r_up_values"])
        for k, (r_up, r_dn) in enumerate(spec.points):
            jobs.append((f"{m['label']}{k}", r_up, r_dn,
                         build_inverter_2t2r(p, n, r_up, r_dn, vdd)))
    if not jobs:
        raise ConfigError("sweep: no configs or modality families given")
    labels = [j[0] for j in jobs]
    if len(set(labels)) != len(labels):
        raise ConfigError("sweep: duplicate labels")

    traces, metrics = [], []
    for label, r_up, r_dn, circuit in jobs:
        tr = sweep_1d(circuit, "in", grid, label=label)
        traces.append(tr)
        _write(out, f"sweep_{label}.csv",
               _csv(["v_in", "v_out"], ([_volts(a), _volts(b)]
                                        for a, b in zip(tr.input_values, tr.output_values))))
        pm = plateau_metrics(tr) if len(grid) >= 5 else None
        metrics.append([label, f"{r_up:.6e}" if r_up else "", f"{r_dn:.6e}" if r_dn else "",
                        _volts(pm.altitude) if pm else "", _volts(pm.width) if pm else ""])
    _write(out, "plateau.csv", _csv(["label", "r_up", "r_dn", "altitude", "width"], metrics))
    if emit_svg:
        _write(out, "sweep.svg", svg.line_plot(
            [(t.config_label, t.input_values, t.output_values) for t in traces],
            "Transfer characteristics", "V_IN (V)", "V_OUT (V)", (0, vdd)))
    return f"sweep: {len(traces)} traces"


def cmd_surface(cfg, out, emit_svg):
    s = cfg.get("surface", {})
    vdd = cfg.get("vdd", 1.65)
    p, n = _devices(cfg)
    nand = build_nand_4t3r(p, p, n, n, vdd=vdd, **s.get("memristors", {}))
    grid_b = make_grid(s.get("grid_b", {"start": 0, "stop": vdd, "num": 21}))
    if s.get("strip", False):
        grid_a = strip_grid(vdd)
    else:
        grid_a = make_grid(s.get("grid_a", {"start": 0, "stop": vdd, "num": 21}))

    gates = [("", nand, vdd)]
    reductions = {}
    if s.get("nor_dual", False):
        gates.append(("_nor", build_nor_dual(nand), 0.0))
    for suffix, gate, held in gates:
        z = surface_2d(gate, grid_a, grid_b)
        rows = ([_volts(a), _volts(b), _volts(z[i, j])]
                for i, a in enumerate(grid_a) for j, b in enumerate(grid_b))
        _write(out, f"surface{suffix}.csv", _csv(["v_a", "v_b", "v_out"], rows))
        red_a = sweep_1d(gate, "b", grid_b, {"a": held}, label="a_held")
        red_b = sweep_1d(gate, "a", grid_a, {"b": held}, label="b_held")
        reductions[suffix] = red_a
        _write(out, f"reduction_a{suffix}.csv", _csv(["v_b", "v_out"], (
            [_volts(x), _volts(y)] for x, y in zip(red_a.input_values, red_a.output_values))))
        _write(out, f"reduction_b{suffix}.csv", _csv(["v_a", "v_out"], (
            [_volts(x), _volts(y)] for x, y in zip(red_b.input_values, red_b.output_values))))
        if emit_svg:
            _write(out, f"surface{suffix}.svg", svg.heat_map(
                grid_b, grid_a, z, f"V_OUT{suffix.replace('_', ' ').upper()}",
                "V_B (V)", "V_A (V)"))
    reduced = sweep_1d(reduce_nand(nand, "a"), "b", grid_b)
    diff = np.max(np.abs(reduced.output_values - reductions[""].output_values))
    return (f"surface: {len(grid_a)}x{len(grid_b)} grid; A=VDD row vs reduced inverter "
            f"max |diff| {diff:.3e} V")


def _energy_model(e, cfg):
    vdd = cfg.get("vdd", 1.65)
    c_out = e.get("c_out", 10e-15)
    if "from_inverter" in e:
        f = e["from_inverter"]
        p, n = _devices(cfg)
        circuit = build_inverter_2t2r(p, n, f.get("r_up", 4e6), f.get("r_dn", 6e6), vdd)
        v1 = effective_divider(circuit, f["v_in_1"], c_out).v_out_1
        return effective_divider(circuit, f["v_in_2"], c_out, v_out_1=v1)
    missing = [k for k in ("r1", "r2") if k not in e]
    if missing:
        raise ConfigError(f"energy: missing {missing} (or give from_inverter)")
    return DividerModel(e["r1"], e["r2"], c_out, vdd, e.get("v_out_1", 0.0))


def cmd_energy(cfg, out, emit_svg):
    e = cfg["energy"]
    model = _energy_model(e, cfg)
    ls = make_grid(e["l_grid"])
    oracle = e.get("oracle", True)
    header = ["l", "q_leak", "q_charge", "q_tot", "q_tot_alt", "identity_rel_err",
              "e_upper", "vdd_q_tot", "toggle_equivalents", "settling_frac"]
    if oracle:
        header += ["q_oracle", "oracle_rel_err"]
    rows, q_series = [], []
    for l in ls:
        r = q_tot(model, float(l))
        rel = abs(r.q_tot - r.q_tot_alt) / max(abs(r.q_tot), 1e-300)
        settle = (settling_error(model, float(l)) / abs(model.delta_v_out)
                  if model.delta_v_out != 0 else 0.0)
        row = [f"{l:.6g}", _amps(r.q_leak), _amps(r.q_charge), _amps(r.q_tot),
               _amps(r.q_tot_alt), f"{rel:.3e}", _amps(r.e_upper),
               _amps(model.vdd * r.q_tot),
               f"{toggle_equivalents(r.q_tot, model.c_out, model.vdd):.6f}", f"{settle:.6f}"]
        if oracle:
            q_o = transient_oracle(model, float(l))[0]
            err = abs(q_o - r.q_tot) / max(abs(r.q_tot), 1e-300) if l > 0 else 0.0
            row += [_amps(q_o), f"{err:.3e}"]
        rows.append(row)
        q_series.append(r.q_tot)
    _write(out, "energy.csv", _csv(header, rows))
    lines = [f"r1,{model.r1:.6e}", f"r2,{model.r2:.6e}", f"c_out,{model.c_out:.6e}",
             f"vdd,{_volts(model.vdd)}", f"v_out_1,{_volts(model.v_out_1)}",
             f"v_out_2,{_volts(model.v_out_2)}", f"q_div,{model.q_div:.6f}",
             f"tau,{model.tau:.6e}"]
    if "toggle_check" in e:
        t = e["toggle_check"]
        eq = toggle_equivalents(t["q"], t["q_toggle"] / model.vdd, model.vdd)
        lines.append(f"toggle_equivalents,{eq:.6f}")
    _write(out, "energy_summary.csv", "quantity,value\n" + "\n".join(lines) + "\n")
    if emit_svg:
        _write(out, "energy.svg", svg.line_plot([("q_tot", ls, np.array(q_series))],
                                                "Supply charge", "l (time constants)", "Q (C)"))
    return f"energy: {len(ls)} rows"


def cmd_digitize(cfg, out, emit_svg):
    d = cfg["digitize"]
    vdd = cfg.get("vdd", 1.65)
    p, n = _devices(cfg)
    rp = _readout(cfg)
    circuit = build_inverter_2t2r(p, n, d.get("r_up", 4e6), d.get("r_dn", 6e6), vdd)
    grid = make_grid(d["grid"])
    trace = sweep_1d(circuit, "in", grid)
    rows, v_mid, i_out = [], trace.output_values, []
    for v_in, vm in zip(grid, v_mid):
        r = on_target(rp, float(np.clip(vm, 0.0, vdd)))
        rows.append([_volts(v_in), _volts(vm), _volts(r.v_out1), r.bit, _amps(r.i_out),
                     str(int(r.on_target))])
        i_out.append(r.i_out)
    _write(out, "digitize.csv",
           _csv(["v_in", "v_mid", "v_out1", "bit", "i_out", "on_target"], rows))

    def window_row(params):
        w = on_target_window(params)
        if w is None:
            return [_amps(params.i_ref), "", "", _volts(0.0), "0"]
        width = w[1] - w[0]
        ok = WINDOW_BOUNDS[0] <= width <= WINDOW_BOUNDS[1]
        return [_amps(params.i_ref), _volts(w[0]), _volts(w[1]), _volts(width), str(int(ok))]

    win = [window_row(rp)] + [window_row(replace(rp, i_ref=i)) for i in d.get("i_ref_scan", [])]
    _write(out, "window.csv", _csv(["i_ref", "v_mid_lo", "v_mid_hi", "width", "in_bounds"], win))
    if emit_svg:
        _write(out, "digitize.svg", svg.line_plot(
            [("i_out", grid, np.array(i_out))], "Read-out current", "V_IN (V)", "I_OUT (A)"))
    return f"digitize: window width {win[0][3]} V (in bounds: {win[0][4] == '1'})"


def _dataset_path(t, cfg):
    if t["dataset"] == "bundled":
        return fixture_path()
    path = Path(t["dataset"])
    if not path.is_absolute():
        path = Path(cfg.get("_base", ".")) / path
    if not path.is_file():
        raise ConfigError(f"texel: dataset file {t['dataset']} not found")
    return path


def cmd_texel(cfg, out, emit_svg):
    t = cfg["texel"]
    vdd = cfg.get("vdd", 1.65)
    dataset = load_dataset(_dataset_path(t, cfg))
    gain, offset = t.get("gain", GAIN), t.get("offset", OFFSET)
    sample_offset = t.get("sample_offset", SAMPLE_OFFSET)
    readout = ReadoutParams(vdd=vdd, mirror_gain=t.get("mirror_gain", 0.5))
    base = TexelConfig(
        pmos=pmos(**({"w": 30.0} | t.get("pmos", {}))),
        nmos=nmos(**({"w": 40.0} | t.get("nmos", {}))),
        r0=texel_memristor(t.get("r0", 20e3)),
        readout=readout, vdd=vdd, r_limit=t.get("r_limit"))
    r_load = t.get("r_load", DEFAULT_LOAD)
    program = t.get("program", {"template": {"class": 2, "tag": "M"}})
    if "r1" in program:
        array = TexelArrayConfig.from_resistances(program["r1"], r_load, base)
    else:
        if "targets" in program:
            targets = program["targets"]
        else:
            want = program["template"]
            vectors = select_all(dataset, t["v_trig"], gain, offset, sample_offset)
            match = [v for v in vectors
                     if v.class_label == want["class"] and v.instance_tag == want["tag"]]
            if not match:
                raise ConfigError(f"texel: no {want['class']}{want['tag']} instance in dataset")
            targets = match[0].rounded
        array = program_template(TexelArrayConfig((base,) * 4, r_load, vdd), targets)
    before = array.resistances
    rows = run_experiment(dataset, array, t["v_trig"], gain, offset, sample_offset)
    if array.resistances != before:
        raise RuntimeError("texel resistances changed during the experiment")
    _write(out, "texel_report.csv", format_report(rows))

    ranked = sorted(rows, key=lambda r: -r.v_out)
    top = [f"{r.vector.class_label}{r.vector.instance_tag}" for r in ranked[:2]]
    merged = sorted({" ".join(sorted((f"{r.vector.class_label}{r.vector.instance_tag}",)
                                     + r.shared_with)) for r in rows if r.shared_with})
    lines = ["quantity,value"]
    lines += [f"r1_txl{k + 1},{r:.6e}" for k, r in enumerate(array.resistances)]
    lines += [f"r_load,{r_load:.6e}", f"top_two,{' '.join(top)}",
              f"merged,{'; '.join(merged) if merged else 'none'}",
              f"clipped,{sum(r.clipped for r in rows)}"]
    _write(out, "texel_summary.csv", "\n".join(lines) + "\n")
    if emit_svg:
        labels = [f"{r.vector.class_label}{r.vector.instance_tag}" for r in rows]
        colours = [svg.PALETTE[r.vector.class_label % len(svg.PALETTE)] for r in rows]
        _write(out, "texel.svg", svg.bar_chart(labels, [r.v_out for r in rows],
                                               "Texel array output", "V_OUT (V)", colours))
    return f"texel: top two {' '.join(top)}; merged {'; '.join(merged) or 'none'}"


COMMANDS = {
    "sweep": cmd_sweep,
    "surface": cmd_surface,
    "energy": cmd_energy,
    "texel": cmd_texel,
    "digitize": cmd_digitize,
}
_SECTION = {"sweep": "sweep", "energy": "energy", "texel": "texel", "digitize": "digitize"}

_MODEL_ERRORS = (ConfigError, ConvergenceError, CircuitError, RangeError, DomainError,
                 UnreachableTarget, DatasetError, TriggerError, SelectionError,
                 ExperimentError, ValueError)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="memgate", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides config 'out')")
    ap.add_argument("--svg", action="store_true", help="also write SVG plots")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        section = _SECTION.get(args.command)
        if section and section not in cfg:
            raise ConfigError(f"config has no '{section}' section")
        out = Path(args.out or cfg.get("out", "out"))
        os.makedirs(out, exist_ok=True)
        msg = COMMANDS[args.command](cfg, out, args.svg or cfg.get("svg", False))
    except _MODEL_ERRORS as exc:
        print(f"memgate {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"memgate {args.command}: I/O error: {exc}", file=sys.stderr)
        return 2
    print(msg)
    return 0


if __name__ == "__main__":
    sys.exit(main())

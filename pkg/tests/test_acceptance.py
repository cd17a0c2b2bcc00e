"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the summary
lines also appear at the end of the pytest report.
"""

import filecmp
import math
import subprocess
import sys
import time

import mpmath
import numpy as np
import pytest
from scipy.stats import pearsonr, spearmanr

from conftest import CONFIGS
from memgate.dcsolver import kcl_residuals, plateau_metrics, surface_2d, sweep_1d
from memgate.devices import mosfet_eval, nmos, pmos
from memgate.energy import DividerModel, q_tot, settling_error, toggle_equivalents
from memgate.energy import transient_oracle
from memgate.netlist import (ModalitySpec, build_inverter_2t2r, build_nand_4t3r,
                             build_nor_dual, reduce_nand)
from memgate.readout import ReadoutParams, on_target_window, scan, switch_point
from memgate.texel import TexelArrayConfig, TexelConfig, array_match, program_template

VDD = 1.65
DISCRETE_P = pmos(w=1200.0)
DISCRETE_N = nmos(w=100.0)
DISCRETE_CONFIGS = {"HH": (106e3, 110e3), "HL": (106e3, 20.9e3), "LH": (10.5e3, 110e3),
          "LL": (10.5e3, 11.5e3)}

# rounded texel inputs and first-run outputs; 2L and 1H share one row
MEASURED_VECTORS = [
    ("3H", (0.78, 0.77, 0.76, 0.74), 0.03),
    ("3M", (0.76, 0.75, 0.74, 0.74), 0.08),
    ("3L", (0.75, 0.74, 0.73, 0.73), 0.25),
    ("2H", (0.74, 0.73, 0.72, 0.71), 1.00),
    ("2M", (0.73, 0.72, 0.71, 0.71), 0.99),
    ("2L", (0.72, 0.71, 0.70, 0.69), 0.58),
    ("1M", (0.71, 0.70, 0.69, 0.69), 0.36),
    ("1L", (0.70, 0.69, 0.68, 0.67), 0.14),
]


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_c01_energy_identity(record):
    rng = np.random.default_rng(1)
    n = 10_000
    with Timer() as t:
        r1 = 10 ** rng.uniform(3, 9, n)
        r2 = 10 ** rng.uniform(3, 9, n)
        c = 10 ** rng.uniform(-16, -12, n)
        vdd = rng.uniform(0.5, 3.3, n)
        v1 = rng.uniform(0, 1, n) * vdd
        ls = rng.uniform(0, 20, n)
        worst = 0.0
        for k in range(n):
            rep = q_tot(DividerModel(r1[k], r2[k], c[k], vdd[k], v1[k]), ls[k])
            scale = max(abs(rep.q_tot), 1e-300)
            worst = max(worst, abs(rep.q_tot - rep.q_tot_alt) / scale)
    ok = worst <= 1e-9 and t.elapsed < 1.0
    record(1, ok, f"max rel diff {worst:.2e} (<= 1e-9), {t.elapsed:.2f} s (< 1 s)")
    assert ok


def oracle_grid():
    for ratio in (0.1, 0.5, 1.0, 2.0, 10.0):
        for c_out in (1e-15, 3e-15, 10e-15, 30e-15, 100e-15):
            for frac in (0.1, 0.5, 1.0):
                r2 = 1e6
                v2 = VDD * r2 / (ratio * r2 + r2)
                yield DividerModel(ratio * r2, r2, c_out, VDD, v2 * (1 - frac))


def test_c02_energy_oracle(record):
    with Timer() as t:
        worst, bound_ok, count = 0.0, True, 0
        for m in oracle_grid():
            rep = q_tot(m, 8)
            q_oracle, e_diss, _ = transient_oracle(m, 8)
            worst = max(worst, abs(q_oracle - rep.q_tot) / rep.q_tot)
            bound_ok &= VDD * rep.q_tot <= rep.e_upper
            count += 1
        m = DividerModel(2e6, 3e6, 10e-15, VDD, 0.0)
        settle = settling_error(m, 4) / abs(m.delta_v_out)
    ok = (count == 75 and worst <= 1e-3 and bound_ok and abs(settle - math.exp(-4)) < 1e-12
          and settle <= 0.02 and t.elapsed < 10)
    record(2, ok, f"{count} models, oracle rel err {worst:.2e} (<= 1e-3), "
                  f"vdd*q_tot <= e_upper: {bound_ok}, l=4 settling {settle:.4%}, "
                  f"{t.elapsed:.2f} s")
    assert ok


def test_c03_digital_limits(record):
    grid = np.linspace(0, VDD, 166)
    with Timer() as t:
        err_lo = err_hi = worst_kcl = 0.0
        monotone = True
        for r_up, r_dn in DISCRETE_CONFIGS.values():
            c = build_inverter_2t2r(DISCRETE_P, DISCRETE_N, r_up, r_dn, VDD)
            tr = sweep_1d(c, "in", grid)
            err_lo = max(err_lo, abs(tr.output_values[0] - VDD))
            err_hi = max(err_hi, abs(tr.output_values[-1]))
            monotone &= bool(np.all(np.diff(tr.output_values) <= 0))
            for op in tr.points:
                worst_kcl = max(worst_kcl, float(np.max(np.abs(kcl_residuals(c, op)))))
    ok = err_lo <= 1e-6 and err_hi <= 1e-6 and monotone and worst_kcl <= 1e-12 and t.elapsed < 5
    record(3, ok, f"|V_OUT(0)-VDD| {err_lo:.1e} V, |V_OUT(VDD)| {err_hi:.1e} V, "
                  f"monotone {monotone}, max KCL {worst_kcl:.1e} A, {t.elapsed:.2f} s")
    assert ok


def _family(points, grid):
    return [plateau_metrics(sweep_1d(build_inverter_2t2r(r_up=u, r_dn=d), "in", grid))
            for u, d in points]


def test_c04_modality_orthogonality(record):
    grid = np.linspace(0, VDD, 166)
    with Timer() as t:
        ratio = ModalitySpec.ratio_fixed(4e6, 6e6, (0.5, 0.75, 1.0, 1.5, 2.0))
        rm = _family(ratio.points, grid)
        total = ModalitySpec.sum_fixed(20e6, (5e6, 8e6, 10e6, 12e6, 15e6))
        sm = _family(total.points, grid)
    alt = np.array([m.altitude for m in rm])
    wid = np.array([m.width for m in rm])
    alt_spread = alt.max() - alt.min()
    d = np.diff(wid)
    width_monotone = bool(np.all(d > 0) or np.all(d < 0))
    s_wid = np.array([m.width for m in sm])
    s_target = np.array([VDD * dn / (up + dn) for up, dn in total.points])
    s_track = np.max(np.abs(np.array([m.altitude for m in sm]) - s_target))
    ok = (alt_spread <= 0.05 * VDD and width_monotone and np.ptp(s_wid) <= 0.1 * VDD
          and s_track <= 0.05 * VDD and t.elapsed < 30)
    record(4, ok, f"ratio-fixed: altitude spread {alt_spread * 1e3:.1f} mV, width monotone "
                  f"{width_monotone}; sum-fixed: width spread {np.ptp(s_wid) * 1e3:.1f} mV, "
                  f"altitude tracking {s_track * 1e3:.1f} mV; {t.elapsed:.1f} s")
    assert ok


def test_c05_nand_structure(record):
    grid = np.linspace(0, VDD, 21)
    with Timer() as t:
        nand = build_nand_4t3r(DISCRETE_P, DISCRETE_P, DISCRETE_N, DISCRETE_N, vdd=VDD)
        z = surface_2d(nand, grid, grid)
        row0 = np.max(np.abs(z[0] - VDD))
        reduced = sweep_1d(reduce_nand(nand, "a"), "b", grid).output_values
        row_vdd = np.max(np.abs(z[-1] - reduced))
        f_a, f_b = z[:, -1], z[-1, :]
        product = np.outer(1 - f_a / VDD, 1 - f_b / VDD)
        rho = pearsonr(z.ravel(), VDD * (1 - product).ravel())[0]

        n = nmos(w=100.0)
        sym = build_nand_4t3r(n.flipped(), n.flipped(), n, n, vdd=VDD)
        nor = build_nor_dual(sym)
        z_nand = surface_2d(sym, grid, grid)
        z_nor = surface_2d(nor, grid, grid)
        dual = np.max(np.abs(z_nor - (VDD - z_nand[::-1, ::-1])))
    ok = row0 <= 1e-6 and row_vdd <= 1e-3 and rho >= 0.95 and dual <= 1e-3 and t.elapsed < 30
    record(5, ok, f"A=0 row err {row0:.1e} V, A=VDD vs reduction {row_vdd:.1e} V, "
                  f"Pearson {rho:.4f}, NOR duality {dual:.1e} V, {t.elapsed:.1f} s")
    assert ok


def _unimodal(i, tol):
    k = int(np.argmax(i))
    return bool(np.all(np.diff(i[:k + 1]) >= -tol) and np.all(np.diff(i[k:]) <= tol)), k


def test_c06_readout(record):
    p = ReadoutParams()
    grid = np.round(np.arange(0, 1651) * 1e-3, 12)
    with Timer() as t:
        _, i_shoot = scan(p, grid)
        # the off-state tails sit at the g_min leakage floor (~1e-22 A noise)
        unimodal, k = _unimodal(i_shoot, 1e-18)
        peak_err = abs(grid[k] - switch_point(p))
        on = i_shoot >= p.i_ref
        runs = np.flatnonzero(np.diff(on.astype(int)) != 0)
        contiguous = on.any() and len(runs) <= 2
        lo, hi = on_target_window(p)
        width = hi - lo
        widths = []
        for i_ref in (0.25e-6, 0.5e-6, 0.75e-6, 1.0e-6, 1.25e-6, 1.5e-6):
            w = on_target_window(ReadoutParams(i_ref=i_ref))
            widths.append(0.0 if w is None else w[1] - w[0])
        shrinking = bool(np.all(np.diff(widths) < 0))
    ok = (unimodal and peak_err <= 1e-3 and contiguous and 0.020 <= width <= 0.300
          and shrinking and t.elapsed < 10)
    record(6, ok, f"unimodal {unimodal}, peak {peak_err * 1e3:.2f} mV from switch point, "
                  f"window {width * 1e3:.0f} mV contiguous {contiguous}, shrinks with i_ref "
                  f"{shrinking}, {t.elapsed:.1f} s")
    assert ok


def test_c07_texel_ordering(record):
    with Timer() as t:
        base = TexelConfig()
        array = program_template(TexelArrayConfig((base,) * 4), (0.73, 0.72, 0.71, 0.71))
        sim = [array_match(array, row).v_out for _, row, _ in MEASURED_VECTORS]
    measured = [m for _, _, m in MEASURED_VECTORS]
    rho = spearmanr(sim, measured)[0]
    top = {MEASURED_VECTORS[k][0] for k in np.argsort(sim)[-2:]}
    ok = rho >= 0.9 and top == {"2M", "2H"} and t.elapsed < 10
    record(7, ok, f"Spearman {rho:.3f} (>= 0.9), top two {sorted(top)}, {t.elapsed:.1f} s")
    assert ok


def test_c08_toggle_equivalents(record):
    eq = toggle_equivalents(46e-15, 1.25e-15 / VDD, VDD)
    ok = abs(eq - 36.8) <= 0.05
    record(8, ok, f"46 fC / 1.25 fC = {eq:.3f} toggles")
    assert ok


def _points(rng, n):
    return rng.uniform(-0.5, VDD + 0.5, size=(n, 3))


def _boundary_points(rng, p, n=10):
    """(vg, vs, vd) on the cutoff, saturation-edge and source/drain-swap boundaries."""
    sign = 1 if p.polarity == "n" else -1
    pts = []
    for _ in range(n):  # v_gs = v_th
        vs = rng.uniform(0, 1)
        pts.append((vs + sign * p.v_th, vs, vs + sign * rng.uniform(0.05, 1)))
    for _ in range(n):  # v_ds = v_ov
        vs, vov = rng.uniform(0, 0.5), rng.uniform(0.05, 1)
        pts.append((vs + sign * (p.v_th + vov), vs, vs + sign * vov))
    for _ in range(n):  # v_ds = 0
        vs = rng.uniform(0, 1)
        pts.append((vs + sign * rng.uniform(0.6, 1.5), vs, vs))
    return pts


def _check_gradient(p, v, h=mpmath.mpf("1e-24")):
    analytic = mosfet_eval(p, *v)[1:]
    worst = 0.0
    for j in range(3):
        up = [mpmath.mpf(x) for x in v]
        dn = [mpmath.mpf(x) for x in v]
        up[j] += h
        dn[j] -= h
        fd = (mosfet_eval(p, *up)[0] - mosfet_eval(p, *dn)[0]) / (2 * h)
        scale = max(abs(analytic[j]), 1e-6 * p.g_min)
        worst = max(worst, float(abs(fd - analytic[j]) / scale))
    return worst


def test_c09_gradients(record):
    mpmath.mp.dps = 60
    rng = np.random.default_rng(9)
    devices = (nmos(), pmos())
    with Timer() as t:
        worst, n_pts = 0.0, 0
        for p in devices:
            pts = [tuple(v) for v in _points(rng, 470)] + _boundary_points(rng, p)
            for v in pts:
                worst = max(worst, _check_gradient(p, v))
                n_pts += 1
    ok = worst <= 1e-6 and n_pts >= 1000 and t.elapsed < 1.0
    record(9, ok, f"{n_pts} points, max rel err {worst:.1e} (<= 1e-6), {t.elapsed:.2f} s")
    assert ok


RUNS = [("sweep", "discrete_sweep"), ("sweep", "modality"), ("surface", "nand_surface"),
        ("energy", "energy"), ("digitize", "digitize"), ("texel", "texel")]


def _full_run(out):
    for cmd, cfg in RUNS:
        subprocess.run([sys.executable, "-m", "memgate.cli", cmd, "--config",
                        str(CONFIGS / f"{cfg}.json"), "--out", str(out / cfg), "--svg"],
                       check=True, capture_output=True)


def _identical(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(
        _identical(a / d, b / d) for d in cmp.common_dirs)


def test_c10_determinism(record, tmp_path):
    _full_run(tmp_path / "a")
    _full_run(tmp_path / "b")
    n_files = sum(1 for f in (tmp_path / "a").rglob("*") if f.is_file())
    ok = n_files > 0 and _identical(tmp_path / "a", tmp_path / "b")
    record(10, ok, f"{n_files} files byte-identical across two runs: {ok}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

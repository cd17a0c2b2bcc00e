import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memgate.dcsolver import (OperatingPoint, SweepTrace, kcl_residuals, modality_family,
                              plateau_metrics, solve_dc, strip_grid, supply_current,
                              surface_2d, sweep_1d)
from memgate.devices import nmos, pmos
from memgate.netlist import ModalitySpec, build_inverter_2t2r, build_nand_4t3r

VDD = 1.65
GRID = np.linspace(0, VDD, 166)
P, N = pmos(w=1200.0), nmos(w=100.0)


def baseline(**kw):
    return build_inverter_2t2r(r_up=4e6, r_dn=6e6, **kw)


def test_rails_exact_without_gmin():
    c = baseline(pmos_params=pmos(g_min=0.0), nmos_params=nmos(g_min=0.0))
    assert solve_dc(c, {"in": 0.0}).output == pytest.approx(VDD, abs=1e-9)
    assert solve_dc(c, {"in": VDD}).output == pytest.approx(0.0, abs=1e-9)


def test_gmin_leak_at_rail_matches_hand_estimate():
    # with the nMOS off, its g_min drains vdd*g_min through the pull-up branch
    c = baseline()
    drop = VDD - solve_dc(c, {"in": 0.0}).output
    r_up_branch = 4e6
    assert drop == pytest.approx(VDD * 1e-12 * r_up_branch, rel=0.05)


def test_mid_plateau_near_divider():
    m = plateau_metrics(sweep_1d(baseline(), "in", GRID))
    assert m.altitude == pytest.approx(0.99, rel=0.05)
    v = solve_dc(baseline(), {"in": m.altitude_input}).output
    assert abs(v - 0.99) <= 0.05 * VDD


def test_symmetric_inverter_crosses_half_supply():
    n = nmos()
    c = build_inverter_2t2r(n.flipped(), n, 1e6, 1e6)
    out = sweep_1d(c, "in", GRID).output_values
    assert out[0] > VDD / 2 > out[-1]
    k = np.argmin(np.abs(out - VDD / 2))
    assert 0 < k < len(GRID) - 1
    assert solve_dc(c, {"in": VDD / 2}).output == pytest.approx(VDD / 2, abs=1e-9)


def test_hh_wider_than_ll_and_monotone():
    hh = sweep_1d(build_inverter_2t2r(P, N, 106e3, 110e3), "in", GRID, label="HH")
    ll = sweep_1d(build_inverter_2t2r(P, N, 10.5e3, 11.5e3), "in", GRID, label="LL")
    for tr in (hh, ll):
        assert np.all(np.diff(tr.output_values) <= 1e-6)
    assert plateau_metrics(ll).width < plateau_metrics(hh).width


def test_reversed_grid_reverses_trace():
    c = baseline()
    fwd = sweep_1d(c, "in", GRID).output_values
    rev = sweep_1d(c, "in", GRID[::-1]).output_values
    np.testing.assert_allclose(rev[::-1], fwd, atol=1e-9)


def test_warm_start_independence():
    c = build_inverter_2t2r(P, N, 106e3, 20.9e3)
    warm = sweep_1d(c, "in", GRID).output_values
    cold = sweep_1d(c, "in", GRID, warm_start=False).output_values
    np.testing.assert_allclose(warm, cold, atol=1e-9)


def test_guess_is_used():
    c = baseline()
    op = solve_dc(c, {"in": 0.8})
    again = solve_dc(c, {"in": 0.8}, guess=op)
    assert again.iterations <= op.iterations
    assert isinstance(again, OperatingPoint)


@settings(max_examples=40, deadline=None)
@given(st.floats(3, 8), st.floats(3, 8), st.floats(0, 1))
def test_kcl_holds_everywhere(log_up, log_dn, frac):
    c = build_inverter_2t2r(r_up=10 ** log_up, r_dn=10 ** log_dn)
    op = solve_dc(c, {"in": frac * VDD})
    assert np.max(np.abs(kcl_residuals(c, op))) <= 1e-12
    assert -0.5 <= op.output <= VDD + 0.5


def test_supply_current_equals_pull_up_branch():
    c = baseline()
    op = solve_dc(c, {"in": 0.9})
    assert supply_current(c, op) == pytest.approx(op.branch_currents["R_UP"], rel=1e-9)
    assert supply_current(c, op) > 0


def test_input_validation():
    c = baseline()
    with pytest.raises(ValueError):
        solve_dc(c, {"in": -0.1})
    with pytest.raises(ValueError):
        solve_dc(c, {})
    with pytest.raises(ValueError):
        solve_dc(c, {"in": 0.1, "x": 0.2})
    with pytest.raises(ValueError):
        sweep_1d(c, "in", [])
    with pytest.raises(ValueError):
        sweep_1d(c, "in", [0.1, 0.3, 0.2])


def test_nand_surface_rows():
    grid = np.linspace(0, VDD, 6)
    z = surface_2d(build_nand_4t3r(P, P, N, N), grid, grid)
    np.testing.assert_allclose(z[0], VDD, atol=1e-6)
    assert z.shape == (6, 6)


def test_strip_grid_protocol():
    g = strip_grid(VDD)
    assert g[0] == 0.0 and g[-1] == VDD
    assert np.all(np.diff(g) > 0)
    fine = g[(g >= 0.5) & (g <= 0.8)]
    np.testing.assert_allclose(fine, [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8])
    coarse = g[g < 0.5]
    np.testing.assert_allclose(np.diff(coarse), 0.1)


def test_step_trace_has_no_plateau():
    x = np.linspace(0, VDD, 166)
    y = np.where(x < 0.8, VDD, 0.0)
    m = plateau_metrics(SweepTrace(x, y))
    assert m.width < x[1] - x[0]


def test_plateau_rejects_short_trace():
    with pytest.raises(ValueError):
        plateau_metrics(SweepTrace(np.arange(3.0), np.arange(3.0)))


def test_sum_fixed_altitude_decreases_with_r_up():
    spec = ModalitySpec.sum_fixed(20e6, (5e6, 8e6, 10e6, 12e6, 15e6))
    res = modality_family(lambda u, d: build_inverter_2t2r(r_up=u, r_dn=d), spec, GRID)
    alt = [m.altitude for _, m in res]
    assert np.all(np.diff(alt) < 0)
    widths = [m.width for _, m in res]
    assert np.ptp(widths) <= 0.1 * VDD
    for (u, d), m in res:
        assert abs(m.altitude - VDD * d / (u + d)) <= 0.05 * VDD


def test_ratio_fixed_unit_ratio_family():
    spec = ModalitySpec.ratio_fixed(10e6, 10e6, (0.5, 1.0, 2.0))
    res = modality_family(lambda u, d: build_inverter_2t2r(r_up=u, r_dn=d), spec, GRID)
    alt = np.array([m.altitude for _, m in res])
    width = np.array([m.width for _, m in res])
    assert np.ptp(alt) <= 0.05 * VDD
    assert np.all(np.diff(width) > 0)


def test_single_point_family():
    res = modality_family(lambda u, d: build_inverter_2t2r(r_up=u, r_dn=d),
                          [(4e6, 6e6)], GRID)
    assert len(res) == 1


def test_divider_limit_for_large_memristors():
    # 100 Mohm branches dwarf the transistor on-resistance near mid-supply
    for r_up, r_dn in ((100e6, 100e6), (50e6, 150e6), (150e6, 50e6)):
        m = plateau_metrics(sweep_1d(build_inverter_2t2r(r_up=r_up, r_dn=r_dn), "in", GRID))
        assert abs(m.altitude - VDD * r_dn / (r_up + r_dn)) <= 0.05 * VDD

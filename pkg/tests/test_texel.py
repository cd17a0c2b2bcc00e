import itertools

import numpy as np
import pytest

from memgate.devices import RangeError
from memgate.texel import (DEFAULT_LOAD, TexelArrayConfig, TexelConfig, UnreachableTarget,
                           achievable_range, array_match, peak_input, program_template,
                           texel_current)

VDD = 1.65
T = TexelConfig()
TARGETS_2M = (0.73, 0.72, 0.71, 0.71)


@pytest.fixture(scope="module")
def programmed():
    return program_template(TexelArrayConfig.from_resistances([35e3] * 4), TARGETS_2M)


def test_current_vanishes_at_zero_input():
    assert texel_current(T, 0.0) < 1e-10


def test_current_peaks_at_peak_input():
    v_pk = peak_input(T)
    grid = np.linspace(0.0, VDD, 1651)
    i = np.array([texel_current(T, v) for v in grid])
    assert abs(grid[np.argmax(i)] - v_pk) <= 1e-3
    assert texel_current(T, v_pk) >= i.max() * (1 - 1e-9)


def test_peak_input_rises_with_r1():
    v = [peak_input(T.with_r1(r)) for r in np.geomspace(10e3, 100e3, 8)]
    assert all(b > a for a, b in zip(v, v[1:]))


def test_program_is_a_fixed_point(programmed):
    again = program_template(programmed, TARGETS_2M)
    np.testing.assert_allclose(again.resistances, programmed.resistances, rtol=1e-6)
    for t, target in zip(programmed.texels, TARGETS_2M):
        assert peak_input(t) == pytest.approx(target, abs=1e-4)


def test_resistances_follow_targets(programmed):
    r = programmed.resistances
    assert r[0] > r[1] > r[2]
    assert r[2] == pytest.approx(r[3], rel=1e-6)


def test_unreachable_target_reports_index_and_range():
    lo, hi = achievable_range(T)
    array = TexelArrayConfig.from_resistances([35e3] * 3)
    with pytest.raises(UnreachableTarget) as exc:
        program_template(array, [0.72, hi + 0.05, 0.72])
    assert exc.value.index == 1
    assert exc.value.achievable == pytest.approx((lo, hi))
    with pytest.raises(ValueError):
        program_template(array, [0.72])


def test_out_of_bounds_resistance():
    with pytest.raises(RangeError):
        T.with_r1(2e6)


def test_all_at_peak_is_the_best_match():
    array = TexelArrayConfig.from_resistances([32e3, 38e3])
    peaks = [peak_input(t) for t in array.texels]
    best = array_match(array, peaks).v_out
    grid = np.linspace(0.0, VDD, 166)
    # the sum is separable, so scanning each texel alone covers every pair
    per = [[texel_current(t, v) for v in grid] for t in array.texels]
    assert DEFAULT_LOAD * (max(per[0]) + max(per[1])) <= best * (1 + 1e-9)
    for a, b in itertools.product(grid[::4], grid[::4]):
        assert array_match(array, [a, b]).v_out <= best * (1 + 1e-9)


def test_zero_inputs_give_no_output(programmed):
    r = array_match(programmed, [0.0] * 4)
    assert r.v_out < 1e-4
    assert not r.clipped


def test_output_is_clipped_at_supply():
    array = TexelArrayConfig.from_resistances([35e3] * 2, r_load=1e9)
    v = peak_input(array.texels[0])
    r = array_match(array, [v, v])
    assert r.clipped and r.v_out == VDD


def test_permutation_invariance():
    array = TexelArrayConfig.from_resistances([35e3] * 3)
    x = [0.6, 0.7, 0.8]
    a = array_match(array, x).v_out
    assert array_match(array, x[::-1]).v_out == pytest.approx(a, rel=1e-12)


def test_separability(programmed):
    x = [0.70, 0.75, 0.72, 0.65]
    r = array_match(programmed, x)
    singles = [texel_current(t, v) for t, v in zip(programmed.texels, x)]
    assert r.v_out == pytest.approx(DEFAULT_LOAD * sum(singles), rel=1e-12)
    assert r.per_texel_current == pytest.approx(tuple(singles))


def test_matching_leaves_resistances_unchanged(programmed):
    before = programmed.resistances
    for x in ([0.7] * 4, [0.0] * 4, [VDD] * 4):
        array_match(programmed, x)
    assert programmed.resistances == before


def test_r_limit_caps_current():
    capped = TexelConfig(r_limit=10e6)
    v = peak_input(capped)
    assert texel_current(capped, v) == pytest.approx(VDD / 10e6)
    assert texel_current(T, v) > VDD / 10e6
    with pytest.raises(ValueError):
        TexelConfig(r_limit=0.0)


def test_array_validation():
    with pytest.raises(ValueError):
        TexelArrayConfig(())
    with pytest.raises(ValueError):
        TexelArrayConfig.from_resistances([35e3], r_load=0.0)
    with pytest.raises(ValueError):
        array_match(TexelArrayConfig.from_resistances([35e3]), [0.1, 0.2])
    with pytest.raises(ValueError):
        texel_current(T, -0.1)

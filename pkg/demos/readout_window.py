"""
The read-out inverter as a window comparator
============================================

A plain CMOS inverter draws its largest shoot-through current when both
transistors conduct, i.e. near its switch point. Comparing that current
with a reference marks a narrow band of input levels as "on target".
Lowering the reference widens the band.
"""

import numpy as np

from memgate.readout import ReadoutParams, on_target_window, scan, switch_point

p = ReadoutParams()
v_sw = switch_point(p)
print(f"switch point {v_sw:.4f} V")

grid = np.linspace(0, p.vdd, 12)
v_out1, i_shoot = scan(p, grid)
for v, o, i in zip(grid, v_out1, i_shoot):
    print(f"  v_mid {v:.2f} V  v_out1 {o:.3f} V  i {i * 1e6:7.3f} uA")

print("\ni_ref (uA)  window (V)")
for i_ref in (0.25e-6, 0.5e-6, 0.75e-6, 1.0e-6, 1.5e-6):
    w = on_target_window(ReadoutParams(i_ref=i_ref))
    text = "empty" if w is None else f"[{w[0]:.3f}, {w[1]:.3f}] width {w[1] - w[0]:.3f}"
    print(f"  {i_ref * 1e6:5.2f}     {text}")

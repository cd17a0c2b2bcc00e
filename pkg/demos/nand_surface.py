"""
Transfer surface of the 4T3R NAND and its NOR dual
==================================================

Three memristors in a two-input NAND give a graded surface instead of a
Boolean table. Holding one input at VDD reduces the gate to an inverter
in the other input, which the solver confirms.
"""

import numpy as np

from memgate.dcsolver import solve_dc, surface_2d, sweep_1d
from memgate.devices import nmos, pmos
from memgate.netlist import build_nand_4t3r, build_nor_dual, reduce_nand

VDD = 1.65
P, N = pmos(w=1200.0), nmos(w=100.0)
nand = build_nand_4t3r(P, P, N, N, m_a=3.5e3, m_b=0.5e3, m_c=4e3)
grid = np.linspace(0, VDD, 11)

z = surface_2d(nand, grid, grid)
print("NAND output (rows V_A, columns V_B)")
for va, row in zip(grid, z):
    print(f"{va:5.2f} " + " ".join(f"{v:5.2f}" for v in row))

# reduction: A held high leaves an inverter in B
inv = reduce_nand(nand, "a")
direct = z[-1]
reduced = sweep_1d(inv, "b", grid).output_values
print(f"\nA=VDD row vs reduced inverter: max |diff| {np.max(np.abs(direct - reduced)):.2e} V")

nor = build_nor_dual(nand)
print("\nNOR corners")
for a in (0.0, VDD):
    for b in (0.0, VDD):
        print(f"  A={a:.2f} B={b:.2f} -> {solve_dc(nor, {'a': a, 'b': b}).output:.3f} V")

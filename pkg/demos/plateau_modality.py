"""
Plateau altitude and width of the 2T2R inverter
===============================================

Two memristors in series with a CMOS inverter turn its step-like transfer
curve into a three-level one. The middle level (the plateau) sits near the
resistive divider value ``vdd * r_dn / (r_up + r_dn)``, and its width
grows with the total resistance. Keeping the sum fixed moves the altitude;
keeping the ratio fixed moves the width.
"""

from pathlib import Path

import numpy as np

from memgate.dcsolver import modality_family, plateau_metrics, sweep_1d
from memgate.devices import nmos, pmos
from memgate.netlist import ModalitySpec, build_inverter_2t2r
from memgate.svg import line_plot

VDD = 1.65
grid = np.linspace(0, VDD, 166)

# discrete parts (100x wider than the integrated devices) with the four
# memristor settings HH, HL, LH, LL
P, N = pmos(w=1200.0), nmos(w=100.0)
settings = {"HH": (106e3, 110e3), "HL": (106e3, 20.9e3),
            "LH": (10.5e3, 110e3), "LL": (10.5e3, 11.5e3)}

traces = []
print("label   r_up     r_dn    altitude  width")
for label, (r_up, r_dn) in settings.items():
    tr = sweep_1d(build_inverter_2t2r(P, N, r_up, r_dn), "in", grid, label=label)
    m = plateau_metrics(tr)
    traces.append((label, tr.input_values, tr.output_values))
    print(f"{label}   {r_up:8.3g} {r_dn:8.3g}  {m.altitude:.3f}    {m.width:.3f}")

# the integrated devices, first at fixed sum, then at fixed ratio
template = lambda u, d: build_inverter_2t2r(r_up=u, r_dn=d)

print("\nfixed sum 20 Mohm")
for (u, d), m in modality_family(template, ModalitySpec.sum_fixed(20e6, (5e6, 10e6, 15e6)),
                                 grid):
    print(f"  r_up={u:.0e}  altitude {m.altitude:.3f} (divider {VDD * d / (u + d):.3f})")

print("\nfixed ratio 4:6")
for (u, d), m in modality_family(template, ModalitySpec.ratio_fixed(4e6, 6e6, (0.5, 1, 2)),
                                 grid):
    print(f"  r_up={u:.0e}  width {m.width:.3f}")

out = Path("demo_out")
out.mkdir(exist_ok=True)
(out / "plateau.svg").write_text(line_plot(traces, "2T2R transfer curves", "V_IN (V)",
                                           "V_OUT (V)"))

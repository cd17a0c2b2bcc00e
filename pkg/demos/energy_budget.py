"""
Charge drawn during one output transition
=========================================

While the output settles, the memristive divider keeps leaking current
from VDD to ground. The total charge is that leakage plus the charge that
moves onto the load. Waiting ``l`` time constants settles the output to
within ``exp(-l)`` of its final value; the leakage grows linearly in ``l``.
"""

from memgate.energy import DividerModel, q_tot, settling_error, toggle_equivalents, \
    transient_oracle

VDD = 1.65
m = DividerModel(r1=4e6, r2=6e6, c_out=10e-15, vdd=VDD, v_out_1=0.0)
print(f"tau = {m.tau * 1e9:.1f} ns, final level {m.v_out_2:.3f} V")

print("\n l   q_leak(fC) q_charge(fC) q_tot(fC) oracle(fC) settle")
for l in (1, 2, 4, 8):
    r = q_tot(m, l)
    q_num = transient_oracle(m, l)[0]
    print(f"{l:2d}   {r.q_leak * 1e15:8.3f}  {r.q_charge * 1e15:8.3f}   "
          f"{r.q_tot * 1e15:8.3f}  {q_num * 1e15:8.3f}   {settling_error(m, l) / VDD:.4f}")

# the same charge expressed as equivalent toggles of a small CMOS gate
print(f"\n46 fC over a 1.25 fJ toggle: {toggle_equivalents(46e-15, 1.25e-15 / VDD, VDD):.1f} "
      "toggle equivalents")

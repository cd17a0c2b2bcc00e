"""
Matching spike waveforms with a four-texel array
================================================

Each texel's pull-down memristor sets the input level at which it sources
the most current. Programming four texels to the samples of one spike
turns the array into a template: the summed output is largest for spikes
that resemble it.

The bundled waveforms are synthetic, built to carry known L/M/H sample
vectors for three spike classes.
"""

from memgate.spikesort import FIXTURE_V_TRIG, format_report, load_fixture, \
    run_experiment, select_all
from memgate.texel import TexelArrayConfig, program_template

data = load_fixture()
vectors = select_all(data, FIXTURE_V_TRIG)
template = next(v for v in vectors if (v.class_label, v.instance_tag) == (2, "M"))
print("template 2M:", template.rounded)

array = program_template(TexelArrayConfig.from_resistances([35e3] * 4), template.rounded)
print("programmed r1 (kohm):", ", ".join(f"{r / 1e3:.2f}" for r in array.resistances))

rows = run_experiment(data, array, FIXTURE_V_TRIG)
print()
print(format_report(rows), end="")

ranked = sorted(rows, key=lambda r: r.v_out, reverse=True)
print("\nbest matches:", ", ".join(f"{r.vector.class_label}{r.vector.instance_tag}"
                                   for r in ranked[:2]))
for r in rows:
    if r.shared_with:
        print(f"{r.vector.class_label}{r.vector.instance_tag} shares its rounded vector "
              f"with {', '.join(r.shared_with)}")

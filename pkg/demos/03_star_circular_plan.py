# %% [markdown]
# # A star-then-circular plan for 200 kN
#
# Four bolts in a star (1, 11, 6, 16), then the rest in order around the
# ring. The plan comes from the four ratios alone; we then compare it with
# the full-sequence method and with tightening everything to 200 kN.

# %%
from boltseq import (
    TAM_MU02, BenchModel, JointSpec, LoadVector, load_stats, make_pattern,
    run_eicm, run_sequence, run_tam,
)

spec = JointSpec(n_bolts=20, target_load=200.0, yield_load=500.0)
bench = BenchModel.tetraparametric(TAM_MU02)
pattern = make_pattern("star_circular", 20)

tam = run_tam(spec, bench, pattern)
eicm = run_eicm(spec, bench, pattern)
print(" bolt   TAM (kN)  EICM (kN)")
for bolt in pattern.order:
    print(f"{bolt:5d} {tam.initial_loads[bolt]:10.1f} {eicm.initial_loads[bolt]:10.1f}")

# %% What a naive uniform 200 kN pass would leave behind
_, naive = run_sequence(spec, bench, pattern, LoadVector.uniform(20, 200.0))
for label, loads in (("uniform 200 kN", naive), ("TAM plan", tam.predicted_final_loads)):
    s = load_stats(loads)
    print(f"{label:>15}: mean {s.mean:6.1f} kN  std {s.std:5.2f} kN  min {s.min:6.1f}")

"""How much the driver-side filter removes before the skyline back-end."""

# %%
from areasky.datagen import generate, preset
from areasky.pipeline import VariantSpec, run_pipeline

m = generate(preset("A", 0.2, seed=1))
print(f"k={m.k}, {m.k * m.k} tuples")

# %% Existing vs proposed with the same back-end.
for backend in ("bnl", "sfs", "skymr"):
    reps = {}
    for mode in ("e", "p"):
        sky, rep = run_pipeline(m, VariantSpec.parse(f"{mode}-{backend}", workers=4))
        reps[mode] = rep
    e, p = reps["e"], reps["p"]
    print(
        f"{backend:6s} backend input {e.backend_input:7d} -> {p.backend_input:6d}, "
        f"filter size {p['MF'].out_count}, skyline {len(sky)}"
    )

# %% Per-stage table for the last proposed run.
for row in p.rows():
    print("{:9s} {:10s} {:9.2f} ms {:8d} -> {:8d}".format(*row))

"""Walk through the 4x4 example map: distance fields, tuples, skyline."""

# %% Build the map: a station, two apartments, two warehouses, one landfill.
from areasky import pipeline
from areasky.edt import edt
from areasky.model import dominates, table1_map
from areasky.reports import skyline_raw

m = table1_map()
print(f"k={m.k}, types: {[(t.name, t.polarity.value) for t in m.types]}")

# %% Squared distance per type. Landfill is undesirable and gets reflected later.
for t in m.types:
    print(t.name)
    print(edt(m, t.id).cells)

# %% Tuples in the minimize convention. The landfill score is dmax2 - d2.
(part,) = pipeline.make_tuples([edt(m, t) for t in range(m.n)], m)
rows = dict(zip(part.tuples.labels(), part.tuples.scores.tolist()))
print("G20", rows["G20"], " G23", rows["G23"])
print("G20 dominates G23:", dominates(rows["G20"], rows["G23"]))

# %% All six variants agree on the skyline.
for v in pipeline.all_variants(workers=2):
    sky, _ = pipeline.run_pipeline(m, v)
    print(f"{v.name:9s} {sky.labels()}")

# %% Raw distances of the skyline grids, back in the original scale.
for label, d2 in zip(sky.labels(), skyline_raw(sky, m).tolist()):
    print(label, [round(x ** 0.5, 3) for x in d2])

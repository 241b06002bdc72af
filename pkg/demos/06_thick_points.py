"""Thick points and their box-counting dimension."""
# %%
from gfflab.cli import DEFAULT_SCALES, DEFAULT_THICK_T, thick_run

scales = [int(s) for s in DEFAULT_SCALES.split(",")]
norm, masks, rows = thick_run(513, 3, [0.0, 0.5, 1.0], DEFAULT_THICK_T, scales)
print("variance growth per unit t:", norm)
for row in rows:
    print(row)

#!/usr/bin/env python3
"""Regenerate tests/data/lab_reference.csv from scikit-image.

The fixture pins an independent sRGB -> CIE Lab reference (D65, 2 degree
observer) for the colorspace acceptance test. Values are written with full
repr precision so the comparison tolerance lives entirely in the test.
"""
import numpy as np
from skimage import color

OUT = "crates/colorhom/tests/data/lab_reference.csv"

rng = np.random.default_rng(77)
triples = rng.integers(0, 256, size=(1000, 3))
lab = color.rgb2lab(triples.reshape(1, -1, 3) / 255.0).reshape(-1, 3)

with open(OUT, "w") as f:
    f.write("r8,g8,b8,L,a,b\n")
    for (r, g, b), (L, A, B) in zip(triples, lab):
        f.write(f"{r},{g},{b},{float(L)!r},{float(A)!r},{float(B)!r}\n")
print(f"wrote {OUT}")

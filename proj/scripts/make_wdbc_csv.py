#!/usr/bin/env python3
"""Write the Wisconsin Diagnostic Breast Cancer data as data/wdbc.csv.

Uses the copy bundled with scikit-learn, so no download is needed. The output
keeps the usual public column layout: a `diagnosis` column (M = malignant,
B = benign) followed by the 30 nucleus features.
"""
import csv
import os
import sys

import sklearn

BASES = ["radius", "texture", "perimeter", "area", "smoothness", "compactness",
         "concavity", "concave_points", "symmetry", "fractal_dimension"]
NAMES = [f"{b}_{s}" for s in ("mean", "se", "worst") for b in BASES]


def main(out_path):
    src = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data",
                       "breast_cancer.csv")
    with open(src, newline="") as f:
        rows = list(csv.reader(f))[1:]
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["diagnosis"] + NAMES)
        for r in rows:
            # scikit-learn encodes malignant as 0
            w.writerow(["M" if r[-1] == "0" else "B"] + r[:-1])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/wdbc.csv")

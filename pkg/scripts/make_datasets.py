#!/usr/bin/env python3
"""Regenerate the derived benchmark data files (wine, breast_cancer).

wine.csv: the 178 UCI wine chemical analyses (via scikit-learn) in a fixed
seeded shuffle. The distributed UCI file is sorted by class, so a "first 89
rows train" split of it would leave class 3 entirely out of training; the
shuffle keeps all three cultivars in both halves while staying reproducible.

breast_cancer.csv: a synthetic stand-in with the shape of the UCI Wisconsin
breast cancer file (699 patterns, 9 integer attributes in 1..10, two
classes 458/241, 16 missing values in attribute 6). The original file is
not bundled; this generator produces a statistically similar set (a latent
severity score drives all nine attributes, strongest for attributes 1 and
6, with enough class overlap to keep accuracies in the mid-90s). The
loader reads the genuine UCI export unchanged if the id column is dropped.
"""

import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, os.pardir, "datasets")

WINE_SHUFFLE_SEED = 7
BC_SEED = 927


def write_wine():
    from sklearn.datasets import load_wine

    data = load_wine()
    order = np.random.default_rng(WINE_SHUFFLE_SEED).permutation(len(data.target))
    lines = []
    for i in order:
        vals = ",".join(f"{v:g}" for v in data.data[i])
        lines.append(f"{vals},class{data.target[i] + 1}")
    with open(os.path.join(OUT, "wine.csv"), "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wine.csv: {len(lines)} rows")


def write_breast_cancer():
    rng = np.random.default_rng(BC_SEED)
    n_benign, n_malignant = 458, 241
    labels = np.array([0] * n_benign + [1] * n_malignant)
    rng.shuffle(labels)
    k = len(labels)

    # latent severity; overlap between the class distributions sets the
    # achievable accuracy ceiling (~96% train / ~93% test)
    z = np.where(labels == 0, rng.normal(-1.05, 0.58, k), rng.normal(0.90, 0.68, k))
    # per-attribute coupling to the severity score; A1 and A6 dominate so
    # pruning tends to keep them (mirroring the published network)
    coupling = np.array([0.93, 0.62, 0.65, 0.55, 0.58, 0.95, 0.60, 0.57, 0.80])
    rows = np.empty((k, 9), dtype=int)
    for j, a in enumerate(coupling):
        mix = a * z + np.sqrt(1.0 - a * a) * rng.normal(0.0, 1.0, k)
        vals = np.rint(5.5 + 2.9 * mix).clip(1, 10).astype(int)
        rows[:, j] = vals
    # mitoses-like tail: A9 sits at 1 for most benign cases
    low = (labels == 0) & (rng.random(k) < 0.75)
    rows[low, 8] = 1

    lines = []
    missing = set(rng.choice(k, size=16, replace=False))
    for i in range(k):
        vals = [str(v) for v in rows[i]]
        if i in missing:
            vals[5] = "?"
        lines.append(",".join(vals) + "," + ("benign" if labels[i] == 0 else "malignant"))
    with open(os.path.join(OUT, "breast_cancer.csv"), "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"breast_cancer.csv: {len(lines)} rows, 16 missing A6 cells")


if __name__ == "__main__":
    write_wine()
    write_breast_cancer()

#!/usr/bin/env python3
# Copyright (c) 2026 The ceg4n Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the Iris and Seeds fixture CSVs under data/.

Iris comes from the copy bundled with scikit-learn. The Seeds CSV is a
synthetic stand-in (210 samples, 7 features, 3 classes) drawn from Gaussian
class conditionals fitted to the published per-class means and deviations of
the UCI wheat-kernel measurements, with a shared size factor correlating the
geometric features. All features are min-max scaled to [0, 1].
"""
import argparse
import pathlib

import numpy as np
from sklearn.datasets import load_iris

# area, perimeter, compactness, length, width, asymmetry, groove
SEEDS_MEAN = np.array([
    [14.33, 14.29, 0.880, 5.51, 3.24, 2.67, 5.09],
    [18.33, 16.14, 0.884, 6.15, 3.68, 3.64, 6.02],
    [11.87, 13.25, 0.849, 5.23, 2.85, 4.79, 5.12],
])
SEEDS_STD = np.array([
    [1.22, 0.58, 0.016, 0.23, 0.18, 1.17, 0.26],
    [1.44, 0.62, 0.016, 0.27, 0.19, 1.18, 0.25],
    [0.72, 0.34, 0.022, 0.14, 0.15, 1.34, 0.16],
])
# loading of each feature on the shared kernel-size factor
SIZE_LOADING = np.array([0.95, 0.95, 0.30, 0.85, 0.85, 0.0, 0.75])


def minmax(x):
    lo, hi = x.min(axis=0), x.max(axis=0)
    return (x - lo) / np.where(hi > lo, hi - lo, 1.0)


def synth_seeds(rng, per_class=70):
    rows, labels = [], []
    for c in range(3):
        size = rng.standard_normal((per_class, 1))
        noise = rng.standard_normal((per_class, 7))
        z = SIZE_LOADING * size + np.sqrt(1.0 - SIZE_LOADING**2) * noise
        rows.append(SEEDS_MEAN[c] + SEEDS_STD[c] * z)
        labels.append(np.full(per_class, c))
    return minmax(np.vstack(rows)), np.concatenate(labels)


def stratified_split(rng, labels, test_fraction):
    train, test = [], []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        k = int(round(test_fraction * len(idx)))
        test.extend(idx[:k])
        train.extend(idx[k:])
    return np.sort(train), np.sort(test)


def write_csv(path, x, y, names):
    with open(path, "w") as f:
        f.write(",".join(names + ["label"]) + "\n")
        for row, label in zip(x, y):
            f.write(",".join(f"{v:.17g}" for v in row) + f",{int(label)}\n")


def emit(out, name, x, y, names, rng):
    write_csv(out / f"{name}.csv", x, y, names)
    train, test = stratified_split(rng, y, 0.2)
    write_csv(out / f"{name}_train.csv", x[train], y[train], names)
    write_csv(out / f"{name}_test.csv", x[test], y[test], names)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[2] / "data"))
    ap.add_argument("--seed", type=int, default=2022)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    iris = load_iris()
    emit(out, "iris", minmax(iris.data), iris.target,
         ["sepal_length", "sepal_width", "petal_length", "petal_width"], rng)

    x, y = synth_seeds(rng)
    emit(out, "seeds", x, y,
         ["area", "perimeter", "compactness", "length", "width", "asymmetry", "groove"], rng)


if __name__ == "__main__":
    main()

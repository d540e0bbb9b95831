#!/usr/bin/env python3
"""Writes small synthetic lookup tables in the <algorithm>/<dataset_id>.csv layout.

The AUC surfaces are smooth made-up functions with a per-dataset shift; they
exercise ingestion and the BO loop and carry no information about real
datasets. Output is deterministic for a given --seed.
"""
import argparse
import csv
import math
import pathlib

import numpy as np

TRAIN_IDS = [3, 1036, 1038, 1043, 1046, 151]
TEST_IDS = [335, 1489, 1486]


def glmnet_rows(rng, n):
    for _ in range(n):
        yield {"alpha": rng.uniform(0.0, 1.0), "lambda": 2.0 ** rng.uniform(-10.0, 10.0)}


def rpart_rows(rng, n):
    for _ in range(n):
        yield {
            "cp": rng.uniform(0.0, 1.0),
            "maxdepth": int(rng.integers(1, 31)),
            "minbucket": int(rng.integers(1, 61)),
            "minsplit": int(rng.integers(1, 61)),
        }


def xgboost_rows(rng, n):
    for _ in range(n):
        yield {
            "nrounds": int(rng.integers(1, 5001)),
            "eta": 2.0 ** rng.uniform(-10.0, 0.0),
            "lambda": 2.0 ** rng.uniform(-10.0, 10.0),
            "alpha": 2.0 ** rng.uniform(-10.0, 10.0),
            "subsample": rng.uniform(0.1, 1.0),
            "booster": "gbtree" if rng.uniform() < 0.5 else "gblinear",
            "max_depth": int(rng.integers(1, 16)),
            "min_child_weight": 2.0 ** rng.uniform(0.0, 7.0),
            "colsample_bytree": rng.uniform(0.0, 1.0),
            "colsample_bylevel": rng.uniform(0.0, 1.0),
        }


def features(algorithm, row):
    if algorithm == "glmnet":
        return [row["alpha"], math.log2(row["lambda"]) / 10.0]
    if algorithm == "rpart":
        return [4.0 * row["cp"], row["maxdepth"] / 10.0, row["minbucket"] / 20.0, row["minsplit"] / 20.0]
    return [
        (row["nrounds"] - 2000.0) / 1000.0,
        (math.log2(row["eta"]) + 5.0) / 2.0,
        math.log2(row["lambda"]) / 5.0,
        math.log2(row["alpha"]) / 5.0,
        (row["subsample"] - 0.5) / 2.0,
        1.0 if row["booster"] == "gbtree" else -1.0,
        row["max_depth"] / 10.0,
        (row["min_child_weight"] - 50.0) / 20.0,
        row["colsample_bytree"],
        row["colsample_bylevel"],
    ]


GENERATORS = {"glmnet": glmnet_rows, "rpart": rpart_rows, "xgboost": xgboost_rows}
SIZES = {"glmnet": 200, "rpart": 200, "xgboost": 300}


def write_table(out_dir, algorithm, dataset_id, seed):
    rng = np.random.default_rng([seed, dataset_id, len(algorithm)])
    rows = list(GENERATORS[algorithm](rng, SIZES[algorithm]))
    dim = len(features(algorithm, rows[0]))
    center = rng.normal(0.0, 0.4, dim)
    scale = rng.uniform(0.6, 1.2)
    base = rng.uniform(0.7, 0.85)
    path = out_dir / algorithm / f"{dataset_id}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()) + ["auc"], lineterminator="\n")
        writer.writeheader()
        for row in rows:
            z = np.asarray(features(algorithm, row)) - center
            auc = base + (0.99 - base) * math.exp(-0.5 * float(z @ z) / (scale * dim))
            out = {k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()}
            out["auc"] = f"{min(max(auc, 0.5), 1.0):.6f}"
            writer.writerow(out)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/hpo_fixture", help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    out_dir = pathlib.Path(args.out)
    for algorithm in GENERATORS:
        for dataset_id in TRAIN_IDS + TEST_IDS:
            write_table(out_dir, algorithm, dataset_id, args.seed)


if __name__ == "__main__":
    main()

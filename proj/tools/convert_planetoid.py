#!/usr/bin/env python3
"""Convert Planetoid pickles (ind.<name>.*) to canonical nodes.csv / edges.csv.

    python3 tools/convert_planetoid.py --name citeseer --native-dir raw/ --out data/citeseer

The document class becomes the `sensitive` column and is not kept as a feature.
Citeseer test indices with no entry in the pickles are filled with zero
features and class 0, giving 3327 nodes.
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_pickle(path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def read_planetoid(native_dir, name):
    base = Path(native_dir)
    parts = {k: load_pickle(base / f"ind.{name}.{k}") for k in ("x", "y", "tx", "ty", "allx", "ally", "graph")}
    test_index = [int(line) for line in (base / f"ind.{name}.test.index").read_text().split()]
    test_sorted = np.sort(test_index)

    tx, ty = parts["tx"], parts["ty"]
    if name == "citeseer":
        full_range = range(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = sp.lil_matrix((len(full_range), tx.shape[1]))
        tx_ext[test_sorted - test_sorted.min(), :] = tx
        ty_ext = np.zeros((len(full_range), ty.shape[1]))
        ty_ext[test_sorted - test_sorted.min(), :] = ty
        tx, ty = tx_ext, ty_ext

    features = sp.vstack((parts["allx"], tx)).tolil()
    labels = np.vstack((parts["ally"], ty))
    features[test_index, :] = features[test_sorted, :]
    labels[test_index, :] = labels[test_sorted, :]

    n = features.shape[0]
    edges = set()
    self_loops = 0
    for u, nbrs in parts["graph"].items():
        for v in nbrs:
            if u == v:
                self_loops += 1
            elif u < n and v < n:
                edges.add((min(u, v), max(u, v)))
    return features.toarray(), labels.argmax(axis=1), sorted(edges), self_loops


def write_csvs(out_dir, features, sensitive, edges):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["id"] + [f"f{c}" for c in range(features.shape[1])] + ["sensitive"]
    with open(out / "nodes.csv", "w") as f:
        f.write(",".join(header) + "\n")
        for i, row in enumerate(features):
            f.write(f"{i}," + ",".join(f"{v:g}" for v in row) + f",{sensitive[i]}\n")
    with open(out / "edges.csv", "w") as f:
        f.write("src,dst\n")
        for u, v in edges:
            f.write(f"{u},{v}\n")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--name", required=True, choices=["citeseer", "cora", "pubmed"])
    p.add_argument("--native-dir", required=True)
    p.add_argument("--out", required=True)
    args = p.parse_args(argv)

    features, sensitive, edges, self_loops = read_planetoid(args.native_dir, args.name)
    write_csvs(args.out, features, sensitive, edges)
    print(
        f"{args.name}: {features.shape[0]} nodes, {features.shape[1]} features, "
        f"{len(edges)} undirected edges ({2 * len(edges)} directed), "
        f"{len(set(sensitive.tolist()))} sensitive groups, {self_loops} self loops dropped"
    )


if __name__ == "__main__":
    sys.exit(main())

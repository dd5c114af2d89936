#!/usr/bin/env python3
"""Write IDX image/label files from the digit JSON shipped in the npm `mnist` package.

The package holds 10,000 MNIST digits as per-class JSON arrays of pixel values
in [0, 1] (three decimals). Pixels are mapped back to bytes with round(255 v).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_from_npm.py package/src/digits data/mnist
"""
import argparse
import json
import pathlib
import struct

import numpy as np


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits", type=pathlib.Path, help="directory with 0.json .. 9.json")
    ap.add_argument("out", type=pathlib.Path)
    ap.add_argument("--seed", type=int, default=0, help="shuffle seed")
    args = ap.parse_args()

    images, labels = [], []
    for d in range(10):
        data = np.asarray(json.loads((args.digits / f"{d}.json").read_text())["data"], dtype=np.float64)
        block = data.reshape(-1, 784)
        images.append(np.clip(np.rint(block * 255.0), 0, 255).astype(np.uint8))
        labels.append(np.full(len(block), d, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.default_rng(args.seed).permutation(len(labels))
    images, labels = images[order], labels[order]

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())
    with open(args.out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())
    print(f"{len(labels)} images -> {args.out}")


if __name__ == "__main__":
    main()

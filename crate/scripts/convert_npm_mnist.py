"""Convert the digits bundled with the `mnist` npm package (v1.1.0) to IDX.

Usage: python3 scripts/convert_npm_mnist.py <package-dir> <out-dir>

The npm package stores 10,000 28x28 digits (about 1,000 per class) as JSON
float arrays (values k/255 printed with three decimals). They are
re-quantized to u8, shuffled with a fixed seed and written as gzipped IDX
files.
"""
import gzip
import json
import struct
import sys
from pathlib import Path

import numpy as np


def main(pkg: Path, out: Path) -> None:
    images, labels = [], []
    for digit in range(10):
        data = json.loads((pkg / "src" / "digits" / f"{digit}.json").read_text())["data"]
        arr = np.rint(np.asarray(data, dtype=np.float64) * 255.0).clip(0, 255).astype(np.uint8)
        arr = arr.reshape(-1, 28, 28)
        images.append(arr)
        labels.append(np.full(arr.shape[0], digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.RandomState(20200).permutation(len(labels))
    images, labels = images[order], labels[order]
    out.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(out / "mnist10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(out / "mnist10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())
    print(len(labels), np.bincount(labels))


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))

#!/usr/bin/env python3
# Copyright (c) 2026, pathforget authors
# SPDX-License-Identifier: Apache-2.0
"""Build a local gzip-IDX mirror from npm tarballs.

For hosts without access to the usual dataset mirrors. MNIST comes from the
``mnist-data`` package, which ships the raw IDX files. FashionMNIST comes
from the ``fashion-mnist`` package, which ships per-class JSON pixel arrays
without the official train/test split; the first 6000 images of each class
become the training split and the next 1000 the test split, both interleaved
by class, so file sizes match the canonical archives.

    npm pack mnist-data fashion-mnist
    python3 tools/make_local_mirror.py --npm-dir . --out /path/to/mirror
    pathforget fetch --source mnist --mirror file:///path/to/mirror/mnist/
"""

import argparse
import gzip
import json
import struct
import tarfile
from pathlib import Path

TRAIN_PER_CLASS = 6000
TEST_PER_CLASS = 1000


def write_gz(path: Path, payload: bytes) -> None:
    # mtime=0 keeps the archives byte-reproducible.
    with open(path, "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", compresslevel=9, mtime=0, filename="") as gz:
            gz.write(payload)


def idx_images(images: list) -> bytes:
    header = struct.pack(">IIII", 0x00000803, len(images), 28, 28)
    return header + b"".join(bytes(img) for img in images)


def idx_labels(labels: list) -> bytes:
    return struct.pack(">II", 0x00000801, len(labels)) + bytes(labels)


def mnist(npm_dir: Path, out: Path) -> None:
    tgz = sorted(npm_dir.glob("mnist-data-*.tgz"))[-1]
    out.mkdir(parents=True, exist_ok=True)
    with tarfile.open(tgz) as tar:
        for member in tar.getmembers():
            if member.name.startswith("package/data/") and member.isfile():
                data = tar.extractfile(member).read()
                write_gz(out / (Path(member.name).name + ".gz"), data)


def fashion(npm_dir: Path, out: Path) -> None:
    tgz = sorted(npm_dir.glob("fashion-mnist-*.tgz"))[-1]
    per_class = []
    with tarfile.open(tgz) as tar:
        for label in range(10):
            member = tar.getmember(f"package/src/clothes/{label}.json")
            images = json.load(tar.extractfile(member))["data"]
            # The package carries a couple of empty placeholder entries.
            per_class.append([img for img in images if len(img) == 28 * 28])

    train_images, train_labels = [], []
    for i in range(TRAIN_PER_CLASS):
        for label in range(10):
            train_images.append(per_class[label][i])
            train_labels.append(label)

    test_images, test_labels = [], []
    for i in range(TRAIN_PER_CLASS, TRAIN_PER_CLASS + TEST_PER_CLASS):
        for label in range(10):
            test_images.append(per_class[label][i])
            test_labels.append(label)

    out.mkdir(parents=True, exist_ok=True)
    write_gz(out / "train-images-idx3-ubyte.gz", idx_images(train_images))
    write_gz(out / "train-labels-idx1-ubyte.gz", idx_labels(train_labels))
    write_gz(out / "t10k-images-idx3-ubyte.gz", idx_images(test_images))
    write_gz(out / "t10k-labels-idx1-ubyte.gz", idx_labels(test_labels))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--npm-dir", type=Path, default=Path("."))
    parser.add_argument("--out", type=Path, required=True)
    args = parser.parse_args()
    mnist(args.npm_dir, args.out / "mnist")
    fashion(args.npm_dir, args.out / "fashion_mnist")


if __name__ == "__main__":
    main()

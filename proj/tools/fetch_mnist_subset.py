#!/usr/bin/env python3
# Copyright 2026 The grbmamp Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds the 5k MNIST subset shipped under data/mnist5k.

The images come from the 5,000-sample MNIST extract bundled with the
mlxtend wheel (500 images per digit, taken from the MNIST training
partition). Every 25th image goes to the held-out split, giving 4,800
training and 200 test images, written as gzip-compressed IDX files.

Usage: fetch_mnist_subset.py [--wheel PATH] [--out DIR]
"""
import argparse
import glob
import gzip
import os
import struct
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def find_wheel(path):
    if path:
        return path
    tmp = tempfile.mkdtemp()
    subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                           "--dest", tmp, "mlxtend==0.24.0"])
    return glob.glob(os.path.join(tmp, "mlxtend-*.whl"))[0]


def write_idx_images(path, rows):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(rows), 28, 28))
        for r in rows:
            f.write(bytes(r))


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel", default=None)
    ap.add_argument("--out", default=os.path.join(
        os.path.dirname(__file__), "..", "data", "mnist5k"))
    args = ap.parse_args()

    raw = zipfile.ZipFile(find_wheel(args.wheel)).read(MEMBER)
    lines = gzip.decompress(raw).decode().strip().split("\n")
    train, train_y, test, test_y = [], [], [], []
    for k, line in enumerate(lines):
        vals = [int(float(v)) for v in line.split(",")]
        pixels, label = vals[:784], vals[784]
        if k % 25 == 24:
            test.append(pixels)
            test_y.append(label)
        else:
            train.append(pixels)
            train_y.append(label)

    os.makedirs(args.out, exist_ok=True)
    write_idx_images(os.path.join(args.out, "train-images-idx3-ubyte.gz"), train)
    write_idx_labels(os.path.join(args.out, "train-labels-idx1-ubyte.gz"), train_y)
    write_idx_images(os.path.join(args.out, "test-images-idx3-ubyte.gz"), test)
    write_idx_labels(os.path.join(args.out, "test-labels-idx1-ubyte.gz"), test_y)
    print(f"wrote {len(train)} training and {len(test)} test images to {args.out}")


if __name__ == "__main__":
    main()

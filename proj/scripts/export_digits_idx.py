#!/usr/bin/env python3
"""Export the sklearn 8x8 digits dataset as IDX image/label files.

Produces a stratified train/test split under data/:
  digits-train-images.idx3  digits-train-labels.idx1
  digits-test-images.idx3   digits-test-labels.idx1
"""
import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits


def write_images(path: Path, images: np.ndarray) -> None:
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "data"
    out.mkdir(exist_ok=True)

    digits = load_digits()
    images = np.rint(digits.images * 255.0 / 16.0).astype(np.uint8)
    labels = digits.target.astype(np.uint8)

    rng = np.random.default_rng(12345)
    train_idx, test_idx = [], []
    for k in range(10):
        idx = np.flatnonzero(labels == k)
        rng.shuffle(idx)
        cut = int(round(len(idx) * 0.8))
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    train_idx = np.sort(np.array(train_idx))
    test_idx = np.sort(np.array(test_idx))

    write_images(out / "digits-train-images.idx3", images[train_idx])
    write_labels(out / "digits-train-labels.idx1", labels[train_idx])
    write_images(out / "digits-test-images.idx3", images[test_idx])
    write_labels(out / "digits-test-labels.idx1", labels[test_idx])
    print(f"train={len(train_idx)} test={len(test_idx)} -> {out}")


if __name__ == "__main__":
    main()

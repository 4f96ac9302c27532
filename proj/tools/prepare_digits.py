# Copyright 2026 The sltlab Authors
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
"""Export the scikit-learn 8x8 handwritten-digits corpus as an IDX pair.

The 1797 images ship with scikit-learn itself (no download), with pixel
intensities 0..16. They are rescaled to the usual 0..255 byte range so the
loader's /255 normalization lands back on [0, 1].

Usage: python3 tools/prepare_digits.py [--out-dir data]
"""
import argparse
import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits


def write_idx_images(path: Path, images: np.ndarray) -> None:
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("data"))
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    bunch = load_digits()
    images = np.round(bunch.images * (255.0 / 16.0)).clip(0, 255)
    labels = bunch.target

    img_path = args.out_dir / "digits-images-idx3-ubyte"
    lab_path = args.out_dir / "digits-labels-idx1-ubyte"
    write_idx_images(img_path, images)
    write_idx_labels(lab_path, labels)
    print(f"wrote {img_path} ({len(labels)} images, "
          f"{images.shape[1]}x{images.shape[2]}) and {lab_path}")


if __name__ == "__main__":
    main()

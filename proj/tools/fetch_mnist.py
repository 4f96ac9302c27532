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
"""Download the full 28x28 MNIST IDX files (needs network access).

The repository's committed fixtures are the 8x8 digits corpus from
prepare_digits.py, which keeps the test suite hermetic. Run this script when
you want the real thing; the training CLI reads either via the same
'dataset' config section (set "downsample_factor": 4 to pool 28x28 down to
7x7 if you want comparable input sizes).

Usage: python3 tools/fetch_mnist.py [--out-dir data]
"""
import argparse
import gzip
import shutil
import urllib.request
from pathlib import Path

MIRRORS = [
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
]
FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]


def fetch(name: str, out_dir: Path) -> None:
    target = out_dir / name.removesuffix(".gz")
    if target.exists():
        print(f"{target} already present")
        return
    last_err = None
    for mirror in MIRRORS:
        try:
            print(f"fetching {mirror}{name}")
            with urllib.request.urlopen(mirror + name, timeout=60) as resp:
                payload = resp.read()
            gz = out_dir / name
            gz.write_bytes(payload)
            with gzip.open(gz, "rb") as src, open(target, "wb") as dst:
                shutil.copyfileobj(src, dst)
            gz.unlink()
            print(f"wrote {target}")
            return
        except OSError as err:  # noqa: PERF203 - try the next mirror
            last_err = err
    raise SystemExit(f"all mirrors failed for {name}: {last_err}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("data"))
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name in FILES:
        fetch(name, args.out_dir)


if __name__ == "__main__":
    main()

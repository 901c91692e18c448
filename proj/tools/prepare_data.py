#!/usr/bin/env python3
"""Regenerate the checked-in dataset snapshots under data/.

Sources (both fetched as wheels from PyPI, no network access to the original hosts):

* Fuel efficiency: ``vega_datasets/_data/cars.json`` from vega_datasets 0.9.0.
  This is the UCI auto-mpg table. Rows without an mpg value are dropped, which
  reproduces the 398-row ``auto-mpg.data`` file; six horsepower cells stay empty.
* MNIST: ``mlxtend/data/data/mnist_5k.csv.gz`` from mlxtend, a 5000-image class
  balanced subset of the MNIST training set. It is re-encoded as gzip IDX files
  (magic 2051 / 2049) so the regular IDX loader reads it.

Usage: prepare_data.py <vega_datasets.whl> <mlxtend.whl> <out-dir>
"""

import csv
import gzip
import io
import json
import struct
import sys
import zipfile

ORIGIN_CODE = {"USA": 1, "Europe": 2, "Japan": 3}


def write_fuel(wheel, out_dir):
    with zipfile.ZipFile(wheel) as z:
        cars = json.loads(z.read("vega_datasets/_data/cars.json"))
    rows = [c for c in cars if c["Miles_per_Gallon"] is not None]
    path = f"{out_dir}/fuel/auto-mpg.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["mpg", "cylinders", "displacement", "horsepower", "weight",
                    "acceleration", "model_year", "origin", "car_name"])
        for c in rows:
            hp = "" if c["Horsepower"] is None else c["Horsepower"]
            w.writerow([c["Miles_per_Gallon"], c["Cylinders"], c["Displacement"], hp,
                        c["Weight_in_lbs"], c["Acceleration"], int(c["Year"][:4]) - 1900,
                        ORIGIN_CODE[c["Origin"]], c["Name"]])
    print(f"{path}: {len(rows)} rows")


def write_mnist(wheel, out_dir):
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    images, labels = bytearray(), bytearray()
    count = 0
    for line in io.StringIO(raw):
        values = [int(float(v)) for v in line.strip().split(",")]
        images.extend(values[:-1])
        labels.append(values[-1])
        count += 1
    with gzip.GzipFile(f"{out_dir}/mnist/mnist5k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 2051, count, 28, 28) + bytes(images))
    with gzip.GzipFile(f"{out_dir}/mnist/mnist5k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 2049, count) + bytes(labels))
    print(f"mnist: {count} images")


if __name__ == "__main__":
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    write_fuel(sys.argv[1], sys.argv[3])
    write_mnist(sys.argv[2], sys.argv[3])

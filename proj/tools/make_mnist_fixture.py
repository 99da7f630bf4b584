"""Builds the MNIST test fixture in IDX format.

Source: the 5000-image MNIST subset bundled with the mlxtend package
(mlxtend/data/data/mnist_5k.csv.gz: 784 pixel columns in 0..255, then the
label). Writes gzipped IDX3 images and IDX1 labels, the same layout as the
original MNIST distribution files.

usage: make_mnist_fixture.py <mlxtend wheel or mnist_5k.csv.gz> [out_dir]
"""
import gzip
import io
import pathlib
import struct
import sys
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_csv(source):
    if source.endswith(".whl"):
        with zipfile.ZipFile(source) as wheel:
            raw = wheel.read(MEMBER)
    else:
        raw = pathlib.Path(source).read_bytes()
    rows = []
    for line in io.TextIOWrapper(io.BytesIO(gzip.decompress(raw)), encoding="ascii"):
        values = [int(float(v)) for v in line.strip().split(",") if v]
        if len(values) == 785:
            rows.append(values)
    return rows


def main(source, out_dir):
    rows = read_csv(source)
    images = bytearray(struct.pack(">IIII", 0x803, len(rows), 28, 28))
    labels = bytearray(struct.pack(">II", 0x801, len(rows)))
    for row in rows:
        images += bytes(row[:784])
        labels.append(row[784])
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # mtime=0 keeps the archives byte-reproducible
    (out / "mnist5k-images-idx3-ubyte.gz").write_bytes(gzip.compress(bytes(images), mtime=0))
    (out / "mnist5k-labels-idx1-ubyte.gz").write_bytes(gzip.compress(bytes(labels), mtime=0))
    print(f"{len(rows)} images")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else "tests/data")

#!/usr/bin/env python3
"""Rebuild data/musk1.data and data/musk2.data (and optionally data/elephant.csv).

The UCI MUSK "clean" tables are taken from the CSV copies shipped inside the
`mil` package on PyPI (mil==1.0.5, mil/data/datasets/csv/). Those files have no
header and use the layout `label,bag_id,f1..fd`. This script rewrites them in
the UCI C4.5 layout `molecule,conformation,f1..f166,class.` that
`attnmil --format musk` reads, and the elephant set in bag-CSV form.

    python3 scripts/fetch_datasets.py                 # uses `pip download`
    python3 scripts/fetch_datasets.py --wheel mil-1.0.5-py3-none-any.whl
"""

import argparse
import csv
import hashlib
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

SHA256 = {
    "musk1.csv": "6eb13180b63f7cfabd1c759c510a036ecb561069aa8e86700c76a2fe139d297a",
    "musk2.csv": "14040c8891369392f87f4ce8969a20657e615e40e042f02d1a2fe2cabab01717",
    "elephant.csv": "ffe36a08fb0b8175ff8a4e7eeac6ccfd3300f84dbc047a6fb3ff7ca1a1caf6c9",
}
INNER = "mil/data/datasets/csv/"


def fetch_wheel(dest):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--timeout", "120",
         "-d", str(dest), "mil==1.0.5"],
        check=True,
    )
    return next(pathlib.Path(dest).glob("mil-1.0.5-*.whl"))


def read_member(wheel, name):
    with zipfile.ZipFile(wheel) as zf:
        raw = zf.read(INNER + name)
    digest = hashlib.sha256(raw).hexdigest()
    if digest != SHA256[name]:
        sys.exit(f"{name}: sha256 {digest} does not match {SHA256[name]}")
    return list(csv.reader(io.StringIO(raw.decode())))


def to_c45(rows):
    counters = {}
    out = []
    for row in rows:
        label, bag, feats = int(float(row[0])), row[1], row[2:]
        counters[bag] = counters.get(bag, 0) + 1
        name = f"{'MUSK' if label else 'NON-MUSK'}-{bag}"
        out.append(",".join([name, f"{bag}_{counters[bag]}", *feats, f"{label}."]))
    return "\n".join(out) + "\n"


def to_bag_csv(rows):
    width = len(rows[0]) - 2
    lines = [",".join(["bag_id", "label", *(f"f{i}" for i in range(width))])]
    for row in rows:
        label = 1 if float(row[0]) > 0 else 0
        lines.append(",".join([f"bag-{row[1]}", str(label), *row[2:]]))
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wheel", type=pathlib.Path, help="local mil-1.0.5 wheel")
    ap.add_argument("--out", type=pathlib.Path,
                    default=pathlib.Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--elephant", action="store_true", help="also write elephant.csv")
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(tmp)
        for name in ("musk1", "musk2"):
            target = args.out / f"{name}.data"
            target.write_text(to_c45(read_member(wheel, f"{name}.csv")))
            print(f"wrote {target}")
        if args.elephant:
            target = args.out / "elephant.csv"
            target.write_text(to_bag_csv(read_member(wheel, "elephant.csv")))
            print(f"wrote {target}")


if __name__ == "__main__":
    main()

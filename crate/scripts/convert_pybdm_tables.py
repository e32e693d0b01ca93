#!/usr/bin/env python3
"""Convert the 2D binary CTM tables shipped with pyBDM into complete tables.

pyBDM stores each block under its symbol-normalized key (first symbol mapped
to 0), so a binary table holds one of every complementary pair. The complete
table assigns the stored value to both the key and its bitwise complement.

Usage: convert_pybdm_tables.py <ctm-b2-d4x4.pkl.gz> <out-dir>

Writes ctm-b2-d2x2.csv, ctm-b2-d3x3.csv (text) and ctm-b2-d4x4.ctmt (binary).
"""
import gzip
import pickle
import struct
import sys
from pathlib import Path


def complete(entries, bits):
    full = {}
    for key, value in entries.items():
        assert len(key) == bits
        full[key] = value
        full["".join("1" if c == "0" else "0" for c in key)] = value
    assert len(full) == 2 ** bits, (bits, len(full))
    return dict(sorted(full.items()))


def write_text(path, side, table):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#shape={side}x{side}\n")
        fh.write(f"#class=B2-D{side}x{side}\n")
        for key, value in table.items():
            fh.write(f"{key},{value!r}\n")


def write_binary(path, side, table):
    bits = side * side
    nbytes = (bits + 7) // 8
    with open(path, "wb") as fh:
        fh.write(b"CTMT")
        fh.write(struct.pack("<IIQ", side, side, len(table)))
        for key, value in table.items():
            packed = int(key, 2) << (nbytes * 8 - bits)
            fh.write(packed.to_bytes(nbytes, "big"))
            fh.write(struct.pack("<d", value))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    data = pickle.loads(gzip.decompress(src.read_bytes()))
    out.mkdir(parents=True, exist_ok=True)
    for side in (2, 3):
        write_text(out / f"ctm-b2-d{side}x{side}.csv", side, complete(data[(side, side)], side * side))
    write_binary(out / "ctm-b2-d4x4.ctmt", 4, complete(data[(4, 4)], 16))


if __name__ == "__main__":
    main()

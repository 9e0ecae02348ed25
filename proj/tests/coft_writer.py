"""Minimal COFT writer matching the exporter interface (stdlib only)."""
import math
import struct
import sys
from pathlib import Path


def coft(h, w, k, values, endian="<", magic=b"COFT"):
    head = magic + struct.pack(endian + "4I", 1, h, w, k)
    return head + struct.pack(endian + f"{len(values)}f", *values)


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ramp = [i * 0.25 - 3.0 for i in range(2 * 3 * 4)]
    (out / "ramp.coft").write_bytes(coft(2, 3, 4, ramp))
    (out / "truncated.coft").write_bytes(coft(2, 3, 4, ramp)[:-3])
    (out / "nan.coft").write_bytes(coft(1, 1, 2, [0.0, math.nan]))
    # A big-endian writer is non-conforming; its version field reads as 2^24.
    (out / "bigendian.coft").write_bytes(coft(2, 3, 4, ramp, ">"))


if __name__ == "__main__":
    main(sys.argv[1])

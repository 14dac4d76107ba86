#!/usr/bin/env python3
"""Fetch the 1940 El Centro NS accelerogram and convert it to the two-column
CSV the toolkit ingests (t_s, accel in g).

Usage: fetch_ground_motion.py [output.csv]

Needs network access. The vibrationdata copy is a plain two-column text file
(time [s], acceleration [g]). Verify the provenance and units of whatever
copy you use; the experiment config declares units explicitly.
"""

import sys
import urllib.request

URL = "https://www.vibrationdata.com/elcentro_NS.dat"


def main() -> int:
    out_path = sys.argv[1] if len(sys.argv) > 1 else "data/elcentro_ns.csv"
    print(f"fetching {URL}")
    with urllib.request.urlopen(URL, timeout=60) as response:
        text = response.read().decode("ascii", errors="replace")

    rows = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            continue
    if len(rows) < 100:
        print("unexpected payload; refusing to write", file=sys.stderr)
        return 1

    import os

    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    with open(out_path, "w", newline="\n") as out:
        out.write("t_s,accel_g\n")
        for t, a in rows:
            out.write(f"{t:.17g},{a:.17g}\n")
    print(f"wrote {len(rows)} samples to {out_path} (units: g)")
    return 0


if __name__ == "__main__":
    sys.exit(main())

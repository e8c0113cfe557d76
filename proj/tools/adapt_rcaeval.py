#!/usr/bin/env python3
"""Convert a fault-injection dataset into the case layout read by `baro eval`.

Expected input, one directory per injected fault and one per repetition:

    <src>/<service>_<fault>/<repetition>/data.csv
    <src>/<service>_<fault>/<repetition>/inject_time.txt

Each output case is `<dst>/<service>_<fault>_<repetition>/` holding data.csv (time
column moved first) and a case.json with the root service and the injection timestamp.
The data.csv time column and inject_time.txt must use the same clock.
"""

import argparse
import csv
import json
import sys
from pathlib import Path


def write_data(src: Path, dst: Path, time_column: str) -> None:
    """Copies the CSV with the time column first and named `time`."""
    with src.open(newline="") as fin, dst.open("w", newline="") as fout:
        reader = csv.reader(fin)
        header = next(reader)
        if time_column not in header:
            raise SystemExit(f"{src}: no '{time_column}' column")
        t = header.index(time_column)
        order = [t] + [i for i in range(len(header)) if i != t]
        writer = csv.writer(fout, lineterminator="\n")
        writer.writerow(["time"] + [header[i] for i in order[1:]])
        for row in reader:
            writer.writerow([row[i] for i in order])


def convert(src: Path, dst: Path, time_column: str) -> int:
    written = 0
    for fault_dir in sorted(p for p in src.iterdir() if p.is_dir()):
        service, _, fault = fault_dir.name.rpartition("_")
        if not service:
            print(f"skip {fault_dir}: expected <service>_<fault>", file=sys.stderr)
            continue
        for rep in sorted(p for p in fault_dir.iterdir() if p.is_dir()):
            data = rep / "data.csv"
            inject = rep / "inject_time.txt"
            if not data.exists() or not inject.exists():
                print(f"skip {rep}: data.csv or inject_time.txt missing", file=sys.stderr)
                continue
            case_dir = dst / f"{fault_dir.name}_{rep.name}"
            case_dir.mkdir(parents=True, exist_ok=True)
            write_data(data, case_dir / "data.csv", time_column)
            meta = {
                "label": "abnormal",
                "root_services": [service],
                "root_metrics": [f"{service}_{fault}"],
                "inject_time": float(inject.read_text().strip()),
                "fault": fault,
            }
            (case_dir / "case.json").write_text(json.dumps(meta, indent=2) + "\n")
            written += 1
    return written


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("src", type=Path)
    ap.add_argument("dst", type=Path)
    ap.add_argument("--time-column", default="time", help="timestamp column in the source CSVs")
    args = ap.parse_args()
    if not args.src.is_dir():
        ap.error(f"{args.src} is not a directory")
    n = convert(args.src, args.dst, args.time_column)
    print(f"wrote {n} cases to {args.dst}")
    return 0 if n else 1


if __name__ == "__main__":
    sys.exit(main())

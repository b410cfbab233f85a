"""Materialize the bundled benchmark tables under datasets/.

Pima, Haberman and the 10-class Yeast table are rebuilt from the KEEL files
shipped inside the ``imbalanced-databases`` wheel on PyPI. Yeast's original
localization labels are recovered by multiset intersection of its KEEL
binarizations; the result is checked against the UCI class sizes.

Secom, Wafer and GiveMeSomeCredit are not redistributed on PyPI. Place them
under datasets/ by hand (see datasets/README.md).
"""
import argparse
import csv
import subprocess
import sys
import tempfile
import zipfile
from collections import Counter
from pathlib import Path

YEAST_SIZES = {"CYT": 463, "NUC": 429, "MIT": 244, "ME3": 163, "ME2": 51,
               "ME1": 44, "EXC": 35, "VAC": 30, "POX": 20, "ERL": 5}


def read_keel(path):
    names, rows = [], []
    for line in Path(path).read_text().splitlines():
        if line.lower().startswith("@attribute"):
            names.append(line.split()[1])
        elif line.startswith("@") or not line.strip():
            continue
        else:
            *feats, label = [t.strip() for t in line.split(",")]
            rows.append((tuple(float(v) for v in feats), label))
    return names, rows


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for feats, label in rows:
            w.writerow([repr(v) for v in feats] + [label])


def rebuild_yeast(root):
    def ms(name, label="positive"):
        return Counter(f for f, c in read_keel(root / name / f"{name}.dat")[1] if c == label)

    names, universe = read_keel(root / "yeast1" / "yeast1.dat")
    cls = {
        "NUC": ms("yeast1"), "ME3": ms("yeast3"), "ME2": ms("yeast4"),
        "ME1": ms("yeast5"), "EXC": ms("yeast6"),
        "VAC": ms("yeast-1-4-5-8_vs_7"), "POX": ms("yeast-2_vs_8"),
        "CYT": ms("yeast-2_vs_4", "negative"),
    }
    erl = ms("yeast-0-2-5-6_vs_3-7-8-9")
    for k in ("ME1", "VAC", "POX"):
        erl.subtract(cls[k])
    if any(v < 0 for v in erl.values()):
        raise RuntimeError("inconsistent ERL derivation")
    cls["ERL"] = +erl
    rest = Counter(f for f, _ in universe)
    for v in cls.values():
        rest.subtract(v)
    if any(v < 0 for v in rest.values()):
        raise RuntimeError("class multisets overlap")
    cls["MIT"] = +rest
    sizes = {k: sum(v.values()) for k, v in cls.items()}
    if sizes != YEAST_SIZES:
        raise RuntimeError(f"unexpected class sizes {sizes}")

    remaining = {k: Counter(v) for k, v in cls.items()}
    rows = []
    for feats, _ in universe:
        for label in YEAST_SIZES:
            if remaining[label][feats] > 0:
                remaining[label][feats] -= 1
                rows.append((feats, label))
                break
    return names[:-1], rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "datasets", type=Path)
    ap.add_argument("--wheel", type=Path, help="pre-downloaded imbalanced_databases wheel")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        wheel = args.wheel
        if wheel is None:
            subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                            "imbalanced-databases==0.1.1", "-d", str(tmp)], check=True)
            wheel = next(tmp.glob("imbalanced_databases-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            zf.extractall(tmp / "x")
        root = tmp / "x" / "imbalanced_databases" / "data"

        for name in ("pima", "haberman"):
            cols, rows = read_keel(root / name / f"{name}.dat")
            write_csv(args.out / f"{name}.csv", cols[:-1] + ["class"], rows)
            print(name, len(rows), dict(Counter(r[1] for r in rows)))
        cols, rows = rebuild_yeast(root)
        write_csv(args.out / "yeast.csv", cols + ["class"], rows)
        print("yeast", len(rows), dict(Counter(r[1] for r in rows)))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regenerate the golden CLI artefacts under tests/golden/.

Each case runs the installed command-line entry point with --out pointing at
its golden directory, so the checked-in bytes are exactly what a user would
get.  Run from the repository root after any intentional output change, then
review the diff before committing.
"""
from pathlib import Path
import shutil
import sys

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from coventropy import CellMap, Cover, DynamicalModel, cycle_space, save_model
from coventropy.cli import main

DATA = ROOT / "tests" / "data"
GOLDEN = ROOT / "tests" / "golden"

CASES = {
    "sft_golden": ["sft", "--matrix", "golden", "--n-max", "8"],
    "cover_c5arcs": ["cover", "--model", str(DATA / "c5arcs.json"),
                     "--n-max", "4", "--exact-threshold", "0"],
    "l1_rademacher": ["l1", "--family", "rademacher", "--m", "3", "--depth", "2"],
    "sandwich_golden": ["sandwich", "--matrix", "golden", "--n", "5"],
    "qd_matrix_shift": ["qd", "--matrix-shift", "2", "--n-max", "5"],
    "sft_full3_json": ["sft", "--matrix", "full3", "--n-max", "6", "--format", "json"],
}


def write_fixture_model() -> None:
    space = cycle_space(5)
    arcs = Cover(space, tuple(frozenset({i, (i + 1) % 5}) for i in range(5)))
    rotation = CellMap.from_function(space, lambda x: (x + 1) % 5)
    DATA.mkdir(parents=True, exist_ok=True)
    save_model(DynamicalModel(space, arcs, rotation), DATA / "c5arcs.json")


def regenerate() -> None:
    write_fixture_model()
    for name, argv in CASES.items():
        out = GOLDEN / name
        if out.exists():
            shutil.rmtree(out)
        code = main(argv + ["--out", str(out)])
        if code != 0:
            raise SystemExit(f"{name}: exit code {code}")
        print(f"{name}: {sorted(p.name for p in out.iterdir())}")


if __name__ == "__main__":
    regenerate()

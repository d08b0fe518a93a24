"""Quantum vs classical ensembles and a two-peak run, written as CSV.

    python scripts/ensembles.py [OUT_DIR]

Writes OUT_DIR/{quantum,classical,cat}/ via the CLI and prints fidelities.
"""

import json
import sys
from pathlib import Path

from epr_teleport.cli import main as cli

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run(out: Path):
    jobs = {
        "quantum": ["teleport", "--config", str(CONFIGS / "li_design.json")],
        "classical": ["classical", "--config", str(CONFIGS / "li_design.json")],
        "cat": ["cat", "--config", str(CONFIGS / "li_cat.json")],
    }
    for name, argv in jobs.items():
        code = cli(argv + ["--out", str(out / name)])
        if code == 1:
            raise SystemExit(f"{name} run failed")
    print()
    for name in jobs:
        s = json.loads((out / name / "summary.json").read_text())
        print(f"{name:<10} F_est = {s['fidelity_estimate']:.4f}   F_max = {s['f_max']:.4f}")
    c = json.loads((out / "cat" / "summary.json").read_text())["cat"]
    print(f"fringe contrast ratio {c['contrast_ratio']:.4f} "
          f"(expected {c['contrast_ratio_expected']:.4f})")


if __name__ == "__main__":
    run(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/ensembles"))

"""Scan the collision speed and show where the resolution formula breaks down.

    python scripts/sweep_velocity.py
"""

from pathlib import Path

import numpy as np

from epr_teleport.config import config_from_dict, load_config
from epr_teleport.teleport import sweep

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "li_design.json"


def main():
    raw = load_config(CONFIG)
    raw["events"] = 10_000
    cfg = config_from_dict(raw)
    print(f"{'v_y [m/s]':>10} {'valid':>6} {'product':>9} {'F_max':>7} {'F_est':>7}")
    for row in sweep(cfg, "v_y", np.linspace(150, 1200, 15)):
        print(f"{row.value:10.0f} {str(row.valid):>6} {row.product_over_hbar:9.4f} "
              f"{row.f_max:7.4f} {row.fidelity_estimate:7.4f}")


if __name__ == "__main__":
    main()

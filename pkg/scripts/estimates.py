"""Print the headline design numbers for the Li+ and molecular-ion sources.

    python scripts/estimates.py
"""

from epr_teleport.collision import (
    collision_range,
    momentum_resolution,
    position_resolution,
    validity_threshold,
)
from epr_teleport.physconst import species_preset
from epr_teleport.source import SourceParams, com_temperature, epr_pair_state, squeezing_parameter
from epr_teleport.teleport import NoiseBudget, error_budget, f_max

D, DD_V, DD, V_Y = 300e-9, 0.1e-9, 1e-9, 300.0
P_INSTR_SPEED = 1e-3


def main():
    li = species_preset("Li+")
    src = SourceParams(li, D=D, dd_v=DD_V, dd=DD, L=1e-6)
    epr = epr_pair_state(src)
    dx = position_resolution(li, D, DD_V, V_Y)
    dp = momentum_resolution(D, li.mass * P_INSTR_SPEED)
    b = error_budget(epr.sigma_xdiff, epr.sigma_psum, NoiseBudget(dx, dp))

    print(f"R_col (Li+, {V_Y:.0f} m/s)       {collision_range(li, V_Y) * 1e9:8.2f} nm")
    print(f"threshold speed               {validity_threshold(li, D) / li.mass:8.1f} m/s")
    print(f"position resolution           {dx * 1e9:8.2f} nm")
    print(f"COM velocity spread           {epr.sigma_psum / li.mass * 1e3:8.2f} mm/s")
    print(f"squeezing parameter           {squeezing_parameter(D, DD):8.1f}")
    print(f"dxT dpT / hbar                {b.product_over_hbar:8.4f}")
    print(f"F_max                         {f_max(b.product_over_hbar):8.4f}")
    for name in ("H2+", "Li2-"):
        t = com_temperature(species_preset(name), D)
        print(f"COM temperature {name:<5}         {t * 1e6:8.3f} uK")


if __name__ == "__main__":
    main()

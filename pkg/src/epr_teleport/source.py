"""Dissociation source of position/momentum-entangled fragment pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physconst import BOLTZMANN, HBAR, IonSpecies
from .phasespace import PhasePoint

__all__ = [
    "SourceParams",
    "EprPairState",
    "com_temperature",
    "squeezing_parameter",
    "spread_at",
    "epr_pair_state",
    "sample_epr_pair",
    "design_check",
    "MUCH_LESS_FACTOR",
    "SIMILAR_FACTOR",
]

_RTOL = 1e-12

# Thresholds used to turn "much less than" and "of the order of" into checks.
MUCH_LESS_FACTOR = 5.0
SIMILAR_FACTOR = 3.0


@dataclass(frozen=True)
class SourceParams:
    """Source geometry, all lengths in metres.

    D        COM wavepacket size (std of x0 + x1)
    dd_v     vibrational internuclear spread before dissociation
    dd       internuclear spread at completion of dissociation
    dv01     spread of the fragments' velocity difference, m/s
    L        aperture size of the dissociation region
    v_z      beam speed, m/s (bookkeeping only)
    lens_resolution
             focusing-lens floor added in quadrature to dd at the collision
    """

    species: IonSpecies
    D: float
    dd_v: float
    dd: float
    L: float
    dv01: float = 0.0
    v_z: float = 0.0
    lens_resolution: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("source violates D > 0")
        if not self.dd_v > 0:
            raise ValueError("source violates dd_v > 0")
        if not self.dd >= self.dd_v:
            raise ValueError("source violates dd_v <= dd")
        if not self.L > 0:
            raise ValueError("source violates L > 0")
        if not self.dv01 >= 0:
            raise ValueError("source violates dv01 >= 0")
        if not self.lens_resolution >= 0:
            raise ValueError("source violates lens_resolution >= 0")

    @property
    def effective_dd(self) -> float:
        return math.hypot(self.dd, self.lens_resolution)


@dataclass(frozen=True)
class EprPairState:
    """Collective-mode spreads of the fragment pair.

    sigma_xdiff  std of x0 - x1      sigma_pdiff  std of p0 - p1
    sigma_xsum   std of x0 + x1      sigma_psum   std of p0 + p1
    """

    sigma_xdiff: float
    sigma_xsum: float
    sigma_psum: float
    sigma_pdiff: float

    def __post_init__(self):
        spreads = (self.sigma_xdiff, self.sigma_xsum, self.sigma_psum, self.sigma_pdiff)
        if not all(s > 0 for s in spreads):
            raise ValueError("EPR spreads must be positive")
        lim = HBAR * (1 - _RTOL)
        if self.sigma_xdiff * self.sigma_pdiff < lim:
            raise ValueError("EPR state violates sigma_xdiff * sigma_pdiff >= hbar")
        if self.sigma_xsum * self.sigma_psum < lim:
            raise ValueError("EPR state violates sigma_xsum * sigma_psum >= hbar")
        if self.sigma_xdiff > self.sigma_xsum:
            raise ValueError("EPR state violates sigma_xdiff <= sigma_xsum")

    @property
    def epr_product(self) -> float:
        """Separation spread times COM momentum spread, in J s."""
        return self.sigma_xdiff * self.sigma_psum

    @property
    def epr_product_over_hbar(self) -> float:
        return self.epr_product / HBAR

    @property
    def below_heisenberg(self) -> bool:
        """Strictly below hbar/2, the single-pair Heisenberg bound."""
        return self.epr_product < 0.5 * HBAR


def com_temperature(species: IonSpecies, D: float) -> float:
    """Temperature (K) needed for a COM wavepacket of size ``D``: hbar^2/(M k_B D^2)."""
    if not D > 0:
        raise ValueError("com_temperature requires D > 0")
    return HBAR**2 / (species.molecule_mass * BOLTZMANN * D**2)


def squeezing_parameter(D: float, dd: float) -> float:
    if not (D > 0 and dd > 0):
        raise ValueError("squeezing_parameter requires D > 0 and dd > 0")
    return D / dd


def spread_at(dd0: float, dv01: float, t: float) -> float:
    """Free spreading of the internuclear separation after time ``t``."""
    if t < 0:
        raise ValueError("spread_at requires t >= 0")
    return math.hypot(dd0, dv01 * t)


def epr_pair_state(params: SourceParams) -> EprPairState:
    dd = params.effective_dd
    return EprPairState(
        sigma_xdiff=dd,
        sigma_xsum=params.D,
        sigma_psum=HBAR / params.D,
        sigma_pdiff=HBAR / dd,
    )


def sample_epr_pair(
    state: EprPairState, rng: np.random.Generator, n: int | None = None
) -> tuple[PhasePoint, PhasePoint]:
    """Sample fragments 0 and 1 through their four independent collective modes.

    Returns scalar points when ``n`` is None, else array-valued points.
    """
    shape = 4 if n is None else (4, n)
    z = rng.standard_normal(shape)
    xdiff = state.sigma_xdiff * z[0]
    xsum = state.sigma_xsum * z[1]
    psum = state.sigma_psum * z[2]
    pdiff = state.sigma_pdiff * z[3]
    p0 = PhasePoint(0.5 * (xsum + xdiff), 0.5 * (psum + pdiff))
    p1 = PhasePoint(0.5 * (xsum - xdiff), 0.5 * (psum - pdiff))
    if n is None:
        p0 = PhasePoint(float(p0.x), float(p0.p))
        p1 = PhasePoint(float(p1.x), float(p1.p))
    return p0, p1


def design_check(params: SourceParams, collision) -> list[str]:
    """Geometry sanity checks; returns one message per violated condition.

    ``collision`` is a :class:`~epr_teleport.collision.CollisionParams`.
    """
    from .collision import collision_range

    warnings = []
    r_col = collision_range(collision.species, collision.v_y)
    dd_c, D = collision.dd_c, params.D
    if not dd_c * MUCH_LESS_FACTOR <= r_col:
        warnings.append(
            f"Δd_c ≪ R_col violated (Δd_c = {dd_c:.3g} m, R_col = {r_col:.3g} m)"
        )
    if not dd_c * MUCH_LESS_FACTOR <= D:
        warnings.append(f"Δd_c ≪ D violated (Δd_c = {dd_c:.3g} m, D = {D:.3g} m)")
    if not max(r_col, D) <= SIMILAR_FACTOR * min(r_col, D):
        warnings.append(f"R_col ∼ D violated (R_col = {r_col:.3g} m, D = {D:.3g} m)")
    if not D <= params.L:
        warnings.append(f"D ≲ L violated (D = {D:.3g} m, L = {params.L:.3g} m)")
    return warnings

"""Coulomb-collision Bell measurement of (x1 - x2, p1 + p2)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physconst import EPSILON0, HBAR, IonSpecies
from .phasespace import PhasePoint

__all__ = [
    "CollisionParams",
    "MeasurementRecord",
    "CollisionValidityError",
    "DEFAULT_INSTRUMENT_SPEED",
    "collision_range",
    "deflection_angle",
    "invert_deflection",
    "validity_threshold",
    "position_resolution",
    "momentum_resolution",
    "measure",
]

# Raman-Doppler readout precision of the momentum sum, expressed as a speed.
DEFAULT_INSTRUMENT_SPEED = 1e-3  # m/s


class CollisionValidityError(ValueError):
    def __init__(self, p_y: float, threshold: float):
        self.p_y = p_y
        self.threshold = threshold
        super().__init__(
            f"resolution formula invalid: p_y = {p_y:.4g} kg m/s is below the "
            f"threshold {threshold:.4g} kg m/s"
        )


@dataclass(frozen=True)
class CollisionParams:
    """Both colliding particles share ``species``; ``v_y`` is each one's approach
    speed, ``dd_c`` the y-z wavepacket extent and ``p_instr`` the instrumental
    momentum resolution (kg m/s)."""

    species: IonSpecies
    v_y: float
    dd_c: float
    p_instr: float

    def __post_init__(self):
        if not self.v_y > 0:
            raise ValueError("collision violates v_y > 0")
        if not self.dd_c > 0:
            raise ValueError("collision violates dd_c > 0")
        if not self.p_instr >= 0:
            raise ValueError("collision violates p_instr >= 0")

    @classmethod
    def with_instrument_speed(
        cls, species: IonSpecies, v_y: float, dd_c: float,
        instrument_speed: float = DEFAULT_INSTRUMENT_SPEED,
    ) -> CollisionParams:
        return cls(species, v_y, dd_c, species.mass * instrument_speed)

    @property
    def p_y(self) -> float:
        return self.species.mass * self.v_y


@dataclass(frozen=True)
class MeasurementRecord:
    x_minus_meas: float | np.ndarray
    p_plus_meas: float | np.ndarray
    theta: float | np.ndarray


def _require_charged(species: IonSpecies):
    if not species.is_charged:
        raise ValueError(f"{species.name} is neutral; Coulomb collision undefined")


def collision_range(species: IonSpecies, v_y: float) -> float:
    """R_col = m q^2 / (4 pi eps0 p_y^2): impact parameter of 90 degree deflection."""
    _require_charged(species)
    if not v_y > 0:
        raise ValueError("collision_range requires v_y > 0")
    p_y = species.mass * v_y
    return species.mass * species.charge**2 / (4 * math.pi * EPSILON0 * p_y**2)


def deflection_angle(x_minus, r_col: float):
    if not r_col > 0:
        raise ValueError("r_col must be positive")
    return math.pi - 2.0 * np.arctan(np.divide(x_minus, r_col))


def invert_deflection(theta, r_col: float):
    if not r_col > 0:
        raise ValueError("r_col must be positive")
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= 0) | (theta >= 2 * math.pi)):
        raise ValueError("theta must lie in the open interval (0, 2 pi)")
    out = r_col * np.tan(0.5 * (math.pi - theta))
    return float(out) if out.ndim == 0 else out


def validity_threshold(species: IonSpecies, D: float) -> float:
    """Smallest p_y (kg m/s) for which the position-resolution estimate holds."""
    _require_charged(species)
    if not D > 0:
        raise ValueError("validity_threshold requires D > 0")
    return math.sqrt(species.mass * species.charge**2 / (4 * math.pi * EPSILON0 * D))


def position_resolution(
    species: IonSpecies, D: float, dd_v: float, v_y: float, check: bool = True
) -> float:
    """Resolution (m) of x1 - x2 inferred from the deflection angle.

    Limited by the relative-momentum spread hbar/dd_v. Raises
    :class:`CollisionValidityError` below :func:`validity_threshold` unless
    ``check`` is false.
    """
    _require_charged(species)
    if not (D > 0 and dd_v > 0 and v_y > 0):
        raise ValueError("position_resolution requires D, dd_v, v_y > 0")
    p_y = species.mass * v_y
    if check:
        threshold = validity_threshold(species, D)
        if p_y < threshold:
            raise CollisionValidityError(p_y, threshold)
    return (
        math.pi * EPSILON0 * HBAR * D**2 * p_y
        / (2 * species.charge**2 * species.mass * dd_v)
    )


def momentum_resolution(D: float, p_instr: float) -> float:
    """Momentum-sum resolution: COM spread hbar/D and readout noise in quadrature."""
    if not D > 0:
        raise ValueError("momentum_resolution requires D > 0")
    return math.hypot(HBAR / D, p_instr)


def measure(
    p1: PhasePoint, p2: PhasePoint, params: CollisionParams, noise, rng: np.random.Generator
) -> MeasurementRecord:
    """Noisy joint readout of x_- = x1 - x2 and p_+ = p1 + p2.

    ``noise`` supplies ``dx_meas`` and ``dp_meas``. Pre-collision momenta are
    used for p_+ since the sum is conserved; theta is the noiseless angle.
    """
    x_minus = np.subtract(p1.x, p2.x)
    p_plus = np.add(p1.p, p2.p)
    n = np.size(x_minus)
    z = rng.standard_normal((2, n))
    if np.ndim(x_minus) == 0:
        z = z[:, 0]
    theta = deflection_angle(x_minus, collision_range(params.species, params.v_y))
    return MeasurementRecord(
        x_minus + noise.dx_meas * z[0],
        p_plus + noise.dp_meas * z[1],
        theta,
    )

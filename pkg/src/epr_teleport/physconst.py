"""Physical constants (SI, CODATA 2018) and ion/molecule species presets."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "HBAR",
    "EPSILON0",
    "ELEMENTARY_CHARGE",
    "BOLTZMANN",
    "ATOMIC_MASS_UNIT",
    "IonSpecies",
    "UnknownSpeciesError",
    "species_preset",
    "SPECIES_NAMES",
]


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float  # J s
    epsilon0: float  # F/m
    elementary_charge: float  # C
    boltzmann: float  # J/K
    atomic_mass_unit: float  # kg


# CODATA 2018. hbar, e and k_B are exact in the revised SI; epsilon0 and u are
# measured (relative standard uncertainty 1.5e-10 and 3.0e-10).
CONSTANTS = PhysicalConstants(
    hbar=1.054571817e-34,
    epsilon0=8.8541878128e-12,
    elementary_charge=1.602176634e-19,
    boltzmann=1.380649e-23,
    atomic_mass_unit=1.66053906660e-27,
)

HBAR = CONSTANTS.hbar
EPSILON0 = CONSTANTS.epsilon0
ELEMENTARY_CHARGE = CONSTANTS.elementary_charge
BOLTZMANN = CONSTANTS.boltzmann
ATOMIC_MASS_UNIT = CONSTANTS.atomic_mass_unit

# Neutral-atom masses in u (AME2016). Electron masses are neglected for ions.
_MASS_H1_U = 1.00782503223
_MASS_LI7_U = 7.0160034366


class UnknownSpeciesError(KeyError):
    pass


@dataclass(frozen=True)
class IonSpecies:
    """A dissociation fragment together with its parent homonuclear diatom.

    ``mass`` is the fragment mass m, ``molecule_mass`` the diatom mass M (both
    kg) and ``charge`` the signed fragment charge q in coulomb.
    """

    name: str
    mass: float
    molecule_mass: float
    charge: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"{self.name}: fragment mass must satisfy m > 0")
        if not self.molecule_mass >= self.mass:
            raise ValueError(f"{self.name}: molecule mass must satisfy M >= m")
        n_e = self.charge / ELEMENTARY_CHARGE
        if abs(n_e - round(n_e)) > 1e-9:
            raise ValueError(
                f"{self.name}: |q| must be an integer multiple of e (got {n_e:g} e)"
            )

    @property
    def charge_number(self) -> int:
        return int(round(self.charge / ELEMENTARY_CHARGE))

    @property
    def is_charged(self) -> bool:
        return self.charge_number != 0

    @classmethod
    def homonuclear(cls, name: str, atom_mass_u: float, charge_number: int) -> IonSpecies:
        m = atom_mass_u * ATOMIC_MASS_UNIT
        return cls(name, m, 2.0 * m, charge_number * ELEMENTARY_CHARGE)


_PRESETS = {
    "H2+": (_MASS_H1_U, +1),
    "Li2-": (_MASS_LI7_U, -1),
    "Li+": (_MASS_LI7_U, +1),
}

SPECIES_NAMES = tuple(_PRESETS)


def species_preset(name: str) -> IonSpecies:
    """Look up a species preset by name (``"H2+"``, ``"Li2-"``, ``"Li+"``).

    Lithium presets use the 7Li isotope. The diatom mass is twice the fragment
    mass for every preset.
    """
    try:
        mass_u, z = _PRESETS[name]
    except KeyError:
        raise UnknownSpeciesError(
            f"unknown species {name!r}; known: {', '.join(SPECIES_NAMES)}"
        ) from None
    return IonSpecies.homonuclear(name, mass_u, z)

"""
Pinned physical constants and the atomic species registry.

Values are CODATA 2018 and are fixed here rather than read from a library so
that reference couplings are reproducible across library versions.
"""

from typing import Dict, NamedTuple

import numpy as np

HBAR = 1.054571817e-34  # J s
PLANCK = 2.0 * np.pi * HBAR  # J s
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

NANOMETER = 1e-9
KILOHERTZ = 1e3


class Species(NamedTuple):
    """An atomic species with its default background scattering length"""
    name: str
    mass_u: float
    a_scat_nm: float

    @property
    def mass_kg(self) -> float:
        return self.mass_u * ATOMIC_MASS_UNIT


SPECIES: Dict[str, Species] = {
    "Rb87": Species(name="Rb87", mass_u=86.909180, a_scat_nm=5.3),
}


def get_species(name: str) -> Species:
    """Look up a species by name"""
    try:
        return SPECIES[name]
    except KeyError:
        known = ", ".join(sorted(SPECIES))
        raise ValueError(f"Unknown species: {name}. Supported: {known}")

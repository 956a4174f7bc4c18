"""
latticeeft - effective multi-body interactions of bosons in a deep optical-lattice site

Renormalized second-order sums over the vibrational modes of one harmonic
well give the induced three-body energy; the resulting effective Hamiltonian
drives the collapse and revival of on-site coherent states.
"""

__version__ = '0.1.0'

from .config import settings
from .models import CouplingSet, PhysicalParams
from .services.couplings import derive_couplings, interaction_energy
from .services.renorm import beta, beta_closed_form

__all__ = [
    'settings',
    'CouplingSet',
    'PhysicalParams',
    'derive_couplings',
    'interaction_energy',
    'beta',
    'beta_closed_form',
]

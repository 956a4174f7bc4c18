"""
Physical parameters to dimensionless couplings and effective on-site energies.
"""

import logging
import math
from typing import List, Optional, Union

import numpy as np

from ..config import settings
from ..constants import KILOHERTZ, NANOMETER, PLANCK, get_species
from ..models import CouplingSet, PhysicalParams
from .renorm import beta_closed_form

logger = logging.getLogger(__name__)


class PoleProximityError(ValueError):
    """The effective-range correction sits on its pole"""


def physical_params(
    species: str = "Rb87",
    omega_khz: float = 30.0,
    a_scat_nm: Optional[float] = None,
    r_e_nm: float = 0.0,
    u3_intrinsic_hz: float = 0.0,
) -> PhysicalParams:
    """PhysicalParams from laboratory units; a_scat defaults to the species value"""
    if omega_khz <= 0:
        raise ValueError(f"Trap frequency must be positive, got {omega_khz} kHz")
    entry = get_species(species)
    a_nm = entry.a_scat_nm if a_scat_nm is None else a_scat_nm
    return PhysicalParams(
        atom_mass=entry.mass_kg,
        a_scat=a_nm * NANOMETER,
        omega=2.0 * np.pi * omega_khz * KILOHERTZ,
        r_e=r_e_nm * NANOMETER,
        u3_intrinsic=u3_intrinsic_hz * PLANCK,
    )


def _coupling_warnings(xi: float) -> List[str]:
    warnings = []
    if abs(xi) > settings.coupling_warn_xi:
        message = f"|xi| = {abs(xi):.4f} exceeds {settings.coupling_warn_xi}; perturbation theory is unreliable"
        logger.warning(message)
        warnings.append(message)
    return warnings


def couplings_from_xi(
    xi: float,
    hbar_omega: float,
    beta: Optional[float] = None,
    u3_intrinsic: float = 0.0,
) -> CouplingSet:
    """CouplingSet from the dimensionless parameter directly"""
    beta = beta_closed_form() if beta is None else beta
    return CouplingSet(
        xi=xi,
        u2=xi * hbar_omega,
        u3=u3_intrinsic - beta * xi * xi * hbar_omega,
        hbar_omega=hbar_omega,
        beta=beta,
        validity_warnings=_coupling_warnings(xi),
    )


def derive_couplings(p: PhysicalParams, beta: Optional[float] = None, k: Optional[float] = None) -> CouplingSet:
    """xi = sqrt(2/pi) a / sigma, U2 = xi hbar omega, U3 = U3_intrinsic - beta xi^2 hbar omega.

    When k is given the scattering length is first replaced by its
    effective-range corrected value at wavevector k.
    """
    a = p.a_scat
    if k is not None and a != 0.0:
        a = effective_scattering_length(a, p.r_e, k)
    xi = math.sqrt(2.0 / math.pi) * a / p.sigma
    couplings = couplings_from_xi(xi, p.hbar_omega, beta, p.u3_intrinsic)
    logger.info(
        f"sigma={p.sigma / NANOMETER:.4f}nm xi={xi:.6f} U2/h={couplings.u2_hz:.3f}Hz U3/h={couplings.u3_hz:.3f}Hz"
    )
    return couplings


def check_validity(n: int, c: CouplingSet) -> Optional[str]:
    """Warning text when n |xi| leaves the single-mode validity domain"""
    if n * abs(c.xi) > settings.validity_n_xi:
        message = f"n * |xi| = {n * abs(c.xi):.3f} exceeds {settings.validity_n_xi} for n = {n}"
        logger.warning(message)
        return message
    return None


def interaction_energy(n: Union[int, np.ndarray], c: CouplingSet) -> Union[float, np.ndarray]:
    """E(n) = U2 n(n-1)/2 + U3 n(n-1)(n-2)/6"""
    if np.any(np.asarray(n) < 0):
        raise ValueError("Atom number must be non-negative")
    if np.isscalar(n):
        check_validity(int(n), c)
    return c.u2 * n * (n - 1) / 2.0 + c.u3 * n * (n - 1) * (n - 2) / 6.0


def energy_gap(n: Union[int, np.ndarray], c: CouplingSet) -> Union[float, np.ndarray]:
    """E(n+1) - E(n) = n U2 + n(n-1) U3 / 2"""
    if np.any(np.asarray(n) < 0):
        raise ValueError("Atom number must be non-negative")
    return n * c.u2 + n * (n - 1) * c.u3 / 2.0


def effective_scattering_length(a_scat: float, r_e: float, k: float) -> float:
    """a_eff = 1 / (1/a - r_e k^2 / 2)"""
    if a_scat == 0.0:
        raise ValueError("Effective-range correction needs a non-zero scattering length")
    inverse = 1.0 / a_scat
    denominator = inverse - 0.5 * r_e * k * k
    if abs(denominator) < 1e-6 * abs(inverse):
        raise PoleProximityError(
            f"1/a = {inverse:.6e} is within 1e-6 of r_e k^2 / 2; effective scattering length diverges"
        )
    return 1.0 / denominator


def extract_intrinsic_u3(u3_measured: float, c: CouplingSet) -> float:
    """Intrinsic U3 = measured U3 - induced part (-beta xi^2 hbar omega)"""
    beta = beta_closed_form() if c.beta is None else c.beta
    return u3_measured + beta * c.xi * c.xi * c.hbar_omega

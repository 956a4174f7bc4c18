"""
Exact diagonalization of the multimode contact Hamiltonian in a truncated,
number-conserving bosonic Fock space. Used as an independent check of the
second-order sums.

The basis holds n atoms in the modes with E_mu <= cutoff, restricted to
configurations whose unperturbed energy is <= cutoff and whose quanta have
even parity on every axis (the sector of the all-ground state). With this
truncation the second-order part of the exact energy is exactly the
cutoff sum over E_mu + E_nu <= cutoff. Energies are in units of hbar omega.
"""

import logging
import math
import time
from collections import Counter
from itertools import combinations_with_replacement
from typing import Dict, List, Tuple

import numpy as np
from scipy.linalg import eigh

from ..config import settings
from .oscillator import K3d_four, Mode, enumerate_modes
from .renorm import raw_second_order_shift

logger = logging.getLogger(__name__)

Configuration = Tuple[int, ...]  # sorted mode indices, one entry per atom


class FockDimensionError(ValueError):
    """The truncated Fock space exceeds the configured bound"""


class ExactDiagonalizer:
    """Builds H0 + H2 on the truncated Fock space and tracks the ground branch"""

    def __init__(self, max_dimension: int = None):
        self.max_dimension = settings.max_fock_dimension if max_dimension is None else max_dimension

    def basis(self, n_atoms: int, cutoff: int) -> Tuple[List[Mode], List[Configuration]]:
        """Modes and configurations of the truncated sector, in canonical order"""
        if n_atoms < 1:
            raise ValueError(f"Need at least one atom, got {n_atoms}")
        if cutoff < 1:
            raise ValueError(f"Cutoff must be at least 1, got {cutoff}")
        modes = enumerate_modes(cutoff)
        configurations = []
        for combo in combinations_with_replacement(range(len(modes)), n_atoms):
            if sum(modes[i].energy for i in combo) > cutoff:
                continue
            if any(sum(modes[i][axis] for i in combo) % 2 for axis in range(3)):
                continue
            configurations.append(combo)
        return modes, configurations

    def hamiltonian(self, n_atoms: int, cutoff: int, xi: float) -> Tuple[np.ndarray, List[Configuration]]:
        """Dense H0 + H2 with bare coupling U2 = xi hbar omega and no counter-term"""
        modes, configurations = self.basis(n_atoms, cutoff)
        dim = len(configurations)
        if dim > self.max_dimension:
            raise FockDimensionError(f"Fock dimension {dim} exceeds the configured bound {self.max_dimension}")
        logger.debug(f"Fock space for {n_atoms} atoms at cutoff {cutoff}: dimension {dim}")

        index: Dict[Configuration, int] = {c: i for i, c in enumerate(configurations)}
        energies = [mode.energy for mode in modes]

        # ordered creation pairs grouped by the energy they add
        creation_pairs: List[Tuple[int, int, int]] = sorted(
            ((energies[m] + energies[v], m, v) for m in range(len(modes)) for v in range(len(modes))
             if energies[m] + energies[v] <= cutoff),
        )

        h = np.zeros((dim, dim))
        for col, config in enumerate(configurations):
            occupation = Counter(config)
            h[col, col] += sum(energies[i] for i in config)

            # annihilate lam then sig, create nu then mu
            for lam, n_lam in occupation.items():
                after_lam = occupation.copy()
                after_lam[lam] -= 1
                for sig, n_sig in after_lam.items():
                    if n_sig == 0:
                        continue
                    amplitude = math.sqrt(n_lam) * math.sqrt(n_sig)
                    remaining = after_lam.copy()
                    remaining[sig] -= 1
                    # pairs above the leftover energy leave the basis
                    budget = cutoff - sum(energies[i] * c for i, c in remaining.items())
                    for pair_energy, mu, nu in creation_pairs:
                        if pair_energy > budget:
                            break
                        k = K3d_four(modes[mu], modes[nu], modes[sig], modes[lam])
                        if k == 0.0:
                            continue
                        target = remaining.copy()
                        factor = math.sqrt(target[nu] + 1)
                        target[nu] += 1
                        factor *= math.sqrt(target[mu] + 1)
                        target[mu] += 1
                        key = tuple(sorted(target.elements()))
                        # targets outside the parity-filtered basis are dropped
                        row = index.get(key)
                        if row is not None:
                            h[row, col] += 0.5 * xi * k * amplitude * factor
        return h, configurations

    def ground_energy(self, n_atoms: int, cutoff: int, xi: float) -> float:
        """Eigenvalue of the branch with maximal overlap with all atoms in the ground mode"""
        if cutoff > settings.exact_diag_max_cutoff:
            raise ValueError(f"Cutoff {cutoff} exceeds the exact-diagonalization bound {settings.exact_diag_max_cutoff}")
        if abs(xi) > settings.exact_diag_max_xi:
            raise ValueError(f"|xi| must not exceed {settings.exact_diag_max_xi}, got {xi}")
        start_time = time.time()

        h, configurations = self.hamiltonian(n_atoms, cutoff, xi)
        asymmetry = float(np.max(np.abs(h - h.T))) if h.size else 0.0
        if asymmetry > 1e-12:
            logger.warning(f"Hamiltonian asymmetry {asymmetry:.3e}")
        values, vectors = eigh(h)
        reference = configurations.index(tuple([0] * n_atoms))
        branch = int(np.argmax(np.abs(vectors[reference, :])))

        elapsed = (time.time() - start_time) * 1000
        logger.info(
            f"ED n={n_atoms} cutoff={cutoff} xi={xi}: E={values[branch]:.12e} "
            f"(dim {len(configurations)}, overlap {abs(vectors[reference, branch]):.6f}) in {elapsed:.2f}ms"
        )
        return float(values[branch])


# Global service instance
exact_diagonalizer = ExactDiagonalizer()


def exact_diag_oracle(n_atoms: int, cutoff: int, xi: float) -> float:
    """Exact energy of n_atoms ground-mode atoms, in units of hbar omega"""
    return exact_diagonalizer.ground_energy(n_atoms, cutoff, xi)


def second_order_prediction(n_atoms: int, cutoff: int, xi: float) -> float:
    """First-order energy plus the raw second-order shift, in units of hbar omega"""
    return xi * n_atoms * (n_atoms - 1) / 2.0 + raw_second_order_shift(n_atoms, cutoff, xi)


def three_body_from_spectrum(cutoff: int, xi: float) -> float:
    """E(3) - 3 E(2) from exact diagonalization; equals delta_u3 up to O(xi^3)"""
    return exact_diag_oracle(3, cutoff, xi) - 3.0 * exact_diag_oracle(2, cutoff, xi)

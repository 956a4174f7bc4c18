"""
Vibrational modes of an isotropic 3D harmonic well and the dimensionless
four-wavefunction overlaps K.

K is normalized so that K_0000 = 1. Each 3D element factorizes into per-axis
elements k(m, n) = sqrt(2 pi) sigma * integral(phi_m phi_n phi_0^2 dx), which
are independent of the oscillator length sigma.
"""

import logging
import math
from functools import lru_cache
from typing import Dict, Iterator, List, NamedTuple, Tuple

import numpy as np
from scipy.special import gammaln, roots_hermite

from ..config import settings

logger = logging.getLogger(__name__)


class Mode(NamedTuple):
    """Vibrational quanta per axis"""
    mu_x: int
    mu_y: int
    mu_z: int

    @property
    def energy(self) -> int:
        """Energy in units of hbar omega (ground mode has energy 0)"""
        return self.mu_x + self.mu_y + self.mu_z


GROUND = Mode(0, 0, 0)


def energy_in_quanta(mode: Mode) -> int:
    return mode.mu_x + mode.mu_y + mode.mu_z


@lru_cache(maxsize=None)
def k1d(m: int, n: int) -> float:
    """Closed-form 1D element k(m, n).

    Integrating the Hermite product against the combined Gaussian exp(-2u^2)
    term by term gives
        k(m, n) = (-1)^((m-n)/2) Gamma((m+n+1)/2) / sqrt(pi m! n!)
                = (-1)^((m-n)/2) (2s)! / (4^s s! sqrt(m! n!)),  s = (m+n)/2,
    and zero when m + n is odd.
    """
    if m < 0 or n < 0:
        raise ValueError(f"Quanta must be non-negative, got ({m}, {n})")
    if (m + n) % 2:
        return 0.0
    s = (m + n) // 2
    sign = -1.0 if ((m - n) // 2) % 2 else 1.0
    if max(m, n) <= settings.exact_factorial_limit:
        ratio = math.factorial(2 * s) / (4**s * math.factorial(s))
        return sign * ratio / math.sqrt(math.factorial(m) * math.factorial(n))
    log_value = (
        gammaln(2 * s + 1)
        - s * math.log(4.0)
        - gammaln(s + 1)
        - 0.5 * (gammaln(m + 1) + gammaln(n + 1))
    )
    return sign * math.exp(log_value)


@lru_cache(maxsize=32)
def _hermite_function_table(max_order: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized Hermite polynomials H_k(x) / sqrt(2^k k!) at x = v / sqrt(2).

    v and w are the Gauss-Hermite nodes and weights for exp(-v^2); the
    substitution absorbs all four Gaussians exp(-u^2 / 2) into one weight.
    """
    v, w = roots_hermite(nodes)
    x = v / math.sqrt(2.0)
    table = np.zeros((max_order + 1, nodes))
    table[0] = 1.0
    if max_order >= 1:
        table[1] = math.sqrt(2.0) * x
    for k in range(1, max_order):
        table[k + 1] = math.sqrt(2.0 / (k + 1)) * x * table[k] - math.sqrt(k / (k + 1)) * table[k - 1]
    table.setflags(write=False)
    w.setflags(write=False)
    return table, w


def k1d_four(a: int, b: int, c: int, d: int, nodes: int = None) -> float:
    """General 1D element sqrt(2 pi) sigma * integral(phi_a phi_b phi_c phi_d dx) by quadrature"""
    nodes = settings.quadrature_nodes if nodes is None else nodes
    if nodes < 2:
        raise ValueError(f"Quadrature needs at least 2 nodes, got {nodes}")
    if min(a, b, c, d) < 0:
        raise ValueError(f"Quanta must be non-negative, got ({a}, {b}, {c}, {d})")
    if (a + b + c + d) % 2:
        return 0.0
    return _k1d_four_sorted(*sorted((a, b, c, d)), nodes)


@lru_cache(maxsize=65536)
def _k1d_four_sorted(a: int, b: int, c: int, d: int, nodes: int) -> float:
    if 2 * nodes - 1 < a + b + c + d:
        logger.warning(f"{nodes} nodes do not integrate degree {a + b + c + d} exactly")
    table, w = _hermite_function_table(d, nodes)
    integrand = w * table[a] * table[b] * table[c] * table[d]
    return float(np.sum(integrand) / math.sqrt(math.pi))


def k1d_quadrature(m: int, n: int, nodes: int = None) -> float:
    """Gauss-Hermite evaluation of k(m, n), independent of the closed form"""
    return k1d_four(m, n, 0, 0, nodes)


def K3d(mu: Mode, nu: Mode) -> float:
    """K_{mu nu 0 0} as the product of per-axis elements"""
    return k1d(mu[0], nu[0]) * k1d(mu[1], nu[1]) * k1d(mu[2], nu[2])


def K3d_four(mu: Mode, nu: Mode, gamma: Mode, delta: Mode, nodes: int = None) -> float:
    """Full rank-4 element K_{mu nu gamma delta}"""
    value = 1.0
    for axis in range(3):
        value *= k1d_four(mu[axis], nu[axis], gamma[axis], delta[axis], nodes)
        if value == 0.0:
            break
    return value


def _iter_modes(cutoff: int) -> Iterator[Mode]:
    for x in range(cutoff + 1):
        for y in range(cutoff + 1 - x):
            for z in range(cutoff + 1 - x - y):
                yield Mode(x, y, z)


def enumerate_modes(cutoff: int) -> List[Mode]:
    """All modes with total quanta <= cutoff in lexicographic order"""
    if cutoff < 0:
        raise ValueError(f"Cutoff must be non-negative, got {cutoff}")
    return list(_iter_modes(cutoff))


@lru_cache(maxsize=8)
def mode_array(cutoff: int) -> np.ndarray:
    """enumerate_modes as an (M, 3) integer array, same order"""
    modes = np.array(enumerate_modes(cutoff), dtype=np.int64).reshape(-1, 3)
    modes.setflags(write=False)
    return modes


@lru_cache(maxsize=8)
def k1d_matrix(max_quanta: int) -> np.ndarray:
    """Table of k(m, n) for 0 <= m, n <= max_quanta"""
    size = max_quanta + 1
    table = np.array([[k1d(m, n) for n in range(size)] for m in range(size)])
    table.setflags(write=False)
    return table


class MatrixElementTable:
    """Read-only table of K_{mu nu 0 0} for mu >= nu with E_mu + E_nu <= cutoff.

    Parity-forbidden pairs are not stored; lookups of them return 0.
    """

    def __init__(self, cutoff: int, values: Dict[Tuple[Mode, Mode], float]):
        self.cutoff = cutoff
        self._values = values

    def __len__(self) -> int:
        return len(self._values)

    def items(self) -> Iterator[Tuple[Tuple[Mode, Mode], float]]:
        """Entries in canonical order: mu ascending, then nu ascending up to mu"""
        return iter(self._values.items())

    def get(self, mu: Mode, nu: Mode) -> float:
        if mu.energy + nu.energy > self.cutoff:
            raise ValueError(f"Pair ({mu}, {nu}) lies above the table cutoff {self.cutoff}")
        key = (mu, nu) if mu >= nu else (nu, mu)
        return self._values.get(key, 0.0)


@lru_cache(maxsize=8)
def build_matrix_element_table(cutoff: int) -> MatrixElementTable:
    """Build the pair table once; later calls return the same read-only instance"""
    if cutoff < 0:
        raise ValueError(f"Cutoff must be non-negative, got {cutoff}")
    modes = enumerate_modes(cutoff)
    quanta = mode_array(cutoff)
    energies = quanta.sum(axis=1)
    kk = k1d_matrix(cutoff)

    values: Dict[Tuple[Mode, Mode], float] = {}
    for i, mu in enumerate(modes):
        partners = quanta[: i + 1]
        allowed = (energies[: i + 1] <= cutoff - energies[i]) & np.all((partners + quanta[i]) % 2 == 0, axis=1)
        for j in np.flatnonzero(allowed):
            k = kk[quanta[i, 0], partners[j, 0]] * kk[quanta[i, 1], partners[j, 1]] * kk[quanta[i, 2], partners[j, 2]]
            if k != 0.0:
                values[(mu, modes[j])] = float(k)

    logger.debug(f"Matrix element table at cutoff {cutoff}: {len(values)} pairs")
    return MatrixElementTable(cutoff, values)

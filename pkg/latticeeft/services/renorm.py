"""
Second-order perturbation sums with an energy cutoff, the counter-term that
pins the two-body energy, and the induced three-body coefficient beta.

Energies are in the caller's unit; `hbar_omega` gives the vibrational quantum
in that unit (default 1, i.e. everything in units of hbar omega). The cutoff
is an integer number of quanta and bounds E_mu + E_nu in the two-body channel
and E_mu in the three-body channel.
"""

import logging
import math
import time
from functools import lru_cache
from typing import List, Sequence

import numpy as np
from scipy.special import gammaln

from ..config import settings
from ..models import PerturbationSummary
from .oscillator import GROUND, build_matrix_element_table, k1d, k1d_matrix, mode_array
from .summation import CompensatedSum, compensated_sum

logger = logging.getLogger(__name__)

CHANNELS = ("two_body", "three_body_tail")


def _check_cutoff(cutoff: int) -> None:
    if cutoff < 1:
        raise ValueError(f"Cutoff must be at least 1 quantum (no intermediate states), got {cutoff}")


@lru_cache(maxsize=16)
def three_body_shell_weights(cutoff: int) -> np.ndarray:
    """Sum of K_{mu 0}^2 over each energy shell E_mu = 0..cutoff.

    Coefficients of Q(x)^3 with Q(x) = sum_t k(t, 0)^2 x^t; odd t drop out by parity.
    """
    if cutoff < 0:
        raise ValueError(f"Cutoff must be non-negative, got {cutoff}")
    per_axis = np.array([k1d(t, 0) ** 2 for t in range(cutoff + 1)])
    weights = np.convolve(np.convolve(per_axis, per_axis)[: cutoff + 1], per_axis)[: cutoff + 1]
    weights.setflags(write=False)
    return weights


def three_body_shell_weights_enumerated(cutoff: int) -> np.ndarray:
    """Same shell weights by direct enumeration of the modes, for moderate cutoffs"""
    if cutoff < 0:
        raise ValueError(f"Cutoff must be non-negative, got {cutoff}")
    quanta = mode_array(cutoff)
    quanta = quanta[np.all(quanta % 2 == 0, axis=1)]
    k0 = k1d_matrix(cutoff)[:, 0]
    squared = (k0[quanta[:, 0]] * k0[quanta[:, 1]] * k0[quanta[:, 2]]) ** 2
    energies = quanta.sum(axis=1)
    return np.array([compensated_sum(squared[energies == e]) for e in range(cutoff + 1)])


@lru_cache(maxsize=16)
def two_body_shell_weights(cutoff: int) -> np.ndarray:
    """Sum of K_{mu nu}^2 over ordered pairs with E_mu + E_nu = 0..cutoff.

    K factorizes over axes and so does the pair energy, so the shell weights
    are the coefficients of the cube of the per-axis polynomial
    P(x) = sum_t x^t sum_{m+n=t} k(m, n)^2.
    """
    if cutoff < 0:
        raise ValueError(f"Cutoff must be non-negative, got {cutoff}")
    kk = k1d_matrix(cutoff)
    per_axis = np.zeros(cutoff + 1)
    for t in range(cutoff + 1):
        per_axis[t] = compensated_sum(kk[m, t - m] ** 2 for m in range(t + 1))
    weights = np.convolve(np.convolve(per_axis, per_axis)[: cutoff + 1], per_axis)[: cutoff + 1]
    weights.setflags(write=False)
    return weights


def _shell_partials(weights: np.ndarray) -> List[float]:
    """Running compensated sums of weight[E] / E for E = 1.. in increasing energy"""
    total = CompensatedSum()
    partials = []
    for energy in range(1, len(weights)):
        total.add(weights[energy] / energy)
        partials.append(total.value)
    return partials


def three_body_channel_sum(cutoff: int) -> float:
    """s3 = sum over 0 < E_mu <= cutoff of K_{mu 0}^2 / (E_mu / hbar omega)"""
    _check_cutoff(cutoff)
    return _shell_partials(three_body_shell_weights(cutoff))[-1]


def raw_two_body_sum(cutoff: int) -> float:
    """Divergent pair sum over ordered (mu, nu) != (0, 0) of K_{mu nu}^2 / (E_mu nu / hbar omega)"""
    _check_cutoff(cutoff)
    return _shell_partials(two_body_shell_weights(cutoff))[-1]


def two_body_sum_relative(cutoff: int) -> float:
    """The same pair sum from the centre-of-mass / relative decomposition.

    A contact collision leaves the pair's centre of mass in its ground state
    and excites only relative s-waves, at energy 2k hbar omega with weight
    (2k+1)!! / (2^k k!). The terms decay as k^(-1/2), hence the square-root
    growth with the cutoff.
    """
    _check_cutoff(cutoff)
    total = CompensatedSum()
    for k in range(1, cutoff // 2 + 1):
        weight = math.exp(gammaln(k + 1.5) - gammaln(1.5) - gammaln(k + 1))
        total.add(weight / (2 * k))
    return total.value


def raw_second_order_shift_enumerated(n: int, cutoff: int, u2: float, hbar_omega: float = 1.0) -> float:
    """Second-order shift of n ground-mode atoms without the counter-term, pair by pair.

    Sums over pairs mu >= nu with 0 < E_mu + E_nu <= cutoff, weighting each by
    the number of equivalent creation orderings and the squared Bose
    amplitude of the intermediate state:
        nu = 0 < mu   ->  4 * n (n-1)^2
        mu = nu != 0  ->  1 * 2 n (n-1)
        mu > nu > 0   ->  4 * n (n-1)
    """
    if n < 0:
        raise ValueError(f"Atom number must be non-negative, got {n}")
    _check_cutoff(cutoff)
    if cutoff > settings.explicit_sum_max_cutoff:
        raise ValueError(
            f"Cutoff {cutoff} exceeds the pair-enumeration bound {settings.explicit_sum_max_cutoff}"
        )
    pairs = n * (n - 1)
    if pairs == 0:
        return 0.0

    # accumulate each energy shell separately, then the shells in increasing energy
    shells = [CompensatedSum() for _ in range(cutoff + 1)]
    for (mu, nu), k in build_matrix_element_table(cutoff).items():
        energy = mu.energy + nu.energy
        if energy == 0:
            continue
        if nu == GROUND:
            weight = 4.0 * pairs * (n - 1)
        elif mu == nu:
            weight = 2.0 * pairs
        else:
            weight = 4.0 * pairs
        shells[energy].add(weight * k * k / energy)

    total = CompensatedSum()
    for shell in shells[1:]:
        total.add(shell.value)
    return -(u2 * u2 / 4.0) * total.value / hbar_omega


def raw_second_order_shift(n: int, cutoff: int, u2: float, hbar_omega: float = 1.0) -> float:
    """Second-order shift of n ground-mode atoms without the counter-term.

    Up to the pair-enumeration bound the pairs are summed one by one. Above it
    the shift is assembled from the factorized channel sums,
        -U2^2 [n(n-1)(n-2) s3 + n(n-1)/2 * pair sum] / hbar omega,
    which is the same sum regrouped by channel.
    """
    if cutoff <= settings.explicit_sum_max_cutoff:
        return raw_second_order_shift_enumerated(n, cutoff, u2, hbar_omega)
    if n < 0:
        raise ValueError(f"Atom number must be non-negative, got {n}")
    _check_cutoff(cutoff)
    three_body = n * (n - 1) * (n - 2) * three_body_channel_sum(cutoff)
    two_body = n * (n - 1) / 2.0 * raw_two_body_sum(cutoff)
    return -u2 * u2 * (three_body + two_body) / hbar_omega


def counterterm(cutoff: int, u2: float, hbar_omega: float = 1.0) -> float:
    """Counter-term A that makes the second-order two-body shift vanish"""
    return -raw_second_order_shift(2, cutoff, u2, hbar_omega)


def renormalized_second_order_shift(n: int, cutoff: int, u2: float, hbar_omega: float = 1.0) -> float:
    """Raw shift plus A n (n-1) / 2; only the three-body part survives"""
    a = counterterm(cutoff, u2, hbar_omega)
    return raw_second_order_shift(n, cutoff, u2, hbar_omega) + a * n * (n - 1) / 2.0


def delta_u3(cutoff: int, u2: float, hbar_omega: float = 1.0) -> float:
    """Induced three-body energy -6 U2^2 s3 / hbar omega"""
    return -6.0 * u2 * u2 * three_body_channel_sum(cutoff) / hbar_omega


def beta(cutoff: int) -> float:
    """Dimensionless beta(cutoff) = -delta_u3 / (U2^2 / hbar omega)"""
    return 6.0 * three_body_channel_sum(cutoff)


def beta_closed_form() -> float:
    """Infinite-cutoff beta for the isotropic harmonic well"""
    root3 = math.sqrt(3.0)
    return 4.0 * root3 - 6.0 + 6.0 * math.log(4.0 / (2.0 + root3))


def _channel_values(cutoffs: Sequence[int], channel: str) -> np.ndarray:
    if channel == "two_body":
        return np.array([raw_two_body_sum(c) for c in cutoffs])
    limit = beta_closed_form() / 6.0
    tails = np.array([limit - three_body_channel_sum(c) for c in cutoffs])
    if np.any(tails <= 0.0):
        raise ValueError("Three-body tail is below floating-point resolution at these cutoffs")
    return tails


def divergence_exponent(cutoffs: Sequence[int], channel: str = "two_body") -> float:
    """Least-squares slope of log(channel sum) against log(cutoff).

    channel="two_body" fits the raw divergent pair sum; "three_body_tail"
    fits the distance of s3 from its infinite-cutoff limit.
    """
    if channel not in CHANNELS:
        raise ValueError(f"Unknown channel: {channel}. Supported: {', '.join(CHANNELS)}")
    points = sorted(set(int(c) for c in cutoffs))
    if len(points) < settings.fit_min_points:
        raise ValueError(f"Need at least {settings.fit_min_points} distinct cutoffs, got {len(points)}")
    for c in points:
        _check_cutoff(c)
    if channel == "two_body" and points[-1] < 40:
        logger.warning(f"Largest cutoff {points[-1]} is below 40; subleading terms bias the exponent")

    values = _channel_values(points, channel)
    slope, _ = np.polyfit(np.log(points), np.log(values), 1)
    logger.info(f"Fitted {channel} exponent {slope:.4f} over cutoffs {points}")
    return float(slope)


class RenormalizationService:
    """Collects the channel sums at one cutoff into a PerturbationSummary"""

    def summarize(self, cutoff: int) -> PerturbationSummary:
        _check_cutoff(cutoff)
        start_time = time.time()

        partial_s3 = _shell_partials(three_body_shell_weights(cutoff))
        s3 = partial_s3[-1]
        two_body = raw_two_body_sum(cutoff)
        a = counterterm(cutoff, 1.0)

        summary = PerturbationSummary(
            cutoff=cutoff,
            s3=s3,
            beta=6.0 * s3,
            counterterm=a,
            raw_two_body_sum=two_body,
            shell_beta=[6.0 * p for p in partial_s3],
        )
        elapsed = (time.time() - start_time) * 1000
        logger.info(f"Cutoff {cutoff}: beta={summary.beta:.10f}, A={a:.6f} in {elapsed:.2f}ms")
        return summary


# Global service instance
renorm_service = RenormalizationService()

"""
Collapse and revival of on-site coherent states under the effective
Hamiltonian, homogeneous and averaged over a spherical cloud of sites.

The coherent amplitude is A(t) = e^{-nbar} sum_n nbar^n/n! exp(-i gap(n) t / hbar),
with gap(n) = E(n+1) - E(n), and the fringe visibility is |A(t)|^2.
Phases are reduced to whole cycles before exponentiation so that exact
revivals stay exact at long times.
"""

import logging
import math
import time
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import poisson

from ..config import settings
from ..constants import PLANCK
from ..models import CoherentStateSpec, CouplingSet, LatticeEnvelope, VisibilityTrace
from .couplings import energy_gap

logger = logging.getLogger(__name__)

TimeLike = Union[float, Sequence[float], np.ndarray]

def truncation_bound(nbar: float, tail_tol: float) -> int:
    """Smallest n_max >= 1 whose Poisson tail P(N > n_max) is <= tail_tol"""
    if nbar < 0:
        raise ValueError(f"Mean atom number must be non-negative, got {nbar}")
    if not 0.0 < tail_tol < 1.0:
        raise ValueError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    if nbar == 0:
        return 1
    n_max = max(1, int(math.floor(nbar)))
    while poisson.sf(n_max, nbar) > tail_tol:
        n_max += 1
    return n_max


def coherent_state(nbar: float, tail_tol: Optional[float] = None) -> CoherentStateSpec:
    """CoherentStateSpec truncated at the Poisson tail tolerance"""
    tail_tol = settings.tail_tol if tail_tol is None else tail_tol
    return CoherentStateSpec(nbar=nbar, n_max=truncation_bound(nbar, tail_tol), tail_tol=tail_tol)


def poisson_weights(spec: CoherentStateSpec) -> np.ndarray:
    """e^{-nbar} nbar^n / n! for n = 0..n_max"""
    n = np.arange(spec.n_max + 1)
    if spec.nbar == 0:
        return (n == 0).astype(float)
    return poisson.pmf(n, spec.nbar)


def _as_times(t: TimeLike) -> Tuple[np.ndarray, bool]:
    times = np.asarray(t, dtype=float)
    scalar = times.ndim == 0
    times = np.atleast_1d(times)
    if np.any(times < 0):
        raise ValueError("Hold times must be non-negative")
    return times, scalar


def _phase_factors(times: np.ndarray, gaps: np.ndarray) -> np.ndarray:
    """exp(-i gap t / hbar) with the phase reduced to a fraction of a cycle"""
    cycles = np.multiply.outer(times, gaps) / PLANCK
    cycles -= np.floor(cycles)
    return np.exp(-2j * np.pi * cycles)


def _amplitude_from_gaps(times: np.ndarray, weights: np.ndarray, gaps: np.ndarray) -> np.ndarray:
    chunk = max(1, settings.block_elements // max(1, gaps.size))
    out = np.empty(times.size, dtype=complex)
    for start in range(0, times.size, chunk):
        block = times[start:start + chunk]
        out[start:start + chunk] = _phase_factors(block, gaps) @ weights
    return out


def amplitude(t: TimeLike, spec: CoherentStateSpec, c: CouplingSet) -> Union[complex, np.ndarray]:
    """A(t) with <a> = alpha A(t); |A| <= 1"""
    times, scalar = _as_times(t)
    gaps = energy_gap(np.arange(spec.n_max + 1), c)
    values = _amplitude_from_gaps(times, poisson_weights(spec), gaps)
    return complex(values[0]) if scalar else values


def visibility(t: TimeLike, spec: CoherentStateSpec, c: CouplingSet) -> Union[float, np.ndarray]:
    """V(t) = |<a>|^2 / nbar = |A(t)|^2"""
    values = np.abs(amplitude(t, spec, c)) ** 2
    return float(values) if np.ndim(values) == 0 else values


def visibility_closed_form(t: TimeLike, nbar: float, u2: float) -> Union[float, np.ndarray]:
    """exp(-2 nbar [1 - cos(U2 t / hbar)]), the two-body-only visibility"""
    times, scalar = _as_times(t)
    cycles = times * u2 / PLANCK
    cycles -= np.floor(cycles)
    values = np.exp(-2.0 * nbar * (1.0 - np.cos(2.0 * np.pi * cycles)))
    return float(values[0]) if scalar else values


def lattice_sites(diameter: int) -> np.ndarray:
    """Integer points (i, j, k) with i^2 + j^2 + k^2 <= (diameter / 2)^2"""
    if diameter < 1:
        raise ValueError(f"Diameter must be at least 1 site, got {diameter}")
    half = diameter // 2
    axis = np.arange(-half, half + 1)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    inside = 4 * np.sum(grid**2, axis=1) <= diameter * diameter
    return grid[inside]


def radial_shells(diameter: int) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct squared radii of the site set and the number of sites on each"""
    r2 = np.sum(lattice_sites(diameter) ** 2, axis=1)
    return np.unique(r2, return_counts=True)


def site_couplings(env: LatticeEnvelope, c: CouplingSet, r2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Local U2 and U3 at squared radius r2 under the parabolic envelope"""
    scale = 1.0 - env.eps * 4.0 * np.asarray(r2, dtype=float) / env.diameter_sites**2
    u2 = c.u2 * scale
    u3 = c.u3 * scale**2 if env.scale_u3 else np.full_like(scale, c.u3)
    return u2, u3


def averaged_amplitude(
    t: TimeLike,
    env: LatticeEnvelope,
    spec: CoherentStateSpec,
    c: CouplingSet,
    compress: bool = True,
) -> Union[complex, np.ndarray]:
    """Unweighted mean of the per-site amplitudes over the spherical site set.

    With compress=True sites sharing a squared radius are evaluated once and
    weighted by their multiplicity.
    """
    if env.eps == 0.0:
        return amplitude(t, spec, c)
    times, scalar = _as_times(t)

    # sites on one squared radius share their couplings
    if compress:
        r2, counts = radial_shells(env.diameter_sites)
    else:
        r2 = np.sum(lattice_sites(env.diameter_sites) ** 2, axis=1)
        counts = np.ones_like(r2)
    u2, u3 = site_couplings(env, c, r2)
    n = np.arange(spec.n_max + 1)
    gaps = np.multiply.outer(u2, n) + np.multiply.outer(u3, n * (n - 1) / 2.0)  # (shells, n)
    site_weights = counts / counts.sum()
    weights = poisson_weights(spec)

    # per-site amplitudes in time blocks, then the multiplicity-weighted mean
    chunk = max(1, settings.block_elements // max(1, gaps.size))
    out = np.empty(times.size, dtype=complex)
    for start in range(0, times.size, chunk):
        block = times[start:start + chunk]
        per_site = _phase_factors(block, gaps) @ weights  # (times, shells)
        out[start:start + chunk] = per_site @ site_weights
    return complex(out[0]) if scalar else out


def averaged_visibility(
    t: TimeLike,
    env: LatticeEnvelope,
    spec: CoherentStateSpec,
    c: CouplingSet,
) -> Union[float, np.ndarray]:
    """|M^-1 sum_i A_i(t)|^2 over the sites of the envelope"""
    values = np.abs(averaged_amplitude(t, env, spec, c)) ** 2
    return float(values) if np.ndim(values) == 0 else values


def _check_grid(t_grid: Sequence[float]) -> np.ndarray:
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("Time grid must be a non-empty 1D sequence")
    if np.any(np.diff(times) <= 0):
        raise ValueError("Time grid must be strictly increasing")
    if times[0] < 0:
        raise ValueError("Hold times must be non-negative")
    return times


def trace(
    t_grid: Sequence[float],
    spec: CoherentStateSpec,
    c: CouplingSet,
    env: Optional[LatticeEnvelope] = None,
    closed_form: bool = False,
) -> VisibilityTrace:
    """Visibility on a grid; adds the lattice average when an envelope is given"""
    times = _check_grid(t_grid)
    homogeneous = visibility(times, spec, c)
    return VisibilityTrace(
        times=times.tolist(),
        visibility=homogeneous.tolist(),
        closed_form=visibility_closed_form(times, spec.nbar, c.u2).tolist() if closed_form else None,
        averaged=averaged_visibility(times, env, spec, c).tolist() if env is not None else None,
    )


def revival_peaks(trace: VisibilityTrace, period: float, count: int, column: str = "visibility") -> List[float]:
    """Largest sampled value in each window [k - 1/2, k + 1/2] * period, k = 1..count.

    Windows without samples are left out.
    """
    if period <= 0 or not math.isfinite(period):
        raise ValueError(f"Revival period must be positive and finite, got {period}")
    times = np.asarray(trace.times)
    values = np.asarray(getattr(trace, column))
    peaks = []
    for k in range(1, count + 1):
        window = (times >= (k - 0.5) * period) & (times <= (k + 0.5) * period)
        if np.any(window):
            peaks.append(float(values[window].max()))
    return peaks


def count_revivals_above(trace: VisibilityTrace, period: float, threshold: float, column: str = "visibility") -> int:
    """Number of revival windows (k >= 1) inside the grid whose peak exceeds threshold"""
    count = int(math.floor(trace.times[-1] / period + 0.5))
    return sum(1 for peak in revival_peaks(trace, period, count, column) if peak > threshold)


class RevivalSimulator:
    """Builds coherent states from settings and produces visibility traces"""

    def __init__(self, tail_tol: Optional[float] = None):
        self.tail_tol = settings.tail_tol if tail_tol is None else tail_tol

    def simulate(
        self,
        t_grid: Sequence[float],
        nbar: float,
        c: CouplingSet,
        env: Optional[LatticeEnvelope] = None,
        closed_form: bool = False,
    ) -> VisibilityTrace:
        start_time = time.time()
        spec = coherent_state(nbar, self.tail_tol)
        result = trace(t_grid, spec, c, env, closed_form)
        elapsed = (time.time() - start_time) * 1000
        logger.info(
            f"Visibility trace: {len(result.times)} points, nbar={nbar}, n_max={spec.n_max}, "
            f"envelope={'none' if env is None else f'eps={env.eps}, D={env.diameter_sites}'} in {elapsed:.2f}ms"
        )
        return result


# Global service instance
revival_simulator = RevivalSimulator()

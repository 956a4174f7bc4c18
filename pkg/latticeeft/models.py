import math
from typing import Dict, List, Literal, Optional, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.stats import poisson

from .config import settings
from .constants import HBAR, PLANCK

class PhysicalParams(BaseModel):
    """Physical parameters of one lattice well (SI units)"""
    model_config = ConfigDict(frozen=True)

    atom_mass: float = Field(..., gt=0.0, description="Atom mass in kg")
    a_scat: float = Field(..., description="Zero-energy s-wave scattering length in m (may be negative)")
    omega: float = Field(..., gt=0.0, description="Trap angular frequency in rad/s")
    r_e: float = Field(0.0, description="Effective range in m")
    u3_intrinsic: float = Field(0.0, description="Intrinsic three-body energy in J")

    @property
    def sigma(self) -> float:
        """Oscillator length sqrt(hbar / m omega)"""
        return math.sqrt(HBAR / (self.atom_mass * self.omega))

    @property
    def hbar_omega(self) -> float:
        return HBAR * self.omega

class CouplingSet(BaseModel):
    """Dimensionless expansion parameter and effective on-site energies (J)"""
    model_config = ConfigDict(frozen=True)

    xi: float = Field(..., description="Expansion parameter U2 / hbar omega")
    u2: float = Field(..., description="Renormalized two-body energy in J")
    u3: float = Field(..., description="Three-body energy in J (intrinsic + induced)")
    hbar_omega: float = Field(..., gt=0.0, description="Vibrational quantum in J")
    beta: Optional[float] = Field(None, description="Induced three-body coefficient used")
    validity_warnings: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_u2(self):
        if not math.isclose(self.u2, self.xi * self.hbar_omega, rel_tol=1e-9, abs_tol=1e-300):
            raise ValueError(f"u2 ({self.u2}) must equal xi * hbar_omega ({self.xi * self.hbar_omega})")
        return self

    @property
    def u2_hz(self) -> float:
        return self.u2 / PLANCK

    @property
    def u3_hz(self) -> float:
        return self.u3 / PLANCK

    @property
    def t2(self) -> float:
        """Two-body revival period h / U2 in s (inf without interactions)"""
        return PLANCK / abs(self.u2) if self.u2 != 0.0 else math.inf

    @property
    def t3(self) -> float:
        """Three-body revival period h / |U3| in s (inf without three-body term)"""
        return PLANCK / abs(self.u3) if self.u3 != 0.0 else math.inf

class PerturbationSummary(BaseModel):
    """Second-order channel sums at a given cutoff (energies in units of hbar omega)"""
    model_config = ConfigDict(frozen=True)

    cutoff: int = Field(..., ge=1, description="Cutoff in units of hbar omega")
    s3: float = Field(..., description="Three-body channel sum of K_mu0^2 / E_mu")
    beta: float = Field(..., description="Induced three-body coefficient, 6 * s3")
    counterterm: float = Field(..., description="Counter-term A in units of U2^2 / hbar omega")
    raw_two_body_sum: float = Field(..., description="Divergent pair sum of K_munu^2 / E_munu")
    shell_beta: List[float] = Field(default_factory=list, description="Partial beta after each shell")

    @model_validator(mode="after")
    def _check_beta(self):
        if self.beta != 6.0 * self.s3:
            raise ValueError("beta must equal 6 * s3")
        return self

class CoherentStateSpec(BaseModel):
    """Truncated on-site coherent state"""
    model_config = ConfigDict(frozen=True)

    nbar: float = Field(..., ge=0.0, description="Mean atom number |alpha|^2")
    n_max: int = Field(..., ge=1, description="Fock truncation")
    tail_tol: float = Field(1e-14, gt=0.0, lt=1.0, description="Excluded Poisson mass")

    @model_validator(mode="after")
    def _check_tail(self):
        tail = float(poisson.sf(self.n_max, self.nbar)) if self.nbar > 0 else 0.0
        if tail > self.tail_tol * (1.0 + 1e-9):
            raise ValueError(
                f"n_max={self.n_max} leaves Poisson tail {tail:.3e} above tail_tol={self.tail_tol:.3e}"
            )
        return self

class LatticeEnvelope(BaseModel):
    """Spherical cloud of sites with a parabolic depression of U2"""
    model_config = ConfigDict(frozen=True)

    diameter_sites: int = Field(default_factory=lambda: settings.lattice_diameter_sites, ge=1, description="Sphere diameter in lattice sites")
    eps: float = Field(default_factory=lambda: settings.inhomogeneity_eps, ge=0.0, lt=1.0, description="Fractional U2 depression at the edge")
    profile: Literal["parabolic"] = "parabolic"
    scale_u3: bool = Field(True, description="Scale U3 with the square of the local U2")

class VisibilityTrace(BaseModel):
    """Visibility sampled on a time grid"""

    times: List[float] = Field(..., description="Hold times in s")
    visibility: List[float]
    closed_form: Optional[List[float]] = None
    averaged: Optional[List[float]] = None
    per_site_retained: bool = False

    @model_validator(mode="after")
    def _check_lengths(self):
        n = len(self.times)
        for name in ("visibility", "closed_form", "averaged"):
            values = getattr(self, name)
            if values is None:
                continue
            if len(values) != n:
                raise ValueError(f"{name} has {len(values)} points, expected {n}")
            if any(v < 0.0 or v > 1.0 + 1e-12 for v in values):
                raise ValueError(f"{name} values must lie in [0, 1]")
        return self

    def to_frame(self) -> pd.DataFrame:
        """Tabulate with times in ms"""
        columns: Dict[str, List[float]] = {
            "t_ms": [t * 1e3 for t in self.times],
            "visibility": self.visibility,
        }
        if self.closed_form is not None:
            columns["closed_form"] = self.closed_form
        if self.averaged is not None:
            columns["averaged"] = self.averaged
        return pd.DataFrame(columns)

class RunConfig(BaseModel):
    """Resolved command-line configuration for one run"""

    subcommand: Literal["beta", "couplings", "revival", "sweep", "ed"]
    species: str = "Rb87"
    omega_khz: Optional[float] = Field(None, gt=0.0, description="Trap frequency omega / 2 pi in kHz")
    ascat_nm: Optional[float] = None
    xi: Optional[float] = None
    beta: Optional[float] = None
    nbar: float = Field(2.5, ge=0.0)
    u3_intrinsic_hz: float = 0.0
    u3_hz: List[float] = Field(default_factory=list)
    effective_range_nm: Optional[float] = None
    cutoff: int = 4
    n_atoms: int = Field(3, ge=1)
    xi_min: float = -0.1
    xi_max: float = 0.1
    xi_steps: int = Field(41, ge=1)
    tmax_ms: Optional[float] = None
    tmax_over_t2: Optional[float] = None
    steps: int = Field(2001, ge=2)
    inhom_eps: float = Field(0.0, ge=0.0, lt=1.0)
    diameter: int = Field(default_factory=lambda: settings.lattice_diameter_sites, ge=1)
    fmt: Literal["csv", "json"] = "csv"
    out: Optional[str] = None
    strict: bool = False

    @field_validator("tmax_ms", "tmax_over_t2")
    @classmethod
    def _positive_tmax(cls, value):
        if value is not None and value <= 0.0:
            raise ValueError("t_max must be positive")
        return value

    @model_validator(mode="after")
    def _one_parameterization(self):
        if self.xi is not None and self.ascat_nm is not None:
            raise ValueError("Give either --xi or --ascat-nm, not both")
        return self

    @property
    def uses_xi(self) -> bool:
        return self.xi is not None

class BetaReport(BaseModel):
    """Convergence of the three-body coefficient"""
    cutoff: int
    beta_partial: List[float]
    beta_closed_form: float
    residual: float

class CouplingsReport(BaseModel):
    """Derived couplings in laboratory units"""
    species: Optional[str]
    omega_khz: float
    a_scat_nm: Optional[float]
    a_eff_nm: Optional[float] = None
    sigma_nm: Optional[float]
    xi: float
    beta: float
    u2_hz: float
    u3_hz: float
    t2_ms: Optional[float]
    t3_ms: Optional[float]
    note: Optional[str] = None
    warnings: List[str] = Field(default_factory=list)

class ExactDiagReport(BaseModel):
    """Exact diagonalization against the second-order prediction (units of hbar omega)"""
    n_atoms: int
    cutoff: int
    xi: float
    fock_dimension: int
    ed_energy: float
    perturbative: float
    residual: float
    residual_over_xi3: Optional[float]
    half_xi_residual: float
    scaling_factor: Optional[float]
    renormalized_shift: float

class TableReport(BaseModel):
    """Column-oriented table for JSON output"""
    meta: Dict[str, Optional[Union[float, str]]] = Field(default_factory=dict)
    columns: Dict[str, List[Optional[float]]]

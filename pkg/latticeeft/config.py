from pydantic_settings import BaseSettings, SettingsConfigDict

class Settings(BaseSettings):
    """Numerical configuration settings"""

    model_config = SettingsConfigDict(
        env_prefix="LATTICEEFT_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"

    # Oscillator matrix elements
    quadrature_nodes: int = 64  # Gauss-Hermite nodes for the oracle and rank-4 elements
    exact_factorial_limit: int = 10  # integer factorials up to here, log-Gamma above

    # Perturbation sums
    explicit_sum_max_cutoff: int = 40  # mode-by-mode pair enumeration bound
    fit_min_points: int = 4

    # Exact diagonalization
    max_fock_dimension: int = 20000
    exact_diag_max_cutoff: int = 4
    exact_diag_max_xi: float = 0.1

    # Validity domain
    coupling_warn_xi: float = 0.2
    validity_n_xi: float = 0.5

    # Coherent-state dynamics
    tail_tol: float = 1e-14
    lattice_diameter_sites: int = 60
    inhomogeneity_eps: float = 0.05
    block_elements: int = 2_000_000  # complex entries per vectorized (time, site, n) block

    # Output
    csv_precision: int = 17

# Global settings instance
settings = Settings()

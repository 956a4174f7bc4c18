import argparse
import json
import logging
import math
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

# Import our models and services
from .config import settings
from .constants import HBAR, KILOHERTZ, NANOMETER, PLANCK, get_species
from .models import (
    BetaReport, CouplingSet, CouplingsReport, ExactDiagReport, LatticeEnvelope,
    RunConfig, TableReport
)
from .services import exact_diagonalizer, renorm_service, revival_simulator
from .services.couplings import (
    check_validity, couplings_from_xi, derive_couplings, effective_scattering_length,
    physical_params
)
from .services.dynamics import revival_peaks
from .services.exact_diag import exact_diag_oracle, second_order_prediction
from .services.renorm import beta_closed_form, renormalized_second_order_shift

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_VALIDITY = 3

Payload = Union[BaseModel, pd.DataFrame]


class CommandResult:
    """Report of one subcommand plus the validity warnings raised while producing it"""

    def __init__(self, payload: Payload, table: Optional[pd.DataFrame] = None, warnings: Optional[List[str]] = None):
        self.payload = payload
        self.table = table
        self.warnings = warnings or []


def _hbar_omega(omega_khz: float) -> float:
    return HBAR * 2.0 * math.pi * omega_khz * KILOHERTZ


def _ms(seconds: float) -> Optional[float]:
    return seconds * 1e3 if math.isfinite(seconds) else None


def resolve_couplings(config: RunConfig) -> Tuple[CouplingSet, Optional[float], Optional[float]]:
    """CouplingSet for a run, plus sigma and effective scattering length in nm when derived physically"""
    omega_khz = 30.0 if config.omega_khz is None else config.omega_khz
    beta = beta_closed_form() if config.beta is None else config.beta
    if config.uses_xi:
        couplings = couplings_from_xi(
            config.xi, _hbar_omega(omega_khz), beta, config.u3_intrinsic_hz * PLANCK
        )
        return couplings, None, None

    p = physical_params(config.species, omega_khz, config.ascat_nm, config.effective_range_nm or 0.0,
                        config.u3_intrinsic_hz)
    a_eff_nm = None
    k = None
    if config.effective_range_nm is not None and p.a_scat != 0.0:
        k = 1.0 / p.sigma
        a_eff_nm = effective_scattering_length(p.a_scat, p.r_e, k) / NANOMETER
    return derive_couplings(p, beta, k), p.sigma / NANOMETER, a_eff_nm


def cmd_beta(config: RunConfig) -> CommandResult:
    """Partial beta after each shell up to the cutoff against the closed form"""
    summary = renorm_service.summarize(config.cutoff)
    closed = beta_closed_form()
    report = BetaReport(
        cutoff=config.cutoff,
        beta_partial=summary.shell_beta,
        beta_closed_form=closed,
        residual=closed - summary.beta,
    )
    table = pd.DataFrame({
        "shell": np.arange(1, config.cutoff + 1),
        "beta_partial": summary.shell_beta,
        "residual": [closed - b for b in summary.shell_beta],
    })
    return CommandResult(report, table)


def cmd_couplings(config: RunConfig) -> CommandResult:
    """sigma, xi, U2/h, U3/h, t2 and t3 for one set of parameters"""
    couplings, sigma_nm, a_eff_nm = resolve_couplings(config)
    omega_khz = 30.0 if config.omega_khz is None else config.omega_khz
    note = "no collapse" if couplings.u2 == 0.0 else None
    report = CouplingsReport(
        species=None if config.uses_xi else config.species,
        omega_khz=omega_khz,
        a_scat_nm=None if config.uses_xi else (
            get_species(config.species).a_scat_nm if config.ascat_nm is None else config.ascat_nm
        ),
        a_eff_nm=a_eff_nm,
        sigma_nm=sigma_nm,
        xi=couplings.xi,
        beta=couplings.beta,
        u2_hz=couplings.u2_hz,
        u3_hz=couplings.u3_hz,
        t2_ms=_ms(couplings.t2),
        t3_ms=_ms(couplings.t3),
        note=note,
        warnings=couplings.validity_warnings,
    )
    table = pd.DataFrame([report.model_dump(exclude={"warnings"})])
    return CommandResult(report, table, couplings.validity_warnings)


def _time_grid(config: RunConfig, couplings: CouplingSet) -> np.ndarray:
    if config.tmax_ms is not None:
        tmax = config.tmax_ms * 1e-3
    else:
        if not math.isfinite(couplings.t2):
            raise ValueError("U2 = 0 has no revival period; give --tmax-ms")
        tmax = (6.0 if config.tmax_over_t2 is None else config.tmax_over_t2) * couplings.t2
    return np.linspace(0.0, tmax, config.steps)


def _u3_label(value: float) -> str:
    return f"{value:g}"


def cmd_revival(config: RunConfig) -> CommandResult:
    """Visibility on a uniform grid; optional lattice average and extra U3 values"""
    couplings, _, _ = resolve_couplings(config)
    # validity of the couplings and of the largest occupation used
    warnings = list(couplings.validity_warnings)
    occupancy_warning = check_validity(int(math.ceil(config.nbar)), couplings)
    if occupancy_warning:
        warnings.append(occupancy_warning)

    # main curve uses the resolved U3, with the closed form alongside
    grid = _time_grid(config, couplings)
    env = LatticeEnvelope(diameter_sites=config.diameter, eps=config.inhom_eps) if config.inhom_eps > 0 else None
    result = revival_simulator.simulate(grid, config.nbar, couplings, env, closed_form=True)
    table = result.to_frame()

    # one extra column per requested U3, same U2 and grid
    for value in config.u3_hz:
        label = _u3_label(value)
        variant = couplings.model_copy(update={"u3": value * PLANCK})
        extra = revival_simulator.simulate(grid, config.nbar, variant, env)
        table[f"visibility_u3_{label}"] = extra.visibility
        if extra.averaged is not None:
            table[f"averaged_u3_{label}"] = extra.averaged

    # log the sampled peaks; nothing to log without a collapse
    if math.isfinite(couplings.t2):
        count = int(grid[-1] / couplings.t2 + 0.5)
        peaks = revival_peaks(result, couplings.t2, count)
        logger.info(f"Revival peaks at k * t2: {', '.join(f'{p:.4f}' for p in peaks)}")

    report = TableReport(
        meta={
            "xi": couplings.xi,
            "u2_hz": couplings.u2_hz,
            "u3_hz": couplings.u3_hz,
            "nbar": config.nbar,
            "t2_ms": _ms(couplings.t2),
            "t3_ms": _ms(couplings.t3),
            "inhom_eps": config.inhom_eps,
        },
        columns={name: table[name].tolist() for name in table.columns},
    )
    return CommandResult(report, table, warnings)


def cmd_sweep(config: RunConfig) -> CommandResult:
    """U2 and U3 in units of hbar omega over a range of xi; Hz and ms columns when omega is given"""
    beta = beta_closed_form() if config.beta is None else config.beta
    if config.omega_khz is None and config.u3_intrinsic_hz != 0.0:
        raise ValueError("--u3-intrinsic-hz needs --omega-khz in a sweep")
    hbar_omega = 1.0 if config.omega_khz is None else _hbar_omega(config.omega_khz)
    u3_intrinsic = config.u3_intrinsic_hz * PLANCK

    rows: List[Dict[str, Any]] = []
    warnings: List[str] = []
    for xi in np.linspace(config.xi_min, config.xi_max, config.xi_steps):
        couplings = couplings_from_xi(float(xi), hbar_omega, beta, u3_intrinsic)
        warnings.extend(couplings.validity_warnings)
        row = {
            "xi": couplings.xi,
            "u2_over_hbar_omega": couplings.u2 / hbar_omega,
            "u3_over_hbar_omega": couplings.u3 / hbar_omega,
        }
        if config.omega_khz is not None:
            row.update(u2_hz=couplings.u2_hz, u3_hz=couplings.u3_hz,
                       t2_ms=couplings.t2 * 1e3, t3_ms=couplings.t3 * 1e3)
        rows.append(row)

    table = pd.DataFrame(rows)
    meta = {"beta": beta, "omega_khz": config.omega_khz}
    report = TableReport(
        meta=meta,
        columns={name: [v if math.isfinite(v) else None for v in table[name].tolist()] for name in table.columns},
    )
    return CommandResult(report, table, warnings)


def cmd_ed(config: RunConfig) -> CommandResult:
    """Exact diagonalization against first order plus the raw second-order sum"""
    xi = 0.07 if config.xi is None else config.xi
    n, cutoff = config.n_atoms, config.cutoff

    def residual_at(x: float) -> Tuple[float, float, float]:
        energy = exact_diag_oracle(n, cutoff, x)
        prediction = second_order_prediction(n, cutoff, x)
        return energy, prediction, energy - prediction

    energy, prediction, residual = residual_at(xi)
    _, _, half_residual = residual_at(xi / 2.0)
    _, configurations = exact_diagonalizer.basis(n, cutoff)
    report = ExactDiagReport(
        n_atoms=n,
        cutoff=cutoff,
        xi=xi,
        fock_dimension=len(configurations),
        ed_energy=energy,
        perturbative=prediction,
        residual=residual,
        residual_over_xi3=residual / xi**3 if xi != 0.0 else None,
        half_xi_residual=half_residual,
        scaling_factor=residual / half_residual if half_residual != 0.0 else None,
        renormalized_shift=renormalized_second_order_shift(n, cutoff, xi),
    )
    table = pd.DataFrame([report.model_dump()])
    return CommandResult(report, table)


COMMANDS = {
    "beta": cmd_beta,
    "couplings": cmd_couplings,
    "revival": cmd_revival,
    "sweep": cmd_sweep,
    "ed": cmd_ed,
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser; every option defaults to None so config-file values can fill the gaps"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the long option names")
    common.add_argument("--log-level", choices=["debug", "info", "warning", "error"], help="Log level")
    common.add_argument("--format", dest="fmt", choices=["csv", "json"], help="Output format (default csv)")
    common.add_argument("--out", help="Write output to this file instead of stdout")
    common.add_argument("--strict", action="store_true", default=None,
                        help="Exit with status 3 when a validity warning is raised")

    physical = argparse.ArgumentParser(add_help=False)
    physical.add_argument("--species", help="Species name (default Rb87)")
    physical.add_argument("--omega-khz", type=float, help="Trap frequency omega / 2 pi in kHz (default 30)")
    physical.add_argument("--ascat-nm", type=float, help="Scattering length in nm (default: species value)")
    physical.add_argument("--xi", type=float, help="Dimensionless coupling; replaces --ascat-nm")
    physical.add_argument("--beta", type=float, help="Induced three-body coefficient (default: closed form)")
    physical.add_argument("--u3-intrinsic-hz", type=float, help="Intrinsic three-body energy in Hz")
    physical.add_argument("--effective-range-nm", type=float,
                          help="Apply the effective-range correction at k = 1/sigma")

    parser = argparse.ArgumentParser(
        prog="latticeeft",
        description="Effective two- and three-body interactions in a deep optical-lattice site",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    beta = subparsers.add_parser("beta", parents=[common], help="Convergence of beta with the cutoff")
    beta.add_argument("--cutoff", type=int, help="Cutoff in units of hbar omega (default 4)")

    subparsers.add_parser("couplings", parents=[common, physical], help="Derived couplings in lab units")

    revival = subparsers.add_parser("revival", parents=[common, physical], help="Collapse and revival visibility")
    revival.add_argument("--nbar", type=float, help="Mean atom number per site (default 2.5)")
    revival.add_argument("--u3-hz", type=float, nargs="+", help="Extra curves with U3/h set to these values")
    revival.add_argument("--tmax-ms", type=float, help="Last hold time in ms")
    revival.add_argument("--tmax-over-t2", type=float, help="Last hold time in units of t2 (default 6)")
    revival.add_argument("--steps", type=int, help="Number of grid points (default 2001)")
    revival.add_argument("--inhom-eps", type=float, help="Fractional U2 depression at the cloud edge")
    revival.add_argument("--diameter", type=int, help="Cloud diameter in lattice sites")

    sweep = subparsers.add_parser("sweep", parents=[common], help="U2 and U3 versus xi")
    sweep.add_argument("--xi-min", type=float, help="Lowest xi (default -0.1)")
    sweep.add_argument("--xi-max", type=float, help="Highest xi (default 0.1)")
    sweep.add_argument("--xi-steps", type=int, help="Number of xi values (default 41)")
    sweep.add_argument("--beta", type=float, help="Induced three-body coefficient (default: closed form)")
    sweep.add_argument("--omega-khz", type=float, help="Add columns in Hz and ms for this trap frequency")
    sweep.add_argument("--u3-intrinsic-hz", type=float, help="Intrinsic three-body energy in Hz")

    ed = subparsers.add_parser("ed", parents=[common], help="Exact diagonalization check")
    ed.add_argument("--n-atoms", type=int, help="Number of atoms (default 3)")
    ed.add_argument("--cutoff", type=int, help="Cutoff in units of hbar omega (default 4)")
    ed.add_argument("--xi", type=float, help="Bare coupling in units of hbar omega (default 0.07)")

    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON config file; keys may use dashes or underscores"""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"Config file {path} must hold a JSON object")
    normalized = {key.replace("-", "_"): value for key, value in data.items()}
    if "format" in normalized:
        normalized["fmt"] = normalized.pop("format")
    return normalized


def resolve_config(args: argparse.Namespace) -> Tuple[RunConfig, Optional[str]]:
    """Merge config-file values with command-line flags; flags win"""
    merged: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    merged.update({key: value for key, value in vars(args).items() if value is not None})
    log_level = merged.pop("log_level", None)
    merged.pop("config", None)
    fields = RunConfig.model_fields
    unknown = sorted(key for key in merged if key not in fields)
    if unknown:
        logger.warning(f"Ignoring unknown configuration keys: {', '.join(unknown)}")
    return RunConfig(**{key: value for key, value in merged.items() if key in fields}), log_level


def render(result: CommandResult, fmt: str) -> str:
    """CSV with 17 significant digits or JSON from the report model"""
    if fmt == "json":
        return result.payload.model_dump_json(indent=2) + "\n"
    table = result.table if result.table is not None else result.payload
    return table.to_csv(index=False, float_format=f"%.{settings.csv_precision}g", lineterminator="\n")


def write_output(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"Wrote {len(text)} bytes to {out}")
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the CLI"""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config, log_level = resolve_config(args)
    except (OSError, ValueError) as e:
        print(f"latticeeft: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=(log_level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    start_time = time.time()
    try:
        result = COMMANDS[config.subcommand](config)
    except ValueError as e:
        logger.error(f"{config.subcommand} failed: {e}")
        print(f"latticeeft: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"Unhandled exception in {config.subcommand}: {e}")
        raise

    write_output(render(result, config.fmt), config.out)
    elapsed = (time.time() - start_time) * 1000
    logger.info(f"{config.subcommand} completed in {elapsed:.2f}ms")

    if result.warnings:
        for warning in result.warnings:
            print(f"latticeeft: warning: {warning}", file=sys.stderr)
        if config.strict:
            return EXIT_VALIDITY
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""
Tests for physical parameters, couplings and the effective on-site energies
"""

import math

import numpy as np
import pytest

from latticeeft.constants import NANOMETER, PLANCK, get_species
from latticeeft.models import CouplingSet
from latticeeft.services.couplings import (
    PoleProximityError, check_validity, couplings_from_xi, derive_couplings,
    effective_scattering_length, energy_gap, extract_intrinsic_u3, interaction_energy,
    physical_params
)
from latticeeft.services.renorm import beta_closed_form


@pytest.fixture
def rb87():
    return physical_params("Rb87", omega_khz=30.0, a_scat_nm=5.3)


@pytest.fixture
def lab_couplings():
    """U2/h = 2 kHz and U3/h = -200 Hz at omega / 2 pi = 30 kHz"""
    hbar_omega = PLANCK * 30e3
    return CouplingSet(xi=2e3 / 30e3, u2=PLANCK * 2e3, u3=-PLANCK * 200.0, hbar_omega=hbar_omega)


def test_rb87_anchors(rb87):
    """Rb87 at 30 kHz and 5.3 nm"""
    c = derive_couplings(rb87)
    assert rb87.sigma / NANOMETER == pytest.approx(62.26, abs=0.05)
    assert 0.066 <= c.xi <= 0.072
    assert 1.9e3 <= c.u2_hz <= 2.1e3
    assert -210.0 <= c.u3_hz <= -180.0
    assert 0.48e-3 <= c.t2 <= 0.53e-3
    assert c.beta == beta_closed_form()
    assert c.validity_warnings == []


def test_zero_scattering_length():
    p = physical_params("Rb87", omega_khz=30.0, a_scat_nm=0.0, u3_intrinsic_hz=40.0)
    c = derive_couplings(p)
    assert c.xi == 0.0
    assert c.u2 == 0.0
    assert c.u3 == p.u3_intrinsic
    assert math.isinf(c.t2)


def test_intrinsic_u3_is_additive():
    base = derive_couplings(physical_params(a_scat_nm=5.3))
    shifted = derive_couplings(physical_params(a_scat_nm=5.3, u3_intrinsic_hz=50.0))
    assert shifted.u3_hz - base.u3_hz == pytest.approx(50.0, abs=1e-9)
    assert extract_intrinsic_u3(shifted.u3, shifted) == pytest.approx(50.0 * PLANCK, rel=1e-9)


def test_derive_couplings_homogeneous():
    """Scaling omega by s scales xi by s^(1/2) and U2 by s^(3/2)"""
    slow = derive_couplings(physical_params(omega_khz=10.0, a_scat_nm=5.3))
    fast = derive_couplings(physical_params(omega_khz=40.0, a_scat_nm=5.3))
    assert fast.xi / slow.xi == pytest.approx(2.0, rel=1e-12)
    assert fast.u2 / slow.u2 == pytest.approx(8.0, rel=1e-12)


def test_induced_three_body_curve():
    """U3 / hbar omega = -beta xi^2 for positive and negative xi"""
    assert beta_closed_form() == pytest.approx(1.3442, abs=1e-4)
    for xi in np.linspace(-0.1, 0.1, 21):
        c = couplings_from_xi(float(xi), 1.0)
        assert c.u3 == pytest.approx(-beta_closed_form() * xi * xi, rel=1e-12, abs=1e-300)
        assert c.u3 <= 0.0


def test_validity_warnings():
    assert couplings_from_xi(0.25, 1.0).validity_warnings
    assert couplings_from_xi(-0.25, 1.0).validity_warnings
    assert couplings_from_xi(0.07, 1.0).validity_warnings == []
    c = couplings_from_xi(0.07, 1.0)
    assert check_validity(10, c) is not None
    assert check_validity(3, c) is None


def test_physical_params_errors():
    with pytest.raises(ValueError):
        physical_params("Cs133")
    with pytest.raises(ValueError):
        physical_params(omega_khz=0.0)
    with pytest.raises(ValueError):
        get_species("K40")


def test_interaction_energy_examples(lab_couplings):
    c = lab_couplings
    assert interaction_energy(0, c) == 0.0
    assert interaction_energy(1, c) == 0.0
    assert interaction_energy(2, c) == pytest.approx(c.u2, rel=1e-15)
    assert interaction_energy(3, c) == pytest.approx(3 * c.u2 + c.u3, rel=1e-14)
    assert interaction_energy(5, c) / PLANCK == pytest.approx(18e3, rel=1e-12)
    with pytest.raises(ValueError):
        interaction_energy(-1, c)


def test_energy_gap_examples(lab_couplings):
    c = lab_couplings
    assert energy_gap(0, c) == 0.0
    assert energy_gap(1, c) == c.u2
    assert energy_gap(3, c) == pytest.approx(3 * c.u2 + 3 * c.u3, rel=1e-14)


def test_energy_gap_telescopes(lab_couplings):
    c = lab_couplings
    for n in range(12):
        total = sum(energy_gap(k, c) for k in range(n))
        assert total == pytest.approx(interaction_energy(n, c), rel=1e-12, abs=1e-40)


def test_finite_differences(lab_couplings):
    """Third difference of E(n) is U3; with U3 = 0 the second difference is U2"""
    c = lab_couplings
    n = np.arange(20)
    energies = interaction_energy(n, c)
    assert np.allclose(np.diff(energies, 3), c.u3, rtol=1e-9, atol=1e-12 * abs(c.u2))

    two_body = couplings_from_xi(c.xi, c.hbar_omega, beta=0.0)
    energies = interaction_energy(n, two_body)
    assert np.allclose(np.diff(energies, 2), two_body.u2, rtol=1e-12, atol=0.0)


def test_effective_scattering_length(rb87):
    a = 5.3 * NANOMETER
    assert effective_scattering_length(a, 8.0 * NANOMETER, 0.0) == pytest.approx(a, rel=1e-15)
    assert effective_scattering_length(a, 0.0, 1e7) == pytest.approx(a, rel=1e-15)

    a_eff = effective_scattering_length(a, 8.0 * NANOMETER, 1.0 / rb87.sigma)
    assert 0.004 <= a_eff / a - 1.0 <= 0.007


def test_effective_range_pole():
    a = 5.3 * NANOMETER
    k = 1.0 / (62.0 * NANOMETER)
    r_e = 2.0 / (a * k * k)
    with pytest.raises(PoleProximityError):
        effective_scattering_length(a, r_e, k)
    with pytest.raises(ValueError):
        effective_scattering_length(0.0, 8.0 * NANOMETER, k)


def test_derive_couplings_with_effective_range():
    p = physical_params(a_scat_nm=5.3, r_e_nm=8.0)
    plain = derive_couplings(p)
    corrected = derive_couplings(p, k=1.0 / p.sigma)
    assert 1.004 <= corrected.xi / plain.xi <= 1.007


if __name__ == "__main__":
    pytest.main([__file__])

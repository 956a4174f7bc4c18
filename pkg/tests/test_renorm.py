"""
Tests for the second-order sums, counter-term and beta
"""

import pytest

from latticeeft.services.renorm import (
    beta, beta_closed_form, counterterm, delta_u3, divergence_exponent,
    raw_second_order_shift, raw_second_order_shift_enumerated, raw_two_body_sum, renorm_service,
    renormalized_second_order_shift, three_body_channel_sum, three_body_shell_weights,
    three_body_shell_weights_enumerated, two_body_shell_weights, two_body_sum_relative
)


def test_beta_first_shells():
    """Shell E=2 contributes 3 * (1/8) / 2; shell E=4 adds 15/128 / 4"""
    assert beta(2) == pytest.approx(1.125, abs=1e-12)
    assert beta(3) == beta(2)
    assert beta(4) == pytest.approx(666.0 / 512.0, abs=1e-12)
    assert beta(4) == pytest.approx(1.30, abs=0.01)


def test_beta_converges_to_closed_form():
    assert beta_closed_form() == pytest.approx(1.3442220, abs=1e-7)
    assert abs(beta(100) - beta_closed_form()) <= 5e-4
    assert beta(100) == pytest.approx(beta_closed_form(), abs=1e-10)
    assert beta(20) < beta(40) <= beta(100)
    assert beta(100) <= beta_closed_form() + 1e-9


def test_beta_non_decreasing():
    """Partial sums only add non-negative shells"""
    partials = [beta(cutoff) for cutoff in range(1, 201)]
    assert partials[0] == 0.0
    assert all(later >= earlier for earlier, later in zip(partials, partials[1:]))
    assert max(partials) <= beta_closed_form() + 1e-9


def test_three_body_shell_weights():
    weights = three_body_shell_weights(4)
    assert weights[0] == 1.0
    assert weights[1] == 0.0
    assert weights[2] == pytest.approx(3.0 / 8.0, abs=1e-15)
    assert weights[3] == 0.0
    assert weights[4] == pytest.approx(15.0 / 128.0, abs=1e-15)


def test_three_body_shell_weights_match_enumeration():
    """Per-axis polynomial cube reproduces the mode-by-mode shell sums"""
    fast = three_body_shell_weights(16)
    slow = three_body_shell_weights_enumerated(16)
    assert fast == pytest.approx(slow, rel=1e-13, abs=1e-300)


def test_beta_large_cutoff():
    assert beta(1000) == pytest.approx(beta_closed_form(), abs=1e-12)


def test_counterterm_hand_values():
    """No even-parity pair state lies at E = 1; E = 2 gives 3/4 U2^2 / hbar omega"""
    assert counterterm(1, 0.3) == 0.0
    assert counterterm(2, 1.0) == pytest.approx(0.75, abs=1e-14)
    assert two_body_shell_weights(2)[2] == pytest.approx(1.5, abs=1e-14)


@pytest.mark.parametrize("cutoff", [2, 4, 8])
def test_two_body_shift_cancels(cutoff):
    """Raw shift plus counter-term vanishes for two atoms"""
    u2 = 0.07
    assert raw_second_order_shift(2, cutoff, u2) + counterterm(cutoff, u2) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("cutoff", [2, 4, 8])
@pytest.mark.parametrize("n", [3, 4, 5])
def test_renormalized_shift_is_three_body(cutoff, n):
    """Channel formula and renormalized n-atom shift give the same delta U3"""
    u2 = 0.07
    expected = delta_u3(cutoff, u2) * n * (n - 1) * (n - 2) / 6.0
    assert renormalized_second_order_shift(n, cutoff, u2) == pytest.approx(expected, rel=1e-12)


def test_raw_shift_edge_cases():
    assert raw_second_order_shift(0, 4, 0.1) == 0.0
    assert raw_second_order_shift(1, 4, 0.1) == 0.0
    with pytest.raises(ValueError):
        raw_second_order_shift(-1, 4, 0.1)
    with pytest.raises(ValueError):
        raw_second_order_shift(3, 0, 0.1)
    with pytest.raises(ValueError):
        raw_second_order_shift(-1, 80, 0.1)
    with pytest.raises(ValueError):
        raw_second_order_shift_enumerated(3, 41, 0.1)
    assert raw_second_order_shift(3, 41, 0.1) < 0.0


def test_factorized_shift_matches_enumeration():
    """Channel-regrouped shift agrees with the pair-by-pair sum"""
    u2 = 0.07
    for cutoff in (2, 5, 8, 12):
        for n in (2, 3, 4, 5):
            regrouped = -u2 * u2 * (
                n * (n - 1) * (n - 2) * three_body_channel_sum(cutoff)
                + n * (n - 1) / 2.0 * raw_two_body_sum(cutoff)
            )
            enumerated = raw_second_order_shift_enumerated(n, cutoff, u2)
            assert regrouped == pytest.approx(enumerated, rel=1e-12)


@pytest.mark.parametrize("cutoff", [41, 80, 160])
def test_shift_above_enumeration_bound(cutoff):
    """Large cutoffs use the channel sums and still leave only delta U3"""
    u2 = 0.07
    assert counterterm(cutoff, 1.0) == pytest.approx(raw_two_body_sum(cutoff), rel=1e-12)
    assert raw_second_order_shift(2, cutoff, u2) + counterterm(cutoff, u2) == pytest.approx(0.0, abs=1e-12)
    for n in (3, 4, 5):
        expected = delta_u3(cutoff, u2) * n * (n - 1) * (n - 2) / 6.0
        assert renormalized_second_order_shift(n, cutoff, u2) == pytest.approx(expected, rel=1e-9)


def test_counterterm_square_root_growth():
    """Quadrupling the cutoff roughly doubles A"""
    ratio = counterterm(640, 1.0) / counterterm(160, 1.0)
    assert 1.8 <= ratio <= 2.2
    assert renorm_service.summarize(80).counterterm == pytest.approx(counterterm(80, 1.0), rel=1e-15)


def test_counterterm_matches_channel_sum():
    """A = U2^2 times the mode-by-mode pair sum"""
    for cutoff in (2, 6, 10):
        assert counterterm(cutoff, 1.0) == pytest.approx(raw_two_body_sum(cutoff), rel=1e-12)


@pytest.mark.parametrize("cutoff", [4, 10, 20, 40, 81])
def test_relative_coordinate_sum(cutoff):
    """Centre-of-mass / relative decomposition reproduces the pair sum"""
    assert raw_two_body_sum(cutoff) == pytest.approx(two_body_sum_relative(cutoff), rel=1e-12)


def test_delta_u3_scaling():
    u2 = 0.05
    assert delta_u3(4, u2) == pytest.approx(-beta(4) * u2 * u2, rel=1e-14)
    assert delta_u3(4, u2, hbar_omega=2.0) == pytest.approx(delta_u3(4, u2) / 2.0, rel=1e-14)
    assert three_body_channel_sum(4) == pytest.approx(beta(4) / 6.0, rel=1e-15)


def test_divergence_exponent_square_root_law():
    """Raw pair sum grows as cutoff^(1/2)"""
    assert divergence_exponent([20, 40, 80, 160]) == pytest.approx(0.5, abs=0.05)


def test_divergence_exponent_three_body_tail_converges():
    assert divergence_exponent([4, 8, 12, 16], channel="three_body_tail") < 0.0


def test_divergence_exponent_rejects_bad_input():
    with pytest.raises(ValueError):
        divergence_exponent([20, 40, 80])
    with pytest.raises(ValueError):
        divergence_exponent([20, 40, 80, 160], channel="four_body")
    with pytest.raises(ValueError):
        divergence_exponent([0, 40, 80, 160])


def test_summarize():
    summary = renorm_service.summarize(4)
    assert summary.beta == 6.0 * summary.s3
    assert summary.beta == pytest.approx(beta(4), abs=1e-15)
    assert len(summary.shell_beta) == 4
    assert summary.shell_beta[1] == pytest.approx(1.125, abs=1e-12)
    assert summary.counterterm == pytest.approx(summary.raw_two_body_sum, rel=1e-12)
    with pytest.raises(ValueError):
        renorm_service.summarize(0)


if __name__ == "__main__":
    pytest.main([__file__])

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.constants import MHZ, SpreadShape
from app.services.readout import ashman_d
from app.services.transmission import (
    ashman_peak_drive,
    bistability_transmission,
    difference_for_peak,
    effective_cooperativity,
    saturable_rates,
    transmission_ratio_axial_avg,
    transmission_ratio_axial_avg_quadrature,
    transmission_ratio_broadened,
    transmission_ratio_fixed,
)

PAPER_C = 2.29


def test_fixed_coupling_ratio():
    assert transmission_ratio_fixed(2.3) == pytest.approx(0.0319, abs=1e-4)
    assert transmission_ratio_fixed(0.0) == 1.0


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.0, max_value=50.0))
def test_axial_average_closed_form_matches_quadrature(C):
    assert transmission_ratio_axial_avg(C) == pytest.approx(
        transmission_ratio_axial_avg_quadrature(C), abs=1e-9
    )


def test_axial_average_value():
    # the quoted 0.27 is not reproduced by the uniform average
    assert transmission_ratio_axial_avg(PAPER_C) == pytest.approx(0.249, abs=0.002)


def test_ratios_reject_negative_cooperativity():
    for fn in (transmission_ratio_fixed, transmission_ratio_axial_avg, transmission_ratio_axial_avg_quadrature):
        with pytest.raises(ValueError):
            fn(-0.1)
    with pytest.raises(ValueError):
        transmission_ratio_broadened(1.0, -1.0)


@pytest.mark.parametrize("shape", list(SpreadShape))
def test_broadening_without_spread_is_axial_average(shape):
    assert transmission_ratio_broadened(PAPER_C, 0.0, shape) == pytest.approx(
        transmission_ratio_axial_avg(PAPER_C), rel=1e-8
    )


@pytest.mark.parametrize("shape", list(SpreadShape))
def test_broadening_raises_ratio_monotonically(shape):
    spreads = [0.0, 1.0, 2.0, 4.0, 8.0]
    ratios = [transmission_ratio_broadened(PAPER_C, s * MHZ, shape) for s in spreads]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1.0


def test_default_broadening_matches_observed_ratio():
    assert 0.35 <= transmission_ratio_broadened(PAPER_C, 4.0 * MHZ) <= 0.45
    # a gaussian of the same rms falls just short
    assert transmission_ratio_broadened(PAPER_C, 4.0 * MHZ, SpreadShape.GAUSSIAN) < 0.35


def test_bistability_limits():
    x, ratio = bistability_transmission(0.0, PAPER_C)
    assert x == 0.0
    assert ratio == pytest.approx(transmission_ratio_fixed(PAPER_C))

    x, ratio = bistability_transmission(3.0, 0.0)
    assert (x, ratio) == (3.0, 1.0)

    _, weak = bistability_transmission(1e-9, PAPER_C)
    assert weak == pytest.approx(transmission_ratio_fixed(PAPER_C), rel=1e-6)

    _, strong = bistability_transmission(1e9, PAPER_C)
    assert strong == pytest.approx(1.0, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(
    drive=st.floats(min_value=1e-6, max_value=1e6),
    C=st.floats(min_value=0.01, max_value=20.0),
)
def test_bistability_root_satisfies_state_equation(drive, C):
    x, ratio = bistability_transmission(drive, C)
    assert 0.0 <= x <= drive
    residual = x * (1 + 2 * C / (1 + x)) ** 2 - drive
    assert abs(residual) <= 1e-10 * drive
    assert ratio == pytest.approx(x / drive)


def test_saturated_difference():
    y = 1e8
    x, _ = bistability_transmission(y, PAPER_C)
    assert y - x == pytest.approx(4 * PAPER_C, rel=1e-3)

    difference = 2.4e6
    r_high, r_low = saturable_rates(y, PAPER_C, difference)
    assert r_high - r_low == pytest.approx(difference, rel=1e-3)


def test_effective_cooperativity_inverts_weak_ratio():
    C = effective_cooperativity(0.4)
    assert transmission_ratio_fixed(C) == pytest.approx(0.4)
    assert effective_cooperativity(1.0) == 0.0
    with pytest.raises(ValueError):
        effective_cooperativity(0.0)


def test_saturable_rates_need_positive_cooperativity():
    with pytest.raises(ValueError):
        saturable_rates(1.0, 0.0, 2.4e6)
    r_high, r_low = saturable_rates(1.0, 1.0, 2.4e6)
    assert r_high > r_low > 0
    assert math.isfinite(r_high)


def test_ashman_peak_drive_is_a_maximum():
    C = effective_cooperativity(0.4)
    peak = ashman_peak_drive(C)
    assert peak == pytest.approx(1.705, rel=0.02)

    def separation(drive):
        r_high, r_low = saturable_rates(drive, C, 2.4)
        return ashman_d(r_high * 50, r_high * 50, r_low * 50, r_low * 50)

    assert separation(peak) > separation(peak * 1.2)
    assert separation(peak) > separation(peak / 1.2)


def test_difference_for_peak_places_maximum():
    C = effective_cooperativity(0.4)
    difference = difference_for_peak(C, 2.2)
    # below the observed 2.4/us: one fixed coupling cannot match both
    assert difference == pytest.approx(1.50, rel=0.03)
    r_high, _ = saturable_rates(ashman_peak_drive(C), C, difference)
    assert r_high == pytest.approx(2.2)
    with pytest.raises(ValueError):
        difference_for_peak(C, 0.0)
    with pytest.raises(ValueError):
        ashman_peak_drive(0.0)

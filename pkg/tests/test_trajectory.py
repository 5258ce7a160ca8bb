import math

import numpy as np
import pytest

from app.constants import LossModel, Method, TweezerState
from app.schemas import MethodConfig, RateModel
from app.services.readout import miss_probability
from app.services.rng import trajectory_rng
from app.services.trajectory import (
    apply_prep_error,
    apply_repump,
    photon_rate,
    run_batch,
    simulate_interval,
    simulate_measurement,
)

TAU = 25e-6


def _rates(**kwargs):
    base = dict(
        r_bright_per_us=0.76,
        r_dark_per_us=0.0,
        gamma_depump_per_us=0.0,
        p_repump=1.0,
        p_loss_per_detected_photon=0.0,
        eps_prep_f1=0.0,
        eps_prep_f2=0.0,
    )
    base.update(kwargs)
    return RateModel(**base)


def _fluorescence(tau_us=25.0, threshold=1):
    return MethodConfig(method=Method.FLUORESCENCE, tau_us=tau_us, threshold=threshold)


# =========================================================
# STATE MAPS
# =========================================================
def test_prep_error_trivial_cases():
    rng = trajectory_rng(1)
    model = _rates(eps_prep_f1=0.5, eps_prep_f2=0.5)
    assert apply_prep_error(TweezerState.EMPTY, model, rng) is TweezerState.EMPTY
    assert apply_prep_error(TweezerState.F2, _rates(), rng) is TweezerState.F2
    assert apply_prep_error(TweezerState.F1, _rates(), rng) is TweezerState.F1


def test_prep_error_rate():
    rng = trajectory_rng(2)
    model = _rates(eps_prep_f2=0.03)
    n = 200_000
    flipped = sum(apply_prep_error(TweezerState.F2, model, rng) is TweezerState.F1 for _ in range(n))
    stderr = math.sqrt(0.03 * 0.97 / n)
    assert abs(flipped / n - 0.03) < 4 * stderr


def test_repump():
    rng = trajectory_rng(3)
    assert apply_repump(TweezerState.F1, _rates(p_repump=1.0), rng) is TweezerState.F2
    for state in (TweezerState.EMPTY, TweezerState.LOST, TweezerState.F2):
        assert apply_repump(state, _rates(p_repump=1.0), rng) is state

    model = _rates(p_repump=0.99)
    n = 200_000
    ok = sum(apply_repump(TweezerState.F1, model, rng) is TweezerState.F2 for _ in range(n))
    assert abs(ok / n - 0.99) < 4 * math.sqrt(0.99 * 0.01 / n)


def test_photon_rate_orientation():
    model = _rates(r_bright_per_us=2.2, r_dark_per_us=0.88)
    assert photon_rate(TweezerState.F2, Method.FLUORESCENCE, model) == model.r_bright
    assert photon_rate(TweezerState.F1, Method.FLUORESCENCE, model) == model.r_dark
    assert photon_rate(TweezerState.F2, Method.TRANSMISSION, model) == model.r_dark
    assert photon_rate(TweezerState.EMPTY, Method.TRANSMISSION, model) == model.r_bright
    assert photon_rate(TweezerState.LOST, Method.TRANSMISSION, model) == model.r_bright


# =========================================================
# INTERVAL
# =========================================================
def test_empty_without_background_is_silent():
    rng = trajectory_rng(4)
    result = simulate_interval(TweezerState.EMPTY, _rates(), Method.FLUORESCENCE, TAU, rng)
    assert result.counts == 0
    assert result.end_state is TweezerState.EMPTY


def test_negative_duration_rejected():
    with pytest.raises(ValueError):
        simulate_interval(TweezerState.F2, _rates(), Method.FLUORESCENCE, -1.0, trajectory_rng(0))


def test_counts_are_poisson():
    rng = trajectory_rng(5)
    model = _rates()
    counts = np.array(
        [simulate_interval(TweezerState.F2, model, Method.FLUORESCENCE, TAU, rng).counts for _ in range(40_000)]
    )
    mean = 0.76 * 25
    assert abs(counts.mean() - mean) < 4 * math.sqrt(mean / len(counts))
    assert abs(counts.var() - mean) < 4 * math.sqrt(2 * mean**2 / len(counts))


def test_lost_counts_like_empty():
    model = _rates(r_dark_per_us=0.3)
    for seed in range(50):
        empty = simulate_interval(TweezerState.EMPTY, model, Method.FLUORESCENCE, TAU, trajectory_rng(seed))
        lost = simulate_interval(TweezerState.LOST, model, Method.FLUORESCENCE, TAU, trajectory_rng(seed))
        assert empty.counts == lost.counts
        assert lost.end_state is TweezerState.LOST


def test_depumping_increases_low_count_probability():
    config = _fluorescence()
    n = 20_000
    fractions = []
    for gamma in (0.0, 0.02, 0.1):
        model = _rates(gamma_depump_per_us=gamma)
        outcomes = run_batch(n, TweezerState.F2, config, model, seed=11)
        fractions.append(sum(o.counts1 <= 1 for o in outcomes) / n)
    assert fractions[0] < fractions[1] < fractions[2]


# =========================================================
# MEASUREMENT
# =========================================================
def test_measurement_empty_stays_empty():
    outcome = simulate_measurement(TweezerState.EMPTY, _fluorescence(), _rates(), trajectory_rng(6))
    assert (outcome.counts1, outcome.counts2) == (0, 0)
    assert outcome.actual_initial is TweezerState.EMPTY
    assert outcome.final is TweezerState.EMPTY


def test_repumped_f1_is_bright_in_second_interval():
    outcomes = run_batch(10_000, TweezerState.F1, _fluorescence(), _rates(), seed=7)
    assert all(o.counts1 == 0 for o in outcomes)
    mean = np.mean([o.counts2 for o in outcomes])
    assert abs(mean - 19.0) < 4 * math.sqrt(19.0 / len(outcomes))


def test_total_time_accounting():
    assert _fluorescence().total_time == pytest.approx(50e-6)
    transmission = MethodConfig(method=Method.TRANSMISSION, tau_us=50.0, tau_rp_us=5.0, threshold=77)
    assert transmission.total_time == pytest.approx(105e-6)


@pytest.mark.parametrize("loss_model", list(LossModel))
def test_f2_loses_more_than_f1(loss_model):
    model = _rates(p_loss_per_detected_photon=1e-3, loss_model=loss_model)
    config = _fluorescence()
    n = 10_000
    lost = {}
    for state in (TweezerState.F1, TweezerState.F2):
        outcomes = run_batch(n, state, config, model, seed=8)
        lost[state] = sum(o.final is TweezerState.LOST for o in outcomes) / n
    assert lost[TweezerState.F2] > lost[TweezerState.F1] > 0


def test_no_loss_without_scattering():
    model = _rates(r_dark_per_us=0.5, p_loss_per_detected_photon=1.0)
    outcomes = run_batch(2_000, TweezerState.EMPTY, _fluorescence(), model, seed=9)
    assert all(o.final is TweezerState.EMPTY for o in outcomes)


# =========================================================
# BATCH
# =========================================================
def test_batch_is_deterministic():
    model = _rates(r_dark_per_us=0.01, gamma_depump_per_us=0.01, p_loss_per_detected_photon=1e-3)
    first = run_batch(3_000, TweezerState.F2, _fluorescence(), model, seed=42)
    second = run_batch(3_000, TweezerState.F2, _fluorescence(), model, seed=42)
    assert first == second
    assert [o.seed_index for o in first] == list(range(3_000))


def test_batch_depends_on_seed():
    model = _rates(r_dark_per_us=0.01)
    a = run_batch(500, TweezerState.F2, _fluorescence(), model, seed=42)
    b = run_batch(500, TweezerState.F2, _fluorescence(), model, seed=43)
    assert [o.counts1 for o in a] != [o.counts1 for o in b]


def test_batch_independent_of_worker_count():
    model = _rates(r_dark_per_us=0.01, gamma_depump_per_us=0.01, p_loss_per_detected_photon=1e-3)
    serial = run_batch(5_000, TweezerState.F1, _fluorescence(), model, seed=5, workers=1)
    parallel = run_batch(5_000, TweezerState.F1, _fluorescence(), model, seed=5, workers=4)
    assert serial == parallel


def test_batch_rejects_empty():
    with pytest.raises(ValueError):
        run_batch(0, TweezerState.F2, _fluorescence(), _rates(), seed=1)


@pytest.mark.slow
@pytest.mark.parametrize("gamma_per_us", [0.01, 0.05])
def test_miss_probability_matches_monte_carlo(gamma_per_us):
    model = _rates(gamma_depump_per_us=gamma_per_us)
    n = 100_000
    outcomes = run_batch(n, TweezerState.F2, _fluorescence(), model, seed=13)
    observed = sum(o.counts1 <= 1 for o in outcomes) / n
    expected = miss_probability(model.r_bright, model.r_dark, model.gamma_depump, TAU, 1)
    assert abs(observed - expected) < 3.5 * math.sqrt(expected * (1 - expected) / n)

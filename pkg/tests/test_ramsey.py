import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.constants import Method
from app.schemas import RamseyConfig, SystemParams
from app.services.ramsey import (
    QubitState,
    backaction,
    coherence_factor,
    contrast_vs_distance,
    fit_fringe,
    rotate,
    run_ramsey,
    run_reference,
)

HALF_PI = math.pi / 2


def _physical(state: QubitState) -> bool:
    return state.w**2 + abs(2 * state.coherence) ** 2 <= 1 + 1e-12


# =========================================================
# ROTATIONS
# =========================================================
def test_two_half_pi_pulses_flip_the_pole():
    state = rotate(rotate(QubitState.f2_pole(), 0.0, HALF_PI), 0.0, HALF_PI)
    assert state.w == pytest.approx(-1.0, abs=1e-12)
    assert abs(state.coherence) < 1e-12


def test_half_pi_pulse_reaches_equator():
    state = rotate(QubitState.f2_pole(), 0.0, HALF_PI)
    assert state.w == pytest.approx(0.0, abs=1e-12)
    assert abs(state.coherence) == pytest.approx(0.5, abs=1e-12)


def test_zero_angle_is_identity():
    state = QubitState(0.3, 0.2 + 0.1j)
    out = rotate(state, 1.234, 0.0)
    assert out.w == pytest.approx(state.w, abs=1e-15)
    assert out.coherence == pytest.approx(state.coherence, abs=1e-15)


def test_unphysical_state_rejected():
    with pytest.raises(ValueError):
        QubitState(1.0, 0.5)


_angles = st.floats(min_value=-2 * math.pi, max_value=2 * math.pi)


@st.composite
def qubit_states(draw):
    theta = draw(st.floats(min_value=0.0, max_value=math.pi))
    phi = draw(_angles)
    r = draw(st.floats(min_value=0.0, max_value=1.0))
    vector = r * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    return QubitState.from_bloch(vector)


@settings(max_examples=100, deadline=None)
@given(state=qubit_states(), axis=_angles, angle=_angles)
def test_rotation_preserves_norm(state, axis, angle):
    out = rotate(state, axis, angle)
    assert np.linalg.norm(out.bloch_vector()) == pytest.approx(np.linalg.norm(state.bloch_vector()), abs=1e-12)
    assert _physical(out)


@settings(max_examples=100, deadline=None)
@given(state=qubit_states(), axis=_angles, a=_angles, b=_angles)
def test_rotations_compose(state, axis, a, b):
    two_step = rotate(rotate(state, axis, a), axis, b)
    one_step = rotate(state, axis, a + b)
    np.testing.assert_allclose(two_step.bloch_vector(), one_step.bloch_vector(), atol=1e-12)


# =========================================================
# BACKACTION
# =========================================================
def test_far_away_atom_is_untouched(system):
    config = RamseyConfig(method=Method.FLUORESCENCE, distance_um=1e4)
    state = rotate(QubitState.f2_pole(), 0.0, HALF_PI)
    assert backaction(state, config, system) == state


def test_atom_at_center_fully_dephased(system):
    config = RamseyConfig(method=Method.FLUORESCENCE, distance_um=0.0, n_scatter_at_center=100.0)
    state = backaction(rotate(QubitState.f2_pole(), 0.0, HALF_PI), config, system)
    assert abs(state.coherence) < 1e-40
    assert state.w == pytest.approx(0.0, abs=1e-12)


def test_calibrated_recovery_distances(system):
    fluorescence = RamseyConfig(method=Method.FLUORESCENCE, distance_um=34.5)
    transmission = RamseyConfig(method=Method.TRANSMISSION, distance_um=46.0)
    assert coherence_factor(fluorescence, system) >= 0.97
    assert coherence_factor(transmission, system) >= 0.97

    # coherence starts to suffer around 20 μm and 35 μm respectively
    assert coherence_factor(fluorescence.model_copy(update={"distance_um": 20.0}), system) < 0.97
    assert coherence_factor(transmission.model_copy(update={"distance_um": 30.0}), system) < 0.97


@given(d1=st.floats(min_value=0.0, max_value=100.0), d2=st.floats(min_value=0.0, max_value=100.0))
def test_coherence_factor_nondecreasing_in_distance(d1, d2):
    system = SystemParams()
    near, far = sorted((d1, d2))
    for method in Method:
        a = coherence_factor(RamseyConfig(method=method, distance_um=near), system)
        b = coherence_factor(RamseyConfig(method=method, distance_um=far), system)
        assert a <= b


def test_phase_kick_keeps_population(system):
    config = RamseyConfig(method=Method.FLUORESCENCE, distance_um=25.0, phase_kick_rad=0.7)
    state = rotate(QubitState.f2_pole(), 0.0, HALF_PI)
    out = backaction(state, config, system)
    assert out.w == state.w
    assert np.angle(out.coherence) - np.angle(state.coherence) == pytest.approx(0.7)
    assert _physical(out)


def test_backaction_commutes_with_z_phase(system):
    config = RamseyConfig(method=Method.TRANSMISSION, distance_um=30.0)
    state = rotate(QubitState.f2_pole(), 0.3, HALF_PI)
    phase = complex(math.cos(1.1), math.sin(1.1))
    a = backaction(state.scaled(phase), config, system)
    b = backaction(state, config, system).scaled(phase)
    assert a.coherence == pytest.approx(b.coherence, abs=1e-15)


# =========================================================
# FRINGE FIT
# =========================================================
PHASES = [2 * math.pi * k / 16 for k in range(16)]


def test_noiseless_fringe_recovery():
    fit = fit_fringe(PHASES, [0.5 + 0.3 * math.cos(p) for p in PHASES])
    assert fit.contrast == pytest.approx(0.6, abs=1e-9)
    assert fit.phase_offset == pytest.approx(0.0, abs=1e-9)
    assert fit.baseline == pytest.approx(0.5, abs=1e-9)


@given(
    contrast=st.floats(min_value=0.05, max_value=1.0),
    offset=st.floats(min_value=-3.0, max_value=3.0),
    baseline=st.floats(min_value=0.3, max_value=0.7),
)
def test_fit_recovers_injected_parameters(contrast, offset, baseline):
    p = [baseline + 0.5 * contrast * math.cos(x - offset) for x in PHASES]
    fit = fit_fringe(PHASES, p)
    assert fit.contrast == pytest.approx(contrast, abs=1e-9)
    assert fit.phase_offset == pytest.approx(offset, abs=1e-9)
    assert fit.baseline == pytest.approx(baseline, abs=1e-9)


def test_flat_fringe_has_zero_contrast():
    assert fit_fringe(PHASES, [0.4] * 16).contrast == pytest.approx(0.0, abs=1e-12)


def test_degenerate_phase_set_rejected():
    with pytest.raises(ValueError):
        fit_fringe([0.0, 0.0, 0.0, 0.0], [0.1, 0.2, 0.3, 0.4])
    with pytest.raises(ValueError):
        fit_fringe([0.0, 1.0], [0.1, 0.2, 0.3])


# =========================================================
# SIMULATION
# =========================================================
def test_ideal_reference_run_has_full_contrast(system):
    config = RamseyConfig(method=None, ideal_readout=True, n_shots=4000)
    result = run_ramsey(config, system, None, None, seed=1)
    assert result.contrast > 0.97
    assert all(0.0 <= p <= 1.0 for p in result.p_f1)
    # P(F1) = (1 + cos φ)/2 under this sign convention
    assert result.p_f1[0] > 0.97
    assert result.p_f1[8] < 0.03


def test_fully_dephased_fringe_is_flat(system):
    config = RamseyConfig(method=Method.FLUORESCENCE, distance_um=0.0, n_scatter_at_center=100.0, ideal_readout=True)
    result = run_ramsey(config, system, None, None, seed=2)
    assert result.contrast < 0.1


def test_reference_contrast_factor(system):
    config = RamseyConfig(method=None, ideal_readout=True, reference_contrast=0.6, n_shots=20_000)
    result = run_ramsey(config, system, None, None, seed=3)
    assert result.contrast == pytest.approx(0.6, abs=0.03)


def test_transport_dephasing(system):
    config = RamseyConfig(method=None, ideal_readout=True, t2_star_us=200.0, transport_time_us=200.0, n_shots=20_000)
    result = run_ramsey(config, system, None, None, seed=4)
    assert result.contrast == pytest.approx(math.exp(-1.0), abs=0.03)


def test_transmission_recovered_at_46_um(system):
    config = RamseyConfig(method=Method.TRANSMISSION, distance_um=46.0, ideal_readout=True, n_shots=20_000)
    result = run_ramsey(config, system, None, None, seed=5)
    reference = run_reference(config, system, None, None, seed=5)
    assert result.contrast / reference.contrast >= 0.97


def test_run_is_deterministic_and_worker_independent(system, fluorescence):
    protocol, rates = fluorescence
    config = RamseyConfig(method=Method.FLUORESCENCE, distance_um=25.0, n_shots=200, phases=PHASES[:8])
    serial = run_ramsey(config, system, protocol, rates, seed=6)
    parallel = run_ramsey(config, system, protocol, rates, seed=6, workers=4)
    assert serial == parallel


def test_full_readout_pipeline_keeps_most_contrast(system, fluorescence):
    protocol, rates = fluorescence
    config = RamseyConfig(method=None, n_shots=3000)
    result = run_ramsey(config, system, protocol, rates, seed=7)
    assert 0.9 < result.contrast <= 1.0


def test_contrast_vs_distance_recovers(system):
    config = RamseyConfig(method=Method.FLUORESCENCE, ideal_readout=True, n_shots=5000)
    curve = contrast_vs_distance([0.0, 15.0, 40.0], config, system, None, None, seed=8)
    values = [r.normalized_contrast for _, r in curve]
    assert values[0] < 0.1
    assert values[-1] > 0.95
    assert [d for d, _ in curve] == [0.0, 15.0, 40.0]


def test_contrast_vs_distance_requires_points(system):
    with pytest.raises(ValueError):
        contrast_vs_distance([], RamseyConfig(), system, None, None, seed=1)

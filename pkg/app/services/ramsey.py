# app/services/ramsey.py
"""
Mid-circuit Ramsey benchmark on a spectator atom B.

B is a clock qubit {|F=1,m_F=0>, |F=2,m_F=0>} held as a Bloch vector
(x, y, w) with w = P(F2) - P(F1) and coherence c = (x + iy)/2.
Sequence per shot: R_x(π/2), measurement of atom A (backaction on B),
transport, R_φ(π/2), readout of B.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from app.constants import UM, Method, TweezerState
from app.logger import log
from app.model_config import get_method_defaults
from app.schemas import MethodConfig, RamseyConfig, RateModel, SystemParams
from app.services.readout import classify_two_interval
from app.services.rng import STREAM_RAMSEY, STREAM_RAMSEY_REFERENCE, trajectory_rng
from app.services.trajectory import simulate_measurement

_PHYSICAL_TOLERANCE = 1e-12


# =========================================================
# QUBIT
# =========================================================
@dataclass(frozen=True)
class QubitState:
    w: float
    coherence: complex

    def __post_init__(self):
        if self.w**2 + abs(2 * self.coherence) ** 2 > 1 + _PHYSICAL_TOLERANCE:
            raise ValueError(f"unphysical Bloch vector (w={self.w}, c={self.coherence})")

    @classmethod
    def f2_pole(cls) -> "QubitState":
        return cls(1.0, 0j)

    @classmethod
    def from_bloch(cls, vector: np.ndarray) -> "QubitState":
        x, y, w = (float(v) for v in vector)
        return cls(w, complex(x, y) / 2)

    def bloch_vector(self) -> np.ndarray:
        return np.array([2 * self.coherence.real, 2 * self.coherence.imag, self.w])

    @property
    def p_f1(self) -> float:
        return min(max((1.0 - self.w) / 2.0, 0.0), 1.0)

    def scaled(self, factor: complex) -> "QubitState":
        return QubitState(self.w, self.coherence * factor)


def rotate(state: QubitState, axis_phase: float, angle: float) -> QubitState:
    """Rotation by `angle` about the equatorial axis at azimuth `axis_phase`."""
    axis = np.array([math.cos(axis_phase), math.sin(axis_phase), 0.0])
    vector = Rotation.from_rotvec(angle * axis).apply(state.bloch_vector())
    return QubitState.from_bloch(vector)


# =========================================================
# BACKACTION
# =========================================================
def backaction_waist(config: RamseyConfig, system: SystemParams) -> float:
    if config.backaction_waist_um is not None:
        return config.backaction_waist_um * UM
    if config.method is Method.TRANSMISSION:
        return system.w0_cavity
    return system.w_probe


def scatter_at_center(config: RamseyConfig) -> float:
    if config.n_scatter_at_center is not None:
        return config.n_scatter_at_center
    if config.method is None:
        return 0.0
    return float(get_method_defaults(config.method.value)["n_scatter_at_center"])


def coherence_factor(config: RamseyConfig, system: SystemParams) -> float:
    """exp(-N0 exp(-2d²/w²)): survival of B's coherence during A's readout."""
    if config.method is None:
        return 1.0
    w = backaction_waist(config, system)
    scattered = scatter_at_center(config) * math.exp(-2.0 * config.distance**2 / w**2)
    return math.exp(-scattered)


def backaction(state: QubitState, config: RamseyConfig, system: SystemParams) -> QubitState:
    if config.method is None:
        return state
    factor = coherence_factor(config, system) * complex(math.cos(config.phase_kick_rad), math.sin(config.phase_kick_rad))
    return state.scaled(factor)


def _final_state(phase: float, config: RamseyConfig, system: SystemParams) -> QubitState:
    state = rotate(QubitState.f2_pole(), 0.0, math.pi / 2)
    state = state.scaled(config.reference_contrast)
    state = backaction(state, config, system)
    if config.t2_star is not None:
        state = state.scaled(math.exp(-config.transport_time / config.t2_star))
    return rotate(state, phase, math.pi / 2)


# =========================================================
# FRINGE
# =========================================================
@dataclass(frozen=True)
class FringeFit:
    contrast: float
    phase_offset: float
    baseline: float


def fit_fringe(phases: Sequence[float], probabilities: Sequence[float]) -> FringeFit:
    """
    Least squares for A + (c/2) cos(φ - φ0), linear in (A, (c/2)cos φ0, (c/2)sin φ0).
    """
    phi = np.asarray(phases, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    if phi.shape != p.shape:
        raise ValueError("phases and probabilities must have the same length")
    design = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    coeffs, _, rank, _ = np.linalg.lstsq(design, p, rcond=None)
    if rank < 3:
        raise ValueError("phase set does not determine a fringe (rank-deficient design)")
    baseline, a, b = coeffs
    amplitude = math.hypot(a, b)
    phase_offset = math.atan2(b, a) if amplitude > 1e-15 else 0.0
    return FringeFit(
        contrast=min(max(2.0 * amplitude, 0.0), 1.0),
        phase_offset=phase_offset,
        baseline=float(baseline),
    )


# =========================================================
# SIMULATION
# =========================================================
@dataclass(frozen=True)
class RamseyResult:
    phases: List[float]
    p_f1: List[float]
    p_f1_err: List[float]
    contrast: float
    phase_offset: float
    baseline: float
    normalized_contrast: Optional[float] = None


def _measure_phase(
    phase_index: int,
    phase: float,
    config: RamseyConfig,
    system: SystemParams,
    readout: Optional[MethodConfig],
    rates: Optional[RateModel],
    seed: int,
    stream: int,
    block: int,
) -> Tuple[int, int]:
    rng = trajectory_rng(seed, stream, block, phase_index)
    p = _final_state(phase, config, system).p_f1
    hits = 0
    for _ in range(config.n_shots):
        truth = TweezerState.F1 if rng.random() < p else TweezerState.F2
        if config.ideal_readout or readout is None or rates is None:
            measured = truth
        else:
            outcome = simulate_measurement(truth, readout, rates, rng)
            measured = classify_two_interval(outcome.counts1, outcome.counts2, readout.threshold, readout.method)
        hits += measured is TweezerState.F1
    return hits, config.n_shots


def run_ramsey(
    config: RamseyConfig,
    system: SystemParams,
    readout: Optional[MethodConfig],
    rates: Optional[RateModel],
    seed: int,
    stream: int = STREAM_RAMSEY,
    block: int = 0,
    workers: int = 1,
) -> RamseyResult:
    """
    Sample P(B, F=1) at every analysis phase and fit the fringe.
    `readout`/`rates` describe B's own state detection; with `ideal_readout`
    (or no readout given) the Bernoulli draw is recorded directly.
    Each phase draws from its own stream (seed, stream, block, phase index).
    """
    phases = list(config.phases)
    args = (config, system, readout, rates, seed, stream, block)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_measure_phase, j, phi, *args) for j, phi in enumerate(phases)]
            tallies = [f.result() for f in futures]
    else:
        tallies = [_measure_phase(j, phi, *args) for j, phi in enumerate(phases)]

    p_f1 = [k / n for k, n in tallies]
    err = [math.sqrt(p * (1 - p) / n) for p, (_, n) in zip(p_f1, tallies)]
    fit = fit_fringe(phases, p_f1)
    return RamseyResult(
        phases=phases,
        p_f1=p_f1,
        p_f1_err=err,
        contrast=fit.contrast,
        phase_offset=fit.phase_offset,
        baseline=fit.baseline,
    )


def normalize(result: RamseyResult, reference: RamseyResult) -> RamseyResult:
    if reference.contrast == 0:
        raise ValueError("reference contrast is zero; cannot normalise")
    return RamseyResult(
        phases=result.phases,
        p_f1=result.p_f1,
        p_f1_err=result.p_f1_err,
        contrast=result.contrast,
        phase_offset=result.phase_offset,
        baseline=result.baseline,
        normalized_contrast=result.contrast / reference.contrast,
    )


def run_reference(
    config: RamseyConfig,
    system: SystemParams,
    readout: Optional[MethodConfig],
    rates: Optional[RateModel],
    seed: int,
    block: int = 0,
    workers: int = 1,
) -> RamseyResult:
    reference = config.model_copy(update={"method": None})
    return run_ramsey(reference, system, readout, rates, seed, STREAM_RAMSEY_REFERENCE, block, workers)


def contrast_vs_distance(
    distances_um: Sequence[float],
    config: RamseyConfig,
    system: SystemParams,
    readout: Optional[MethodConfig],
    rates: Optional[RateModel],
    seed: int,
    workers: int = 1,
) -> List[Tuple[float, RamseyResult]]:
    """
    Normalised contrast per distance. The method=None reference does not
    depend on d, so it is run once on its own stream.
    """
    if not distances_um:
        raise ValueError("distance list must be non-empty")
    reference = run_reference(config, system, readout, rates, seed, workers=workers)
    curve = []
    for i, d in enumerate(distances_um):
        point = config.model_copy(update={"distance_um": float(d)})
        result = run_ramsey(point, system, readout, rates, seed, STREAM_RAMSEY, block=i, workers=workers)
        curve.append((float(d), normalize(result, reference)))
        log(f"d={d:.1f} μm → normalized contrast {curve[-1][1].normalized_contrast:.4f}", "DEBUG")
    return curve

# app/services/trajectory.py
"""
Seeded Monte Carlo of single measurement attempts.

A tweezer starts Empty, F1 or F2, suffers preparation error, and is probed in
two intervals. Photon detections, F2→F1 depumping and atom loss are competing
stochastic clocks; counts per interval are the only record kept.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.constants import LossModel, Method, TweezerState
from app.schemas import MethodConfig, RateModel
from app.services.rng import STREAM_TRAJECTORY, trajectory_rng

# stable per-state stream index, independent of Enum ordering
_STATE_KEY = {
    TweezerState.EMPTY: 0,
    TweezerState.F1: 1,
    TweezerState.F2: 2,
    TweezerState.LOST: 3,
}

_CHUNK = 2048


@dataclass(frozen=True, slots=True)
class TrajectoryOutcome:
    counts1: int
    counts2: int
    prepared: TweezerState
    actual_initial: TweezerState
    final: TweezerState
    seed_index: int


@dataclass(frozen=True, slots=True)
class IntervalResult:
    counts: int
    end_state: TweezerState
    scattered: int  # running total of atom-attributable photons


# =========================================================
# RATES
# =========================================================
def photon_rate(state: TweezerState, method: Method, model: RateModel) -> float:
    """Detected photons/s. Lost counts exactly like Empty."""
    is_f2 = state is TweezerState.F2
    if method is Method.FLUORESCENCE:
        return model.r_bright if is_f2 else model.r_dark
    return model.r_dark if is_f2 else model.r_bright


def attributable_fraction(method: Method, model: RateModel) -> float:
    """Share of F2 detections that come from atomic scattering."""
    if method is Method.TRANSMISSION:
        return 1.0
    if model.r_bright == 0:
        return 0.0
    return max(model.r_bright - model.r_dark, 0.0) / model.r_bright


# =========================================================
# STATE MAPS
# =========================================================
def apply_prep_error(intended: TweezerState, model: RateModel, rng: np.random.Generator) -> TweezerState:
    if intended is TweezerState.F2:
        return TweezerState.F1 if rng.random() < model.eps_prep_f2 else TweezerState.F2
    if intended is TweezerState.F1:
        return TweezerState.F2 if rng.random() < model.eps_prep_f1 else TweezerState.F1
    return intended


def apply_repump(state: TweezerState, model: RateModel, rng: np.random.Generator) -> TweezerState:
    if state is TweezerState.F1 and rng.random() < model.p_repump:
        return TweezerState.F2
    return state


# =========================================================
# INTERVAL
# =========================================================
def simulate_interval(
    state: TweezerState,
    model: RateModel,
    method: Method,
    duration: float,
    rng: np.random.Generator,
    scattered: int = 0,
) -> IntervalResult:
    """
    Probe one tweezer for `duration` seconds.

    Within a segment of constant state the detections are a Poisson process,
    so they are drawn as a Poisson count with uniform order-statistic times.
    An F2 atom carries a depump clock; each atom-attributable detection is
    followed by a loss trial (probability p, or p·k for the k-th photon of
    the measurement under the heating model). `scattered` carries k across
    intervals of one measurement.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")

    counts = 0
    remaining = duration

    if state is TweezerState.F2 and remaining > 0:
        depump_at = (
            rng.exponential(1.0 / model.gamma_depump) if model.gamma_depump > 0 else np.inf
        )
        segment = min(depump_at, remaining)
        rate = photon_rate(state, method, model)
        n = int(rng.poisson(rate * segment))

        if n and model.p_loss_per_detected_photon > 0:
            times = np.sort(rng.uniform(0.0, segment, size=n))
            attributable = rng.random(n) < attributable_fraction(method, model)
            k = scattered + np.cumsum(attributable)
            p = model.p_loss_per_detected_photon
            if model.loss_model is LossModel.HEATING:
                p_loss = np.minimum(p * k, 1.0)
            else:
                p_loss = np.full(n, p)
            lost = attributable & (rng.random(n) < p_loss)
            if lost.any():
                first = int(np.argmax(lost))
                counts += first + 1
                scattered = int(k[first])
                remaining -= times[first]
                tail = rng.poisson(photon_rate(TweezerState.LOST, method, model) * remaining)
                return IntervalResult(counts + int(tail), TweezerState.LOST, scattered)
            scattered = int(k[-1])
        elif n:
            scattered += int(rng.binomial(n, attributable_fraction(method, model)))

        counts += n
        remaining -= segment
        if remaining <= 0:
            return IntervalResult(counts, state, scattered)
        state = TweezerState.F1

    if remaining > 0:
        counts += int(rng.poisson(photon_rate(state, method, model) * remaining))
    return IntervalResult(counts, state, scattered)


# =========================================================
# MEASUREMENT
# =========================================================
def simulate_measurement(
    prepared: TweezerState,
    config: MethodConfig,
    model: RateModel,
    rng: np.random.Generator,
    seed_index: int = 0,
) -> TrajectoryOutcome:
    """
    Fluorescence: interval(τ), repump at the start of interval 2 with the whole
    of interval 2 probed in the post-repump state.
    Transmission: interval(τ), repump pulse τ_rp without counting, interval(τ).
    """
    actual = apply_prep_error(prepared, model, rng)
    method = config.method

    first = simulate_interval(actual, model, method, config.tau, rng)
    state = apply_repump(first.end_state, model, rng)
    second = simulate_interval(state, model, method, config.tau, rng, first.scattered)

    return TrajectoryOutcome(
        counts1=first.counts,
        counts2=second.counts,
        prepared=prepared,
        actual_initial=actual,
        final=second.end_state,
        seed_index=seed_index,
    )


def _run_chunk(
    start: int,
    stop: int,
    prepared: TweezerState,
    config: MethodConfig,
    model: RateModel,
    seed: int,
    stream: int,
) -> List[TrajectoryOutcome]:
    key = _STATE_KEY[prepared]
    return [
        simulate_measurement(prepared, config, model, trajectory_rng(seed, stream, key, i), i)
        for i in range(start, stop)
    ]


def run_batch(
    n: int,
    prepared: TweezerState,
    config: MethodConfig,
    model: RateModel,
    seed: int,
    workers: int = 1,
    stream: Optional[int] = None,
) -> List[TrajectoryOutcome]:
    """
    n independent attempts. Outcome i draws from the stream keyed by
    (seed, stream, prepared, i), so the list is identical for any worker count.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    stream = STREAM_TRAJECTORY if stream is None else stream

    bounds = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    if workers <= 1 or len(bounds) == 1:
        chunks = [_run_chunk(a, b, prepared, config, model, seed, stream) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_run_chunk, a, b, prepared, config, model, seed, stream)
                for a, b in bounds
            ]
            chunks = [f.result() for f in futures]

    return [outcome for chunk in chunks for outcome in chunk]

# app/services/readout.py
"""
Threshold readout: count classification, analytic error model, threshold
optimisation and SPAM aggregation.

"F2-like" below means the interval outcome the method assigns to an F=2 atom:
High for fluorescence, Low for transmission.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import integrate, stats

from app.constants import (
    PREPARED_STATES,
    Classification,
    LossModel,
    Method,
    Objective,
    TweezerState,
)
from app.errors import NonConvergenceError
from app.schemas import RateModel
from app.services.trajectory import TrajectoryOutcome, attributable_fraction, photon_rate

# one-sided 84 % ↔ two-sided 68 %
WILSON_Z = float(stats.norm.ppf(0.84))

_INDEX = {state: i for i, state in enumerate(PREPARED_STATES)}


# =========================================================
# CLASSIFICATION
# =========================================================
def classify_interval(counts: int, threshold: int) -> Classification:
    return Classification.HIGH if counts > threshold else Classification.LOW


def classify_two_interval(c1: int, c2: int, threshold: int, method: Method) -> TweezerState:
    """
    Fluorescence: High-X → F2, Low-High → F1, Low-Low → Empty.
    Transmission: Low-X → F2, High-Low → F1, High-High → Empty.
    """
    bright_like = Classification.HIGH if method is Method.FLUORESCENCE else Classification.LOW
    if classify_interval(c1, threshold) is bright_like:
        return TweezerState.F2
    if classify_interval(c2, threshold) is bright_like:
        return TweezerState.F1
    return TweezerState.EMPTY


def ashman_d(mu1: float, var1: float, mu2: float, var2: float) -> float:
    if var1 < 0 or var2 < 0:
        raise ValueError("variances must be non-negative")
    if var1 + var2 == 0:
        raise ValueError("Ashman's D is undefined when both variances are zero")
    return math.sqrt(2.0) * abs(mu1 - mu2) / math.sqrt(var1 + var2)


# =========================================================
# ANALYTIC ERROR MODEL
# =========================================================
@dataclass(frozen=True)
class F2IntervalSplit:
    """
    One interval of an F2 emitter that may leave F2 by depumping (to F1) or
    by loss. `low_*` are P(counts ≤ θ and that end state); `kept`,
    `depumped` and `lost` are the end-state probabilities.
    """

    low_kept: float
    low_depumped: float
    low_lost: float
    kept: float
    depumped: float
    lost: float

    @property
    def low(self) -> float:
        return min(max(self.low_kept + self.low_depumped + self.low_lost, 0.0), 1.0)


def _quad(integrand, tau: float) -> float:
    result = integrate.quad(integrand, 0.0, tau, epsabs=1e-11, epsrel=1e-10, limit=200, full_output=1)
    if len(result) > 3:
        raise NonConvergenceError(f"switching integral did not converge: {result[3]}")
    return float(result[0])


def f2_interval_split(
    r_signal: float,
    r_other: float,
    gamma_depump: float,
    tau: float,
    threshold: int,
    loss_rate: float = 0.0,
    loss_growth: float = 0.0,
) -> F2IntervalSplit:
    """
    Loss hazard λ(t) = loss_rate + loss_growth·t competes with the depump
    hazard Γ. The photon that triggers loss is detected, so the lost branch
    needs one count fewer to stay at or below θ. Photons that do not trigger
    loss arrive at r_signal - loss_rate before the switch and at r_other after.
    """
    if min(r_signal, r_other, gamma_depump, loss_rate, loss_growth) < 0 or tau <= 0:
        raise ValueError("rates must be non-negative and tau positive")
    if loss_rate > r_signal:
        raise ValueError("loss_rate cannot exceed the detection rate")

    r_kept = r_signal - loss_rate

    def survival(t: float) -> float:
        return math.exp(-gamma_depump * t - loss_rate * t - 0.5 * loss_growth * t * t)

    def mean(t: float) -> float:
        return r_kept * t + r_other * (tau - t)

    kept = survival(tau)
    low_kept = kept * float(stats.poisson.cdf(threshold, r_kept * tau))

    depumped = low_depumped = 0.0
    if gamma_depump > 0:
        depumped = _quad(lambda t: gamma_depump * survival(t), tau)
        low_depumped = _quad(lambda t: gamma_depump * survival(t) * stats.poisson.cdf(threshold, mean(t)), tau)

    lost = low_lost = 0.0
    if loss_rate > 0 or loss_growth > 0:
        lost = max(1.0 - kept - depumped, 0.0)
        if threshold >= 1:
            low_lost = _quad(
                lambda t: (loss_rate + loss_growth * t) * survival(t) * stats.poisson.cdf(threshold - 1, mean(t)),
                tau,
            )

    return F2IntervalSplit(low_kept, low_depumped, low_lost, kept, depumped, lost)


def switching_count_cdf(
    r_signal: float,
    r_other: float,
    gamma_depump: float,
    tau: float,
    threshold: int,
) -> Tuple[float, float]:
    """
    Split P(counts ≤ θ) for an emitter that switches rate at an Exp(Γ) time:
    (no switch within τ, switch within τ).
    """
    split = f2_interval_split(r_signal, r_other, gamma_depump, tau, threshold)
    return split.low_kept, split.low_depumped


def miss_probability(
    r_signal: float,
    r_other: float,
    gamma_depump: float,
    tau: float,
    threshold: int,
) -> float:
    """P(counts ≤ θ) for rate r_signal switching to r_other at an Exp(Γ) time."""
    unswitched, switched = switching_count_cdf(r_signal, r_other, gamma_depump, tau, threshold)
    return min(max(unswitched + switched, 0.0), 1.0)


def loss_hazard(method: Method, model: RateModel) -> Tuple[float, float]:
    """
    (λ0, dλ/dt) of an F2 atom entering an interval with no prior scattering.
    Heating uses the mean attributable count: the k-th photon is lost with
    probability p·k, so λ(t) ≈ p·r_a·(1 + r_a·t).
    """
    p = model.p_loss_per_detected_photon
    r_a = photon_rate(TweezerState.F2, method, model) * attributable_fraction(method, model)
    if model.loss_model is LossModel.HEATING:
        return p * r_a, p * r_a * r_a
    return p * r_a, 0.0


@dataclass(frozen=True)
class InfidelityTriple:
    empty: float
    f1: float
    f2: float

    def objective(self, objective: Objective) -> float:
        values = (self.empty, self.f1, self.f2)
        if objective is Objective.MEAN:
            return sum(values) / 3.0
        return max(values)


def infidelity_model(tau: float, threshold: int, model: RateModel, method: Method) -> InfidelityTriple:
    """
    Analytic per-state infidelity of the two-interval protocol.

    q      : non-F2 emitter (F1, Empty or lost) looks F2-like in one interval
    p_d2   : F2 emitter (with depumping and loss) looks F2-like in one interval
    nd_*   : F2 emitter looks non-F2-like in interval 1, split by its end
             state (still F2, depumped to F1, lost)
    """
    r_f2 = photon_rate(TweezerState.F2, method, model)
    r_other = photon_rate(TweezerState.F1, method, model)
    loss_rate, loss_growth = loss_hazard(method, model)

    cdf_other = float(stats.poisson.cdf(threshold, r_other * tau))
    split = f2_interval_split(r_f2, r_other, model.gamma_depump, tau, threshold, loss_rate, loss_growth)

    if method is Method.FLUORESCENCE:
        q = 1.0 - cdf_other
        p_d2 = 1.0 - split.low
        nd_kept, nd_depumped, nd_lost = split.low_kept, split.low_depumped, split.low_lost
    else:
        q = cdf_other
        p_d2 = split.low
        nd_kept = split.kept - split.low_kept
        nd_depumped = split.depumped - split.low_depumped
        nd_lost = split.lost - split.low_lost

    e1, e2, p_r = model.eps_prep_f1, model.eps_prep_f2, model.p_repump
    after_repump = p_r * p_d2 + (1.0 - p_r) * q

    empty = 1.0 - (1.0 - q) ** 2
    f2 = (1.0 - e2) * (1.0 - p_d2) + e2 * (1.0 - q)
    f1_correct = (1.0 - e1) * (1.0 - q) * after_repump + e1 * (
        nd_kept * p_d2 + nd_depumped * after_repump + nd_lost * q
    )

    def clip(x: float) -> float:
        return min(max(x, 0.0), 1.0)

    return InfidelityTriple(empty=clip(empty), f1=clip(1.0 - f1_correct), f2=clip(f2))


def threshold_search_range(tau: float, model: RateModel) -> range:
    mu_max = max(model.r_bright, model.r_dark) * tau
    return range(0, int(math.ceil(mu_max + 10.0 * math.sqrt(mu_max))) + 1)


def optimize_threshold(
    tau: float,
    model: RateModel,
    method: Method,
    objective: Objective = Objective.MAX_STATE,
) -> Tuple[int, float]:
    """Exhaustive integer search; the first (smallest) θ wins ties."""
    best_threshold, best_value = 0, math.inf
    for threshold in threshold_search_range(tau, model):
        value = infidelity_model(tau, threshold, model, method).objective(objective)
        if value < best_value:
            best_threshold, best_value = threshold, value
    return best_threshold, best_value


# =========================================================
# AGGREGATION
# =========================================================
def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z**2 / trials
    centre = (p + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass
class ConfusionMatrix:
    """Rows: prepared Empty/F1/F2. Columns: measured Empty/F1/F2."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((3, 3), dtype=np.int64))
    lost: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.int64))

    def add(self, prepared: TweezerState, measured: TweezerState, was_lost: bool = False):
        row = _INDEX[prepared]
        self.counts[row, _INDEX[measured]] += 1
        if was_lost:
            self.lost[row] += 1

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts, self.lost + other.lost)

    def row_total(self, state: TweezerState) -> int:
        return int(self.counts[_INDEX[state]].sum())

    def correct(self, state: TweezerState) -> int:
        i = _INDEX[state]
        return int(self.counts[i, i])

    def lost_count(self, state: TweezerState) -> int:
        return int(self.lost[_INDEX[state]])

    @classmethod
    def from_outcomes(
        cls, outcomes: Iterable[TrajectoryOutcome], threshold: int, method: Method
    ) -> "ConfusionMatrix":
        matrix = cls()
        for o in outcomes:
            measured = classify_two_interval(o.counts1, o.counts2, threshold, method)
            matrix.add(o.prepared, measured, o.final is TweezerState.LOST)
        return matrix


class StateReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    trials: int
    infidelity: float
    infidelity_low: float
    infidelity_high: float
    loss: Optional[float] = None
    loss_low: Optional[float] = None
    loss_high: Optional[float] = None


class SpamReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: Method
    threshold: int
    tau_us: Optional[float] = None
    states: Dict[str, StateReport]
    confusion: List[List[int]]

    def rows(self) -> List[Dict[str, object]]:
        """Flat table rows, one per prepared state."""
        out = []
        for state in PREPARED_STATES:
            r = self.states[state.value]
            out.append({"prepared": state.value, **r.model_dump()})
        return out


def report_from_matrix(
    matrix: ConfusionMatrix,
    threshold: int,
    method: Method,
    tau_us: Optional[float] = None,
) -> SpamReport:
    states = {}
    for state in PREPARED_STATES:
        n = matrix.row_total(state)
        if n == 0:
            raise ValueError(f"no trials for prepared state {state.value}")
        wrong = n - matrix.correct(state)
        lo, hi = wilson_interval(wrong, n)
        loss = loss_lo = loss_hi = None
        if state is not TweezerState.EMPTY:
            k = matrix.lost_count(state)
            loss = k / n
            loss_lo, loss_hi = wilson_interval(k, n)
        states[state.value] = StateReport(
            trials=n,
            infidelity=wrong / n,
            infidelity_low=lo,
            infidelity_high=hi,
            loss=loss,
            loss_low=loss_lo,
            loss_high=loss_hi,
        )
    return SpamReport(
        method=method,
        threshold=threshold,
        tau_us=tau_us,
        states=states,
        confusion=matrix.counts.tolist(),
    )


def build_spam_report(
    outcomes: Iterable[TrajectoryOutcome],
    threshold: int,
    method: Method,
    tau_us: Optional[float] = None,
) -> SpamReport:
    matrix = ConfusionMatrix.from_outcomes(outcomes, threshold, method)
    return report_from_matrix(matrix, threshold, method, tau_us)

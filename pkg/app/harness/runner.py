# app/harness/runner.py
"""
Experiment orchestration behind the CLI and the HTTP routes.

Each cmd_* takes a resolved RunConfig, writes its CSV tables plus
manifest.json into config.output_dir and returns the in-memory result.
"""

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from app.constants import MHZ, PER_US, PREPARED_STATES, US, Method, TweezerState
from app.errors import ConfigError
from app.harness.io import ensure_dir, read_csv, write_csv, write_manifest
from app.logger import log
from app.schemas import RunConfig
from app.services.cavity import (
    axial_avg_coupling_sq,
    cavity_filtered_rate,
    cooperativity,
    expected_max_rate,
    max_detection_rate,
)
from app.services.ramsey import (
    RamseyResult,
    coherence_factor,
    contrast_vs_distance,
    normalize,
    run_ramsey,
    run_reference,
)
from app.services.readout import (
    ConfusionMatrix,
    SpamReport,
    ashman_d,
    classify_two_interval,
    infidelity_model,
    optimize_threshold,
    report_from_matrix,
)
from app.services.rng import STREAM_SWEEP_BASE
from app.services.trajectory import TrajectoryOutcome, run_batch
from app.services.transmission import (
    difference_for_peak,
    effective_cooperativity,
    saturable_rates,
    transmission_ratio_axial_avg,
    transmission_ratio_axial_avg_quadrature,
    transmission_ratio_broadened,
    transmission_ratio_fixed,
)


@dataclass
class CommandResult:
    out_dir: Path
    files: List[Path]
    manifest: Path


def _begin(command: str, config: RunConfig) -> Tuple[Path, float]:
    log(f"{command}: method={config.method.value} seed={config.seed} trials={config.trials}")
    return ensure_dir(Path(config.output_dir)), time.perf_counter()


def _finish(command: str, config: RunConfig, out_dir: Path, started: float, files: List[Path]) -> CommandResult:
    manifest = write_manifest(out_dir, command, config, started, files)
    log(f"{command}: wrote {len(files)} table(s) to {out_dir}", "SUCCESS")
    return CommandResult(out_dir=out_dir, files=files, manifest=manifest)


def _batches(config: RunConfig, stream: Optional[int] = None) -> Dict[TweezerState, List[TrajectoryOutcome]]:
    return {
        state: run_batch(
            config.trials,
            state,
            config.protocol,
            config.rates,
            config.seed,
            workers=config.workers,
            stream=stream,
        )
        for state in PREPARED_STATES
    }


# =========================================================
# RATES
# =========================================================
def rate_table(config: RunConfig) -> Dict[str, float]:
    system = config.system
    C = cooperativity(system)
    axial = axial_avg_coupling_sq(system) / system.g0**2 if system.g0 > 0 else 0.5
    return {
        "cooperativity": C,
        "r0_per_us": max_detection_rate(system) / PER_US,
        "axial_factor": axial,
        "internal_factor": system.internal_factor,
        "r_max_expected_per_us": expected_max_rate(system) / PER_US,
        "transmission_ratio_fixed": transmission_ratio_fixed(C),
        "transmission_ratio_axial_avg": transmission_ratio_axial_avg(C),
        "transmission_ratio_axial_avg_quadrature": transmission_ratio_axial_avg_quadrature(C),
        "broadening_rms_mhz": config.broadening_rms_mhz,
        "transmission_ratio_broadened": transmission_ratio_broadened(
            C,
            config.broadening_rms_mhz * MHZ,
            config.spread_shape,
            gamma=system.gamma,
        ),
        "effective_cooperativity": effective_cooperativity(config.weak_drive_ratio),
    }


def cmd_rates(config: RunConfig) -> Tuple[Dict[str, float], CommandResult]:
    out_dir, started = _begin("rates", config)
    table = rate_table(config)
    path = write_csv(out_dir / "rates.csv", ["quantity", "value"], table.items())
    return table, _finish("rates", config, out_dir, started, [path])


# =========================================================
# HISTOGRAM
# =========================================================
def cmd_histogram(config: RunConfig) -> Tuple[Dict[TweezerState, List[TrajectoryOutcome]], CommandResult]:
    out_dir, started = _begin("histogram", config)
    batches = _batches(config)

    trial_rows = [
        (state.value, o.seed_index, o.counts1, o.counts2, o.final.value)
        for state, outcomes in batches.items()
        for o in outcomes
    ]
    trials_path = write_csv(
        out_dir / "histogram_trials.csv",
        ["prepared", "index", "counts1", "counts2", "final"],
        trial_rows,
    )

    bin_rows = []
    for state, outcomes in batches.items():
        for interval, attr in ((1, "counts1"), (2, "counts2")):
            values = [getattr(o, attr) for o in outcomes]
            tally = [0] * (max(values) + 1)
            for v in values:
                tally[v] += 1
            bin_rows.extend((state.value, interval, k, n) for k, n in enumerate(tally))
    bins_path = write_csv(
        out_dir / "histogram_bins.csv",
        ["prepared", "interval", "counts", "trials"],
        bin_rows,
    )
    return batches, _finish("histogram", config, out_dir, started, [trials_path, bins_path])


# =========================================================
# SPAM
# =========================================================
def matrix_from_counts_file(path: Path, threshold: int, method: Method) -> ConfusionMatrix:
    """Rows prepared,counts1,counts2[,final] from an external measurement."""
    matrix = ConfusionMatrix()
    for n, row in enumerate(read_csv(Path(path)), start=2):
        try:
            prepared = TweezerState(row["prepared"].strip().lower())
            c1, c2 = int(row["counts1"]), int(row["counts2"])
        except (KeyError, ValueError, AttributeError):
            raise ConfigError("counts", f"line {n}: expected prepared,counts1,counts2[,final]")
        if prepared is TweezerState.LOST or c1 < 0 or c2 < 0:
            raise ConfigError("counts", f"line {n}: invalid prepared state or negative count")
        lost = (row.get("final") or "").strip().lower() == TweezerState.LOST.value
        matrix.add(prepared, classify_two_interval(c1, c2, threshold, method), lost)
    return matrix


def spam_rows(report: SpamReport) -> List[List[object]]:
    keys = ["trials", "infidelity", "infidelity_low", "infidelity_high", "loss", "loss_low", "loss_high"]
    return [[r["prepared"]] + [r[k] for k in keys] for r in report.rows()]


def spam_report(config: RunConfig, counts_path: Optional[Path] = None) -> SpamReport:
    threshold, method = config.protocol.threshold, config.method

    if counts_path is not None:
        matrix = matrix_from_counts_file(counts_path, threshold, method)
    else:
        matrix = ConfusionMatrix()
        for outcomes in _batches(config).values():
            matrix = matrix.merge(ConfusionMatrix.from_outcomes(outcomes, threshold, method))

    try:
        report = report_from_matrix(matrix, threshold, method, config.protocol.tau_us)
    except ValueError as e:
        raise ConfigError("counts", str(e))
    return report


def cmd_spam(config: RunConfig, counts_path: Optional[Path] = None) -> Tuple[SpamReport, CommandResult]:
    out_dir, started = _begin("spam", config)
    report = spam_report(config, counts_path)
    spam_path = write_csv(
        out_dir / "spam.csv",
        ["prepared", "trials", "infidelity", "infidelity_low", "infidelity_high", "loss", "loss_low", "loss_high"],
        spam_rows(report),
    )
    confusion_path = write_csv(
        out_dir / "confusion.csv",
        ["prepared"] + [f"measured_{s.value}" for s in PREPARED_STATES],
        [[s.value] + row for s, row in zip(PREPARED_STATES, report.confusion)],
    )
    return report, _finish("spam", config, out_dir, started, [spam_path, confusion_path])


# =========================================================
# SWEEPS
# =========================================================
def _mc_infidelities(config: RunConfig, protocol, stream: int) -> Tuple[float, float, float]:
    matrix = ConfusionMatrix()
    for state in PREPARED_STATES:
        outcomes = run_batch(config.trials, state, protocol, config.rates, config.seed, config.workers, stream)
        matrix = matrix.merge(ConfusionMatrix.from_outcomes(outcomes, protocol.threshold, protocol.method))
    return tuple(1.0 - matrix.correct(s) / matrix.row_total(s) for s in PREPARED_STATES)


def sweep_tau(config: RunConfig, values: Sequence[float]) -> Tuple[List[str], List[list]]:
    header = [
        "tau_us", "total_us", "threshold",
        "model_empty", "model_f1", "model_f2",
        "mc_empty", "mc_f1", "mc_f2",
    ]
    rows = []
    for i, tau_us in enumerate(values):
        if tau_us <= 0:
            raise ConfigError("sweep.values", "tau values must be positive")
        protocol = config.protocol.model_copy(update={"tau_us": float(tau_us)})
        threshold, _ = optimize_threshold(protocol.tau, config.rates, config.method)
        protocol = protocol.model_copy(update={"threshold": threshold})
        model = infidelity_model(protocol.tau, threshold, config.rates, config.method)
        mc = _mc_infidelities(config, protocol, STREAM_SWEEP_BASE + i)
        rows.append([tau_us, protocol.total_time / US, threshold, model.empty, model.f1, model.f2, *mc])
        log(f"tau={tau_us} μs θ={threshold} F2 model={model.f2:.4%} mc={mc[2]:.4%}")
    return header, rows


def sweep_intensity(config: RunConfig, values: Sequence[float]) -> Tuple[List[str], List[list]]:
    if any(v <= 0 for v in values):
        raise ConfigError("sweep.values", "intensity values must be positive")
    tau = config.protocol.tau
    rows = []

    if config.method is Method.TRANSMISSION:
        header = ["drive", "r_high_per_us", "r_low_per_us", "ratio", "ashman_d"]
        C_eff = effective_cooperativity(config.weak_drive_ratio)
        if config.ashman_peak_r_high_per_us is None:
            difference = config.saturated_difference_per_us * PER_US
        else:
            difference = difference_for_peak(C_eff, config.ashman_peak_r_high_per_us * PER_US)
            log(
                f"intensity: saturated difference {difference / PER_US:.3f}/us "
                f"for D maximum at R_high={config.ashman_peak_r_high_per_us}/us"
            )
        for drive in values:
            r_high, r_low = saturable_rates(drive, C_eff, difference)
            d = ashman_d(r_high * tau, r_high * tau, r_low * tau, r_low * tau)
            rows.append([drive, r_high / PER_US, r_low / PER_US, r_low / r_high, d])
        return header, rows

    header = ["rabi_over_gamma", "rate_per_us", "ashman_d"]
    gamma = config.system.gamma
    r_dark = config.rates.r_dark
    for x in values:
        rate = cavity_filtered_rate(x * gamma, config.system)
        mu_b, mu_d = rate * tau, r_dark * tau
        d = ashman_d(mu_b, mu_b, mu_d, mu_d) if mu_b + mu_d > 0 else 0.0
        rows.append([x, rate / PER_US, d])
    return header, rows


def sweep_threshold(config: RunConfig, values: Sequence[float]) -> Tuple[List[str], List[list]]:
    thresholds = []
    for v in values:
        if v < 0 or int(v) != v:
            raise ConfigError("sweep.values", "thresholds must be non-negative integers")
        thresholds.append(int(v))

    header = ["threshold", "model_empty", "model_f1", "model_f2", "mc_empty", "mc_f1", "mc_f2"]
    batches = _batches(config, STREAM_SWEEP_BASE)
    tau = config.protocol.tau
    rows = []
    for threshold in thresholds:
        model = infidelity_model(tau, threshold, config.rates, config.method)
        matrix = ConfusionMatrix()
        for outcomes in batches.values():
            matrix = matrix.merge(ConfusionMatrix.from_outcomes(outcomes, threshold, config.method))
        mc = [1.0 - matrix.correct(s) / matrix.row_total(s) for s in PREPARED_STATES]
        rows.append([threshold, model.empty, model.f1, model.f2, *mc])
    return header, rows


def sweep_distance(config: RunConfig, values: Sequence[float]) -> Tuple[List[str], List[list]]:
    if any(v < 0 for v in values):
        raise ConfigError("sweep.values", "distances must be non-negative")
    header = ["distance_um", "coherence_fluorescence", "coherence_transmission", "normalized_contrast"]
    curve = contrast_vs_distance(
        list(values),
        config.ramsey,
        config.system,
        config.protocol,
        config.rates,
        config.seed,
        workers=config.workers,
    )
    rows = []
    for d, result in curve:
        analytic = [
            coherence_factor(
                config.ramsey.model_copy(update={"distance_um": d, "method": method}),
                config.system,
            )
            for method in (Method.FLUORESCENCE, Method.TRANSMISSION)
        ]
        rows.append([d, *analytic, result.normalized_contrast])
    return header, rows


_SWEEPS = {
    "tau": sweep_tau,
    "intensity": sweep_intensity,
    "threshold": sweep_threshold,
    "distance": sweep_distance,
}


def cmd_sweep(config: RunConfig) -> Tuple[List[list], CommandResult]:
    if config.sweep is None:
        raise ConfigError("sweep", "no sweep given (set sweep.parameter and sweep.values)")
    handler = _SWEEPS.get(config.sweep.parameter)
    if handler is None:
        raise ConfigError("sweep.parameter", f"unknown sweep parameter '{config.sweep.parameter}'")

    out_dir, started = _begin(f"sweep {config.sweep.parameter}", config)
    header, rows = handler(config, config.sweep.values)
    path = write_csv(out_dir / f"sweep_{config.sweep.parameter}.csv", header, rows)
    return rows, _finish("sweep", config, out_dir, started, [path])


# =========================================================
# RAMSEY
# =========================================================
def ramsey_with_reference(config: RunConfig) -> Tuple[RamseyResult, RamseyResult]:
    """Mid-circuit run normalised against a method=None run on a disjoint stream."""
    args = (config.system, config.protocol, config.rates, config.seed)
    reference = run_reference(config.ramsey, *args, workers=config.workers)
    result = normalize(run_ramsey(config.ramsey, *args, workers=config.workers), reference)
    return result, reference


def cmd_ramsey(config: RunConfig) -> Tuple[RamseyResult, CommandResult]:
    out_dir, started = _begin("ramsey", config)
    result, reference = ramsey_with_reference(config)

    fringe_path = write_csv(
        out_dir / "ramsey.csv",
        ["phase_rad", "p_f1", "p_f1_err", "reference_p_f1", "reference_p_f1_err"],
        zip(result.phases, result.p_f1, result.p_f1_err, reference.p_f1, reference.p_f1_err),
    )
    fit_path = write_csv(
        out_dir / "ramsey_fit.csv",
        ["quantity", "value"],
        [
            ("method", config.ramsey.method.value if config.ramsey.method else "none"),
            ("distance_um", config.ramsey.distance_um),
            ("contrast", result.contrast),
            ("phase_offset_rad", result.phase_offset),
            ("baseline", result.baseline),
            ("reference_contrast", reference.contrast),
            ("normalized_contrast", result.normalized_contrast),
            ("coherence_factor", coherence_factor(config.ramsey, config.system)),
        ],
    )
    log(f"normalized contrast {result.normalized_contrast:.4f}")
    return result, _finish("ramsey", config, out_dir, started, [fringe_path, fit_path])

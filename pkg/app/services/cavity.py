# app/services/cavity.py
"""
Atom-cavity couplings and photon collection rates.

All functions are pure; SI units throughout (rad/s, m, photons/s).
"""

import math
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import optimize

from app.constants import AxialDistribution
from app.schemas import SystemParams
from app.services.spectrum import emission_spectrum


# =========================================================
# COUPLING
# =========================================================
def cooperativity(params: SystemParams) -> float:
    """C = g0² / (2κγ)"""
    return params.g0**2 / (2.0 * params.kappa * params.gamma)


def coupling_at(z: float, r: float, params: SystemParams) -> float:
    """Standing-wave coupling: g0 cos(2πz/λ) exp(-r²/w0²)."""
    return params.g0 * math.cos(2.0 * math.pi * z / params.wavelength) * math.exp(
        -(r**2) / params.w0_cavity**2
    )


def axial_avg_coupling_sq(
    params: SystemParams,
    distribution: AxialDistribution = AxialDistribution.UNIFORM,
    sigma: Optional[float] = None,
) -> float:
    """
    <g²> over the axial position distribution at r = 0.
    Uniform over a standing-wave period gives g0²/2; a Gaussian of rms sigma
    centred on an antinode gives g0² (1 + exp(-2k²σ²)) / 2.
    """
    g0_sq = params.g0**2
    if distribution is AxialDistribution.UNIFORM:
        return 0.5 * g0_sq

    sigma = params.axial_sigma if sigma is None else sigma
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    k = params.wavenumber
    return 0.5 * g0_sq * (1.0 + math.exp(-2.0 * k**2 * sigma**2))


# =========================================================
# RATES
# =========================================================
def max_detection_rate(params: SystemParams) -> float:
    """Two-level ceiling R0 = η g0² / (4κ) in detected photons/s."""
    return params.eta * params.g0**2 / (4.0 * params.kappa)


def expected_max_rate(params: SystemParams) -> float:
    """R0 reduced by uniform axial averaging and the internal-state factor."""
    if params.g0 == 0:
        return 0.0
    axial = axial_avg_coupling_sq(params) / params.g0**2
    return max_detection_rate(params) * axial * params.internal_factor


def _cavity_lorentzian(nu: float, center: float, halfwidth: float) -> float:
    return halfwidth**2 / ((nu - center) ** 2 + halfwidth**2)


def _filtered_scattering(rabi: float, params: SystemParams) -> float:
    """Uncalibrated cavity-filtered emission, ν measured from the probe."""
    if rabi == 0:
        return 0.0
    spectrum = emission_spectrum(rabi, params.delta_pa, params.gamma)
    cavity_center = -params.delta_pc
    elastic = spectrum.elastic_weight * _cavity_lorentzian(0.0, cavity_center, params.kappa)
    return elastic + spectrum.filtered_inelastic(cavity_center, params.kappa)


@lru_cache(maxsize=64)
def _filtered_peak(params: SystemParams) -> float:
    """Maximum of the uncalibrated curve over drive strength."""
    gamma = params.gamma
    grid = np.linspace(-3.0, 3.0, 121)
    values = [_filtered_scattering(gamma * 10.0**x, params) for x in grid]
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(
        lambda x: -_filtered_scattering(gamma * 10.0**x, params),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-8},
    )
    return max(-float(res.fun), values[i])


def cavity_filtered_rate(rabi: float, params: SystemParams) -> float:
    """
    Detected photon rate of an F=2 atom driven with Rabi frequency `rabi`:
    elastic weight through the cavity line plus the inelastic spectrum
    filtered by a Lorentzian of half-width κ. Normalised so the maximum
    over drive strength equals R0 × axial factor × internal factor.
    """
    target = expected_max_rate(params)
    if target == 0 or rabi == 0:
        return 0.0
    return target * _filtered_scattering(rabi, params) / _filtered_peak(params)

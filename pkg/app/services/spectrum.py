# app/services/spectrum.py
"""
Two-level atom driven by a coherent probe.

Bloch vector x = (<σ->, <σ+>, <σz>) in the frame rotating at the probe,
dx/dt = M x + b with amplitude damping γ (population decay 2γ) and
detuning Δ = ω_p - ω_a. The inelastic spectrum follows from the quantum
regression theorem: the fluctuation vector of <σ+(0) σ_i(τ)> evolves with M.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from app.logger import log

# eigenvector matrices worse than this are treated as defective
_CONDITION_LIMIT = 1e10


def bloch_matrix(rabi: float, detuning: float, gamma: float) -> Tuple[np.ndarray, np.ndarray]:
    M = np.array(
        [
            [-(gamma - 1j * detuning), 0.0, 0.5j * rabi],
            [0.0, -(gamma + 1j * detuning), -0.5j * rabi],
            [1j * rabi, -1j * rabi, -2.0 * gamma],
        ],
        dtype=complex,
    )
    b = np.array([0.0, 0.0, -2.0 * gamma], dtype=complex)
    return M, b


def bloch_steady_state(rabi: float, detuning: float, gamma: float) -> Tuple[float, complex]:
    """
    Returns (ρ_ee, <σ->) of the driven two-level atom.
    ρ_ee = (Ω²/4) / (Δ² + γ² + Ω²/2); the total scattered rate is 2γ ρ_ee.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    denom = detuning**2 + gamma**2 + 0.5 * rabi**2
    rho_ee = 0.25 * rabi**2 / denom
    # <σ-> from dσ-/dt = 0 with <σz> = 2ρ_ee - 1
    sigma_minus = 0.5j * rabi * (2.0 * rho_ee - 1.0) / (gamma - 1j * detuning)
    return float(rho_ee), complex(sigma_minus)


@dataclass(frozen=True)
class EmissionSpectrum:
    """
    Elastic delta weight at the probe frequency plus an inelastic part
    S(ν) = (2γ/π) Re Σ_k i c_k / (ν - i λ_k), ν measured from the probe.
    When the eigenbasis is defective the resolvent of M is used instead.
    """

    gamma: float
    elastic_weight: float
    inelastic_weight: float
    eigenvalues: np.ndarray
    amplitudes: np.ndarray
    degenerate: bool
    _matrix: np.ndarray
    _fluctuation: np.ndarray

    @property
    def total_weight(self) -> float:
        return self.elastic_weight + self.inelastic_weight

    @property
    def elastic_fraction(self) -> float:
        total = self.total_weight
        return 1.0 if total == 0 else self.elastic_weight / total

    def _transform(self, z: np.ndarray) -> np.ndarray:
        """∫₀^∞ g(τ) e^{i z τ} dτ for complex z in the closed upper half plane."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if not self.degenerate:
            return np.array([np.sum(-self.amplitudes / (self.eigenvalues + 1j * zi)) for zi in z])
        eye = np.eye(3)
        return np.array(
            [-linalg.solve(self._matrix + 1j * zi * eye, self._fluctuation)[0] for zi in z]
        )

    def inelastic_density(self, nu) -> np.ndarray:
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        return (2.0 * self.gamma / np.pi) * np.real(self._transform(nu))

    def filtered_inelastic(self, center: float, halfwidth: float) -> float:
        """
        ∫ S_inel(ν) L(ν) dν for the peak-normalised Lorentzian
        L(ν) = halfwidth² / ((ν - center)² + halfwidth²).
        Closing the contour in the upper half plane leaves the pole at center + i·halfwidth.
        """
        value = self._transform(np.array([center + 1j * halfwidth]))[0]
        return float(2.0 * self.gamma * halfwidth * np.real(value))


def emission_spectrum(rabi: float, detuning: float, gamma: float) -> EmissionSpectrum:
    if gamma <= 0:
        raise ValueError("gamma must be positive")

    rho_ee, sm = bloch_steady_state(rabi, detuning, gamma)
    sp = np.conj(sm)
    sz = 2.0 * rho_ee - 1.0

    M, _ = bloch_matrix(rabi, detuning, gamma)
    x_ss = np.array([sm, sp, sz], dtype=complex)

    # <σ+ σ->, <σ+ σ+>, <σ+ σz> at τ = 0 minus the factorised part
    y0 = np.array([rho_ee, 0.0, -sp], dtype=complex)
    delta_y0 = y0 - sp * x_ss

    coherent = abs(sm) ** 2
    elastic = 2.0 * gamma * coherent
    inelastic = 2.0 * gamma * max(rho_ee - coherent, 0.0)

    eigenvalues, vectors = linalg.eig(M)
    degenerate = bool(np.linalg.cond(vectors) > _CONDITION_LIMIT)
    if degenerate:
        log(f"Near-degenerate Bloch eigenvalues (Ω={rabi:.4g}, Δ={detuning:.4g}), using resolvent", "DEBUG")
        amplitudes = np.full(3, np.nan, dtype=complex)
    else:
        weights = linalg.solve(vectors, delta_y0)
        amplitudes = vectors[0, :] * weights

    return EmissionSpectrum(
        gamma=gamma,
        elastic_weight=float(elastic),
        inelastic_weight=float(inelastic),
        eigenvalues=eigenvalues,
        amplitudes=amplitudes,
        degenerate=degenerate,
        _matrix=M,
        _fluctuation=delta_y0,
    )


def mollow_triplet_strong_drive(nu, rabi: float, gamma: float) -> np.ndarray:
    """
    Resonant inelastic spectrum in the Ω ≫ γ limit: a central Lorentzian of
    half-width γ carrying half of the weight and two sidebands at ±Ω of
    half-width 3γ/2 carrying a quarter each. Total weight γ (= 2γ·½).
    """
    nu = np.asarray(nu, dtype=float)

    def lorentzian(center: float, width: float) -> np.ndarray:
        return (width / np.pi) / ((nu - center) ** 2 + width**2)

    return gamma * (
        0.5 * lorentzian(0.0, gamma)
        + 0.25 * lorentzian(rabi, 1.5 * gamma)
        + 0.25 * lorentzian(-rabi, 1.5 * gamma)
    )

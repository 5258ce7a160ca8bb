# app/schemas.py
"""
Validated parameter models.

Fields carry the unit in their name (the same keys as the JSON config);
SI values used by the engines are exposed as properties.
"""

import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.constants import (
    MHZ,
    NM,
    PER_US,
    UM,
    US,
    LossModel,
    Method,
    SpreadShape,
)


# -------------------------
# Atom-cavity-probe system
# -------------------------
class SystemParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    g0_mhz: float = Field(default=2.7, ge=0, description="g0 / 2π")
    kappa_mhz: float = Field(default=0.53, gt=0, description="cavity half-linewidth / 2π")
    gamma_mhz: float = Field(default=3.0, gt=0, description="atomic half-linewidth / 2π")
    eta: float = Field(default=0.25, ge=0, le=1)
    wavelength_nm: float = Field(default=780.0, gt=0)
    w0_cavity_um: float = Field(default=20.0, gt=0)
    w_probe_um: float = Field(default=13.0, gt=0)
    delta_ca_mhz: float = Field(default=-10.0)
    delta_pc_mhz: float = Field(default=-0.265, description="≈ -κ/2")
    axial_sigma_nm: float = Field(default=200.0, gt=0)
    internal_factor: float = Field(default=0.28, gt=0, le=1)

    @property
    def g0(self) -> float:
        return self.g0_mhz * MHZ

    @property
    def kappa(self) -> float:
        return self.kappa_mhz * MHZ

    @property
    def gamma(self) -> float:
        return self.gamma_mhz * MHZ

    @property
    def wavelength(self) -> float:
        return self.wavelength_nm * NM

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def w0_cavity(self) -> float:
        return self.w0_cavity_um * UM

    @property
    def w_probe(self) -> float:
        return self.w_probe_um * UM

    @property
    def delta_ca(self) -> float:
        return self.delta_ca_mhz * MHZ

    @property
    def delta_pc(self) -> float:
        return self.delta_pc_mhz * MHZ

    @property
    def delta_pa(self) -> float:
        # probe-atom detuning, always derived
        return self.delta_pc + self.delta_ca

    @property
    def axial_sigma(self) -> float:
        return self.axial_sigma_nm * NM


# -------------------------
# Photon-count rate model
# -------------------------
class RateModel(BaseModel):
    """
    r_bright / r_dark are oriented by the method tag:
    fluorescence -> F=2 emits at r_bright, everything else at r_dark;
    transmission -> F=2 suppresses to r_dark (R_low), everything else r_bright (R_high).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    r_bright_per_us: float = Field(ge=0)
    r_dark_per_us: float = Field(ge=0)
    gamma_depump_per_us: float = Field(default=0.0, ge=0)
    p_repump: float = Field(default=1.0, ge=0, le=1)
    p_loss_per_detected_photon: float = Field(default=0.0, ge=0, le=1)
    loss_model: LossModel = LossModel.PER_PHOTON
    eps_prep_f1: float = Field(default=0.0, ge=0, le=1)
    eps_prep_f2: float = Field(default=0.0, ge=0, le=1)

    @property
    def r_bright(self) -> float:
        return self.r_bright_per_us * PER_US

    @property
    def r_dark(self) -> float:
        return self.r_dark_per_us * PER_US

    @property
    def gamma_depump(self) -> float:
        return self.gamma_depump_per_us * PER_US


# -------------------------
# Two-interval protocol
# -------------------------
class MethodConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Method
    tau_us: float = Field(gt=0)
    tau_rp_us: float = Field(default=5.0, ge=0)
    threshold: int = Field(ge=0)

    @property
    def tau(self) -> float:
        return self.tau_us * US

    @property
    def tau_rp(self) -> float:
        return self.tau_rp_us * US

    @property
    def total_time(self) -> float:
        if self.method is Method.FLUORESCENCE:
            return 2 * self.tau
        return 2 * self.tau + self.tau_rp


# -------------------------
# Mid-circuit Ramsey benchmark
# -------------------------
def _default_phases() -> List[float]:
    return [2 * math.pi * k / 16 for k in range(16)]


class RamseyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    phases: List[float] = Field(default_factory=_default_phases, description="rad")
    distance_um: float = Field(default=34.5, ge=0)
    method: Optional[Method] = Field(default=None, description="mid-circuit method; None = reference")
    transport_time_us: float = Field(default=200.0, ge=0)
    t2_star_us: Optional[float] = Field(default=None, gt=0, description="None = no transport dephasing")
    n_shots: int = Field(default=2000, ge=1)
    phase_kick_rad: float = 0.0
    n_scatter_at_center: Optional[float] = Field(default=None, ge=0)
    backaction_waist_um: Optional[float] = Field(default=None, gt=0)
    reference_contrast: float = Field(default=1.0, ge=0, le=1)
    ideal_readout: bool = False

    @property
    def distance(self) -> float:
        return self.distance_um * UM

    @property
    def transport_time(self) -> float:
        return self.transport_time_us * US

    @property
    def t2_star(self) -> Optional[float]:
        return None if self.t2_star_us is None else self.t2_star_us * US


# -------------------------
# Harness
# -------------------------
SWEEP_PARAMETERS = ("tau", "intensity", "threshold", "distance")


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    parameter: str
    values: List[float] = Field(min_length=1)

    @field_validator("parameter")
    @classmethod
    def _known_parameter(cls, value: str) -> str:
        if value not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown sweep parameter '{value}', expected one of {SWEEP_PARAMETERS}")
        return value


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    system: SystemParams = Field(default_factory=SystemParams)
    method: Method = Method.FLUORESCENCE
    protocol: MethodConfig
    rates: RateModel
    sweep: Optional[SweepSpec] = None
    ramsey: RamseyConfig = Field(default_factory=RamseyConfig)
    seed: int = Field(default=20230101, ge=0, lt=2**64)
    trials: int = Field(default=10_000, ge=1)
    workers: int = Field(default=1, ge=1)
    output_dir: str = "results"
    broadening_rms_mhz: float = Field(default=4.0, ge=0)
    spread_shape: SpreadShape = SpreadShape.UNIFORM
    saturated_difference_per_us: float = Field(default=2.4, gt=0)
    ashman_peak_r_high_per_us: Optional[float] = Field(default=2.2, gt=0)
    weak_drive_ratio: float = Field(default=0.4, gt=0, lt=1)

    @model_validator(mode="after")
    def _orientation(self):
        if self.protocol.method is not self.method:
            raise ValueError("protocol.method must match method")
        if self.method is Method.FLUORESCENCE and not self.rates.r_bright_per_us > self.rates.r_dark_per_us:
            raise ValueError("fluorescence requires r_bright_per_us > r_dark_per_us")
        if self.rates.r_bright_per_us == self.rates.r_dark_per_us:
            raise ValueError("F=2 rate must differ from the non-F=2 rate")
        return self

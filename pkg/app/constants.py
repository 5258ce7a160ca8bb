import math
from enum import Enum


class TweezerState(Enum):
    EMPTY = "empty"
    F1 = "f1"
    F2 = "f2"
    LOST = "lost"   # ground truth only, never a measurement outcome


class Method(Enum):
    FLUORESCENCE = "fluorescence"
    TRANSMISSION = "transmission"


class Classification(Enum):
    HIGH = "high"
    LOW = "low"


class Objective(Enum):
    MAX_STATE = "max_state"
    MEAN = "mean"


class AxialDistribution(Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


class SpreadShape(Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


class LossModel(Enum):
    PER_PHOTON = "per_photon"
    HEATING = "heating"


# States a tweezer can be prepared in (and measured as)
PREPARED_STATES = (TweezerState.EMPTY, TweezerState.F1, TweezerState.F2)

# Unit conversions used by the config layer
MHZ = 2e6 * math.pi   # 2π × 1 MHz in rad/s
US = 1e-6
UM = 1e-6
NM = 1e-9
PER_US = 1e6

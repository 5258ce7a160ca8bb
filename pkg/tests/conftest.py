import pytest

from app.constants import Method
from app.model_config import get_method_defaults
from app.schemas import MethodConfig, RateModel, SystemParams


@pytest.fixture
def system():
    return SystemParams()


def _preset(method: Method):
    block = get_method_defaults(method.value)
    return MethodConfig(method=method, **block["protocol"]), RateModel(**block["rates"])


@pytest.fixture
def fluorescence():
    """(protocol, rates) of the fluorescence preset."""
    return _preset(Method.FLUORESCENCE)


@pytest.fixture
def transmission():
    """(protocol, rates) of the transmission preset."""
    return _preset(Method.TRANSMISSION)


@pytest.fixture
def ideal_rates():
    """Noise-free fluorescence model: no background, depumping, loss or prep error."""
    return RateModel(
        r_bright_per_us=10.0,
        r_dark_per_us=0.0,
        gamma_depump_per_us=0.0,
        p_repump=1.0,
        p_loss_per_detected_photon=0.0,
        eps_prep_f1=0.0,
        eps_prep_f2=0.0,
    )

import json

import pytest

from exchangeable_tails.model import (
    ConditionalLaw,
    EnvelopeForm,
    LawFamily,
    MixingDensity,
    TailEnvelope,
)
from exchangeable_tails.simulate import DeFinettiModel


@pytest.fixture
def scale_model():
    """Gaussian scale mixture with (gamma, kappa, c3) = (1, 2, 1/2)."""
    return DeFinettiModel(MixingDensity(1.0, 2.0, 0.5), ConditionalLaw(LawFamily.GAUSSIAN_SCALE))


@pytest.fixture
def unit_normal_model():
    return DeFinettiModel(
        MixingDensity(1.0, 2.0, 0.5), ConditionalLaw(LawFamily.GAUSSIAN_SCALE), fixed_q=1.0
    )


@pytest.fixture
def saddle_family():
    """alpha = beta = kappa = 2, c1 = c3 = 1, gamma = 1: R0(t) = 2t K1(2t)."""
    return MixingDensity(1.0, 2.0, 1.0), TailEnvelope(EnvelopeForm.INVERSE_POWER, 1.0, 2.0, 2.0)


@pytest.fixture
def power_family():
    """(alpha, beta, gamma, kappa, c1, c3) = (2, 2, 1, 1, 1, 1)."""
    return MixingDensity(1.0, 1.0, 1.0), TailEnvelope(EnvelopeForm.DIRECT_POWER, 1.0, 2.0, 2.0)


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=2), encoding="utf-8")
        return str(path)

    return write

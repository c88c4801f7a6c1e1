from pathlib import Path

import pytest

from fraclind.lindstedt import expand
from fraclind.model import counterexample_model, custom3_model, custom_model
from fraclind.resonance import analyze
from fraclind.selfenergy import FirstBandSelfEnergy, self_energy_scale_minus1

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"


@pytest.fixture(scope="session")
def custom():
    return custom_model()


@pytest.fixture(scope="session")
def counterexample():
    return counterexample_model()


@pytest.fixture(scope="session")
def custom3():
    return custom3_model()


@pytest.fixture(scope="session")
def custom_res(custom):
    return analyze(custom)


@pytest.fixture(scope="session")
def series6(custom, custom_res):
    return expand(custom, 6, resonance=custom_res)


@pytest.fixture(scope="session")
def M0(custom, custom_res):
    return self_energy_scale_minus1(custom, custom_res, branch="plus")


@pytest.fixture(scope="session")
def M0_minus(custom, custom_res):
    return self_energy_scale_minus1(custom, custom_res, branch="minus")


@pytest.fixture(scope="session")
def first_band(custom, custom_res, M0):
    return FirstBandSelfEnergy(custom, M0, custom_res)


@pytest.fixture(scope="session")
def models_dir():
    return MODELS

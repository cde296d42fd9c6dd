import pathlib

import pytest

from cmml.constraints import parse
from cmml.tabular import load_csv, mark_missing_zeros

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data"

ZERO_MISSING = ("Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI")


@pytest.fixture(scope="session")
def pima_csv_path():
    return DATA_DIR / "pima.csv"


@pytest.fixture(scope="session")
def pima_cmc_path():
    return DATA_DIR / "pima.cmc"


@pytest.fixture(scope="session")
def pima_config_path():
    return DATA_DIR / "pima_config.json"


@pytest.fixture(scope="session")
def pima(pima_csv_path):
    return load_csv(pima_csv_path)


@pytest.fixture(scope="session")
def pima_marked(pima):
    return mark_missing_zeros(pima, ZERO_MISSING)


@pytest.fixture(scope="session")
def pima_doc(pima_cmc_path):
    return parse(pima_cmc_path.read_text())

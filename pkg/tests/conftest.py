import json
from fractions import Fraction
from importlib.resources import files
from pathlib import Path

import pytest

from berkhyb.models import Component, SncModelCombinatorics


DATA_DIR = Path(str(files("berkhyb") / "data"))


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def r() -> Fraction:
    return Fraction(1, 2)


@pytest.fixture()
def segment() -> SncModelCombinatorics:
    return SncModelCombinatorics(
        [Component("w1", 1), Component("w2", 1)], [[0], [1], [0, 1]],
        name="segment",
    )


@pytest.fixture()
def triangle() -> SncModelCombinatorics:
    return SncModelCombinatorics(
        [Component("u1", 1), Component("u2", 1), Component("u3", 1)],
        [[0], [1], [2], [0, 1], [0, 2], [1, 2], [0, 1, 2]],
        name="triangle",
    )


@pytest.fixture()
def blowup() -> SncModelCombinatorics:
    return SncModelCombinatorics(
        [Component("zp1", 1), Component("zp2", 1), Component("e", 2)],
        [[0], [1], [2], [0, 2], [1, 2]],
        name="blowup",
    )


def load_json(path: Path):
    with open(path) as fh:
        return json.load(fh)

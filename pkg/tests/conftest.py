import os
import pathlib

import hypothesis
import pytest

from mimir.synth_fixtures import figure1_like, pilot_927, pilot_bigrams

hypothesis.settings.register_profile("ci", deadline=None, max_examples=200)
hypothesis.settings.register_profile("dev", deadline=None, max_examples=25)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

GOLDEN = pathlib.Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def golden():
    def read(name):
        return (GOLDEN / name).read_text(encoding="utf-8")

    return read


@pytest.fixture(scope="session")
def figure1():
    return figure1_like()


@pytest.fixture(scope="session")
def pilot():
    return pilot_927()


@pytest.fixture(scope="session")
def pilot_short():
    return pilot_bigrams()

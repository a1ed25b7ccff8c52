import shutil
from pathlib import Path

import pytest

from invsynth.config import SolverConfig
from invsynth.smt_client import SmtClient
from invsynth.specfile import load, parse

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

HAS_Z3 = shutil.which("z3") is not None


def pytest_collection_modifyitems(config, items):
    skip = pytest.mark.skip(reason="z3 executable not found")
    for item in items:
        if "requires_z3" in item.keywords and not HAS_Z3:
            item.add_marker(skip)


@pytest.fixture
def solver():
    with SmtClient(SolverConfig(timeout_s=10)) as client:
        yield client


@pytest.fixture
def corpus_spec():
    def _load(name: str):
        return load(CORPUS / f"{name}.tcs")

    return _load


@pytest.fixture
def spec_text():
    def _parse(text: str):
        return parse(text, "<test>")

    return _parse

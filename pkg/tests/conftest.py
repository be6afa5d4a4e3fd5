import pytest

from guideqa import classify, gen
from guideqa import kb as kb_module
from guideqa.data import default_kb_path, default_templates_path

from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def knowledge():
    return kb_module.load_guide(default_kb_path())


@pytest.fixture(scope="session")
def templates():
    return gen.parse_templates(default_templates_path())


@pytest.fixture(scope="session")
def corpus(knowledge, templates):
    return gen.generate_dataset(templates, knowledge)


@pytest.fixture(scope="session")
def model(corpus):
    return classify.train(corpus, alpha=classify.PIPELINE_ALPHA)


@pytest.fixture()
def fixture_path():
    return lambda name: DATA_DIR / name

import json
from pathlib import Path

import pytest

from nctheta.config import load_config
from nctheta.embedding import EmbeddingKind, build_embedding
from nctheta.structures import make_complex_structure

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "nctheta" / "fixtures"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


def pytest_addoption(parser):
    parser.addoption("--regen-golden", action="store_true", default=False,
                     help="rewrite golden regression files from the current"
                          " implementation")


@pytest.fixture(scope="session")
def regen_golden(request):
    return request.config.getoption("--regen-golden")


@pytest.fixture(scope="session")
def lattice_config_path():
    return FIXTURES / "canonical_lattice.json"


@pytest.fixture(scope="session")
def vector_config_path():
    return FIXTURES / "canonical_vector.json"


@pytest.fixture(scope="session")
def lattice_config(lattice_config_path):
    return load_config(lattice_config_path)


@pytest.fixture(scope="session")
def vector_config(vector_config_path):
    return load_config(vector_config_path)


@pytest.fixture(scope="session")
def lattice_emb():
    return build_embedding(EmbeddingKind.LATTICE, 0.5, m=[[1, 0], [0, 1]],
                           delta_hat=[[0.0, 0.7], [0.3, 0.0]])


@pytest.fixture(scope="session")
def vector_emb():
    return build_embedding(EmbeddingKind.VECTOR_SPACE, 0.5, 0.4)


@pytest.fixture(scope="session")
def lattice_structure(lattice_emb):
    return make_complex_structure(EmbeddingKind.LATTICE, 1j, 0.5,
                                  lattice_emb.theta34)


@pytest.fixture(scope="session")
def vector_structure():
    tau = [[0.5j, 0.0], [0.0, 0.4j]]
    return make_complex_structure(EmbeddingKind.VECTOR_SPACE, tau, 0.5, 0.4)


def load_golden(name: str):
    return json.loads((GOLDEN_DIR / name).read_text())


def save_golden(name: str, payload: dict):
    GOLDEN_DIR.mkdir(exist_ok=True)
    (GOLDEN_DIR / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

import pytest

from app import create_app
from app import analysis, codes


@pytest.fixture
def app(tmp_path):
    app = create_app({
        'TESTING': True,
        'WORKERS': 1,
        'SEED': 0,
        'CHUNK_SIZE': 4096,
        'LOG_LEVEL': 'WARNING',
        'OUTPUT_DIR': str(tmp_path / 'results'),
    })
    yield app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture(scope='session')
def rep3():
    return codes.repetition_code(1)


@pytest.fixture(scope='session')
def perfect5():
    return codes.perfect5_code()


@pytest.fixture(scope='session')
def poly_of():
    """Cached fidelity polynomial by code label."""
    def lookup(label):
        return analysis.polynomial_for(codes.build_code(label))
    return lookup

import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: long-running acceptance checks (deselect with -m 'not slow')"
    )


@pytest.fixture(scope="session")
def ball():
    from pmelab import DomainShape, compute_geometry

    return compute_geometry(DomainShape.ball(1.0))


@pytest.fixture(scope="session")
def disk():
    from pmelab import DomainShape, compute_geometry

    return compute_geometry(DomainShape.disk(1.0))


@pytest.fixture(scope="session")
def interval():
    from pmelab import DomainShape, compute_geometry

    return compute_geometry(DomainShape.interval(1.0))

import pytest


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """Run every test away from any qpz.env and QPZ_* variables of the caller."""
    for name in ("QPZ_PRECISION_BITS", "QPZ_CACHE", "QPZ_CMAX", "QPZ_BBOUND", "QPZ_BBOUND_CAP",
                 "QPZ_ABOUND", "QPZ_ABOUND_CAP", "QPZ_QUADRATURE_TOL", "QPZ_SERIES_TOL",
                 "QPZ_CONFIG", "QPZ_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)

import logging

import pytest

from rpca.config import Settings, get_settings, setup_logger
from rpca.errors import ContractViolation


def test_defaults(monkeypatch):
    for var in ("RPCA_THREADS", "RPCA_LOG_LEVEL", "RPCA_SVD_CAP"):
        monkeypatch.delenv(var, raising=False)
    assert get_settings() == Settings()
    assert get_settings().threads == 1


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("RPCA_THREADS", "3")
    monkeypatch.setenv("RPCA_LOG_LEVEL", "debug")
    monkeypatch.setenv("RPCA_SVD_CAP", "128")
    settings = get_settings()
    assert (settings.threads, settings.log_level, settings.small_svd_cap) == (3, "DEBUG", 128)


@pytest.mark.parametrize("var, value", [("RPCA_THREADS", "0"), ("RPCA_THREADS", "many"), ("RPCA_LOG_LEVEL", "LOUD")])
def test_invalid_settings_name_the_variable(monkeypatch, var, value):
    monkeypatch.setenv(var, value)
    with pytest.raises(ContractViolation, match=var):
        get_settings()


def test_setup_logger_replaces_handlers():
    logger = setup_logger("info")
    setup_logger("DEBUG")
    assert logger is logging.getLogger("rpca")
    assert len(logger.handlers) == 1
    assert logger.level == logging.DEBUG

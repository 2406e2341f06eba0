import logging

import pytest

from worldprobe.exceptions import ConfigError
from worldprobe.utils.logging import LEVEL_ENV, console, init, progress, resolve_level


def test_level_from_environment(monkeypatch):
    monkeypatch.setenv(LEVEL_ENV, "warning")
    assert resolve_level() == logging.WARNING
    assert resolve_level(verbose=True) == logging.DEBUG

    monkeypatch.delenv(LEVEL_ENV)
    assert resolve_level() == logging.INFO


def test_unknown_level(monkeypatch):
    monkeypatch.setenv(LEVEL_ENV, "chatty")
    with pytest.raises(ConfigError, match="CHATTY"):
        resolve_level()


def test_init_sets_package_level(monkeypatch):
    monkeypatch.setenv(LEVEL_ENV, "ERROR")

    init()
    assert logging.getLogger("worldprobe").level == logging.ERROR
    assert logging.getLogger("multiprocess").level == logging.WARNING

    init(verbose=True)
    assert logging.getLogger("worldprobe").level == logging.DEBUG


def test_progress_uses_log_console():
    with progress(enabled=False) as bar:
        assert bar.console is console

"""Locate bundled data files; ENTROPY_INJECT_DATA_DIR overrides the package copy."""

from __future__ import annotations

import os
from pathlib import Path

DATA_ENV_VAR = "ENTROPY_INJECT_DATA_DIR"
_PACKAGE_DATA = Path(__file__).resolve().parent / "data"


def data_dir() -> Path:
    override = os.environ.get(DATA_ENV_VAR)
    return Path(override) if override else _PACKAGE_DATA


def data_path(name: str) -> Path:
    return data_dir() / name

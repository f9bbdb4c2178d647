"""Paths to data files shipped inside the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def data_path(*parts: str) -> Path:
    """Filesystem path of a file under ``har_pioneer/data/``."""
    root = resources.files("har_pioneer").joinpath("data")
    return Path(str(root.joinpath(*parts)))


def default_catalog_path() -> Path:
    return data_path("opportunity_catalog.yaml")


def template_path(name: str) -> Path:
    return data_path("templates", name)


def fixture_path(name: str) -> Path:
    return data_path("fixtures", name)

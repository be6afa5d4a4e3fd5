"""Bundled sample knowledge base and templates for the VERA ecology guide."""

from importlib.resources import files
from pathlib import Path


def default_kb_path() -> Path:
    return Path(str(files(__package__).joinpath("vera_kb.json")))


def default_templates_path() -> Path:
    return Path(str(files(__package__).joinpath("vera_templates.json")))

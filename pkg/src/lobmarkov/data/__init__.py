"""Bundled sample data."""

from pathlib import Path

SMALL_FIXTURE = Path(__file__).resolve().parent / "small_fixture"


def small_fixture_dir() -> Path:
    """Directory with two days of synthetic ticks for AMZN, PEP and NKE,
    the planted model (``planted.json``) and a run config (``config.json``)."""
    return SMALL_FIXTURE

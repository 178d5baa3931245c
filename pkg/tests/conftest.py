import shutil
from pathlib import Path

import pytest

from lobmarkov.config import RunConfig
from lobmarkov.data import small_fixture_dir

ACCEPTANCE_LOG = []


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    """Full pipeline on the bundled fixture; returns (config, output dir)."""
    src = small_fixture_dir()
    cfg = RunConfig.load(src / "config.json")
    out = tmp_path_factory.mktemp("small") / "out"
    cfg.output_dir = str(out)
    from lobmarkov.pipeline import run_pipeline

    run_pipeline(cfg)
    return cfg, out


def copy_small_fixture(dest: Path) -> Path:
    dest.mkdir(parents=True, exist_ok=True)
    for p in small_fixture_dir().iterdir():
        if p.suffix in (".csv", ".json"):
            shutil.copy(p, dest / p.name)
    return dest


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)

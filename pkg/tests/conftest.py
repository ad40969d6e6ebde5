import sys
from pathlib import Path

import pytest

from entrank import cli
from entrank.synthetic import write_toy_corpus

ROOT = Path(__file__).resolve().parents[1]
TOY = ROOT / "data" / "toy"

sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(0, str(ROOT / "scripts"))


def write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def corpus_config(corpus_dir, out_dir, **overrides) -> cli.PipelineConfig:
    paths = {role: str(Path(corpus_dir) / f"{role}.tsv") for role in cli.INPUT_ROLES}
    return cli.PipelineConfig(**paths, out=str(out_dir), **overrides)


@pytest.fixture
def toy_dir():
    return TOY


@pytest.fixture
def toy_config(tmp_path):
    return corpus_config(TOY, tmp_path / "out")


@pytest.fixture(scope="session")
def dominance_corpus(tmp_path_factory):
    """Corpus without links or type assertions, so no near-collinear features."""
    d = tmp_path_factory.mktemp("dominance")
    write_toy_corpus(d, with_links=False, with_types=False)
    return d


_criteria = []


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.failed):
        props = dict(report.user_properties)
        if "criterion" in props:
            _criteria.append(("PASS" if report.passed else "FAIL", props["criterion"]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for verdict, text in _criteria:
        terminalreporter.write_line(f"{verdict}  {text}")

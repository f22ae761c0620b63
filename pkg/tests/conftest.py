import numpy as np
import pytest

from _corpus import synthetic_corpus
from seconv.netpbm import write_image

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def corpus_dir(tmp_path):
    """A directory holding three small synthetic PGMs."""
    images = synthetic_corpus(size=48)
    for name in ("grad_d", "checker8", "texture1"):
        write_image(tmp_path / f"{name}.pgm", images[name])
    return tmp_path


@pytest.fixture
def gray_image(tmp_path):
    yy, xx = np.mgrid[0:32, 0:32]
    img = (30 + 3 * xx + 2 * yy).astype(np.uint8)[:, :, None]
    path = tmp_path / "clean.pgm"
    write_image(path, img)
    return path, img


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        status = "PASS" if report.passed else "FAIL"
        number, title = marker.args
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title}")
        print(f"\n[{status}] criterion {number}: {title}")

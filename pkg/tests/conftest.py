from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
SEDOV_DECK = DATA / "inputs.2d.cyl_in_cartcoords"

# filled in by test_acceptance.py, printed at the end of the run
ACCEPTANCE = {}


@pytest.fixture
def sedov_deck_text():
    return SEDOV_DECK.read_text()


@pytest.fixture
def sedov_deck_path():
    return SEDOV_DECK


def write_tree(root, files):
    """Create ``files`` ({relative path: size}) under ``root`` with zero filler."""
    root = Path(root)
    for rel, size in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(b"\0" * size)
    return root


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {line}")

import pytest

from cantorproj.grid import GridSequence


@pytest.fixture
def flagship():
    return GridSequence.constant(3, 2, 10)


def report(label: str, ok: bool, detail: str = "") -> None:
    """One PASS/FAIL line per acceptance criterion (visible with -s or in -rA output)."""
    print(f"\n[{'PASS' if ok else 'FAIL'}] {label}{': ' + detail if detail else ''}")

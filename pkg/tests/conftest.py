import pytest

from molecule_spectra.geometry import StripSpec, build_strip_mesh


def _unchecked_spec(d, L, M):
    # StripSpec insists on L >= 4 d; tiny hand-checkable strips need less
    spec = object.__new__(StripSpec)
    object.__setattr__(spec, "d", d)
    object.__setattr__(spec, "L", L)
    object.__setattr__(spec, "M", M)
    return spec


@pytest.fixture
def tiny_strip():
    def make(d=1.0, L=2.0, M=2, atoms=()):
        return build_strip_mesh(_unchecked_spec(d, L, M), list(atoms))

    return make


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one acceptance criterion: ``acceptance(number, ok, detail)``."""

    def record(number, ok, detail):
        _ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 10):
        ok, detail = _ACCEPTANCE.get(number, (False, "not run or raised before reporting"))
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")

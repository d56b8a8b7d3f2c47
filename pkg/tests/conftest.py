import contextlib
import time

import pytest

# (number, title, verdict, seconds, note) for each acceptance criterion that ran
ACCEPTANCE_LINES = []


class CriterionRecorder:
    @contextlib.contextmanager
    def __call__(self, number: int, title: str, budget: float | None = None):
        start = time.perf_counter()
        note = ""
        try:
            yield
            elapsed = time.perf_counter() - start
            if budget is not None and elapsed > budget:
                note = f"over budget of {budget:g} s"
                raise AssertionError(f"criterion {number} took {elapsed:.2f} s, budget {budget:g} s")
        except BaseException as exc:
            note = note or str(exc).splitlines()[0][:120]
            self._emit(number, title, "FAIL", time.perf_counter() - start, note)
            raise
        else:
            self._emit(number, title, "PASS", elapsed, "")

    @staticmethod
    def _emit(number, title, verdict, elapsed, note):
        ACCEPTANCE_LINES.append((number, title, verdict, elapsed, note))
        tail = f" ({note})" if note else ""
        print(f"criterion {number}: {verdict} [{elapsed:.2f} s] {title}{tail}")


@pytest.fixture
def criterion():
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, elapsed, note in sorted(ACCEPTANCE_LINES):
        tail = f" ({note})" if note else ""
        terminalreporter.write_line(f"criterion {number}: {verdict} [{elapsed:.2f} s] {title}{tail}")

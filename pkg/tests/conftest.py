import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


class AcceptanceLog:
    """Collects per-part outcomes; one summary line per criterion at the end."""

    def __init__(self, store):
        self.store = store

    def record(self, criterion: str, part: str, passed: bool, detail: str = "") -> None:
        self.store.setdefault(criterion, []).append((part, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'}  {criterion} / {part}  {detail}")


@pytest.fixture(scope="session")
def acceptance(request):
    return AcceptanceLog(request.config.stash[_RESULTS])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, parts in store.items():
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({info})" for name, good, info in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  [{detail}]")

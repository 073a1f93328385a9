import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ptlc_swap.group import SECP256K1, TOY  # noqa: E402


@pytest.fixture(params=["toy", "secp256k1"])
def group(request):
    return TOY if request.param == "toy" else SECP256K1


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.format_results():
        terminalreporter.write_line(line)

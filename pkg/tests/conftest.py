import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from doflab import DoFTuple, NetworkConfig  # noqa: E402

# (M, N, original tuple, expected modified tuple or None when no detour exists)
GOLDEN = {
    "y_detour": ((3, 2, 2), 3, (2, 0, 0, 1, 1, 0), (2, 1, 1, 0, 1, 0)),
    "four_user_double_cycle": (
        (6, 5, 4, 3), 6, (1, 1, 0, 0, 1, 2, 0, 0, 1, 2, 0, 0), (1, 1, 2, 1, 1, 1, 1, 0, 0, 2, 0, 0),
    ),
    "four_user_single_cycle": (
        (6, 6, 4, 3), 6, (1, 1, 1, 0, 2, 0, 0, 0, 1, 0, 1, 0), (1, 1, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1),
    ),
}
Y_STUCK = ((3, 2, 2), 4, (2, 0, 0, 2, 2, 0))
FOUR_STUCK = ((2, 2, 2, 2), 4, (0, 0, 0, 0, 2, 0, 0, 0, 2, 0, 2, 0))
FOUR_STUCK_AS_PRINTED = ((2, 2, 2, 2), 4, (1, 1, 0, 0, 2, 0, 0, 0, 2, 0, 2, 0))


def build(M, N, flat):
    return NetworkConfig(M, N), DoFTuple.from_flat(flat)


@pytest.fixture(params=sorted(GOLDEN))
def golden(request):
    M, N, orig, mod = GOLDEN[request.param]
    cfg, d = build(M, N, orig)
    return request.param, cfg, d, DoFTuple.from_flat(mod)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])

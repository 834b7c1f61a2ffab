import numpy as np
import pytest

from doflab.model import (
    CycleKind,
    DoFTuple,
    NetworkConfig,
    Route,
    RoutingTable,
    argmax_edges,
    derive_profile,
)

from conftest import build


def test_config_sorts_and_remembers_labels():
    cfg = NetworkConfig.from_unsorted((2, 3, 2), 3)
    assert cfg.M == (3, 2, 2)
    assert cfg.labels == (1, 0, 2)
    assert cfg.to_json() == {"K": 3, "M": [2, 3, 2], "N": 3}


def test_config_rejects_bad_sizes():
    with pytest.raises(ValueError):
        NetworkConfig((1, 1), 1)
    with pytest.raises(ValueError):
        NetworkConfig((1, 0, 1), 1)
    with pytest.raises(ValueError):
        NetworkConfig((1, 2, 3), 1, labels=(0, 1, 2))


def test_canonical_round_trip():
    cfg = NetworkConfig.from_unsorted((2, 2, 5, 3), 4)
    raw = np.arange(16).reshape(4, 4)
    np.fill_diagonal(raw, 0)
    d = cfg.canonical_tuple(raw)
    assert np.array_equal(cfg.original_tuple(d).array(), raw)
    # the 5-antenna user is first after sorting
    assert d[0, 1] == raw[2, 3]


@pytest.mark.parametrize(
    "bad",
    [np.zeros((3, 2)), [[0, -1, 0], [0, 0, 0], [0, 0, 0]], [[1, 0, 0], [0, 0, 0], [0, 0, 0]],
     [[0, 0.5, 0], [0, 0, 0], [0, 0, 0]], [[0, np.nan, 0], [0, 0, 0], [0, 0, 0]]],
)
def test_tuple_validation(bad):
    with pytest.raises(ValueError):
        DoFTuple(bad)


def test_flat_layout_is_row_major_off_diagonal():
    d = DoFTuple.from_flat((1, 2, 3, 4, 5, 6))
    assert d[0, 1] == 1 and d[0, 2] == 2 and d[1, 0] == 3 and d[2, 1] == 6
    assert d.flat == (1, 2, 3, 4, 5, 6)
    assert d.total == 21
    with pytest.raises(ValueError):
        DoFTuple.from_flat((1, 2, 3))


def test_profile_of_y_example():
    cfg, d = build((3, 2, 2), 3, (2, 0, 0, 1, 1, 0))
    p = derive_profile(cfg, d)
    assert p.nbar == 4
    assert p.mbar == (2, 2, 1)
    assert p.cycle_form.kind is CycleKind.Y_FORWARD
    assert p.cycle_form.cycle == (0, 1, 2)


def test_profile_within_budget_has_no_cycle_form():
    cfg, d = build((3, 2, 2), 3, (2, 1, 1, 0, 1, 0))
    p = derive_profile(cfg, d)
    assert p.nbar == 3
    assert not p.cycle_form.exceeded


def test_double_cycle_form():
    cfg, d = build((6, 5, 4, 3), 6, (1, 1, 0, 0, 1, 2, 0, 0, 1, 2, 0, 0))
    f = derive_profile(cfg, d).cycle_form
    assert f.kind is CycleKind.DOUBLE_CYCLE
    assert f.cycle == (0, 1, 2, 3)


def test_single_cycle_form():
    cfg, d = build((6, 6, 4, 3), 6, (1, 1, 1, 0, 2, 0, 0, 0, 1, 0, 1, 0))
    f = derive_profile(cfg, d).cycle_form
    assert f.kind is CycleKind.SINGLE_CYCLE
    assert (f.outsider, f.direction, f.cycle) == (0, "out", (1, 2, 3))


def test_argmax_ties_go_forward():
    d = DoFTuple.from_flat((1, 0, 1, 0, 0, 0))
    assert argmax_edges(d)[0] == (0, 1)


def test_profile_dimension_mismatch():
    with pytest.raises(ValueError):
        derive_profile(NetworkConfig((1, 1, 1, 1), 2), DoFTuple.zeros(3))


def test_routing_table_accounting():
    t = RoutingTable((Route(1, 2, (1, 0, 2), 2), Route(0, 1, (0, 1), 1)))
    assert t.delivered(3)[1, 2] == 2
    hop = t.hop_load(3)
    assert hop[1, 0] == 2 and hop[0, 2] == 2 and hop[0, 1] == 1
    with pytest.raises(ValueError):
        Route(0, 1, (0, 2), 1)

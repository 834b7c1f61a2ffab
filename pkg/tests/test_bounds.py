import json
from pathlib import Path

import numpy as np
import pytest

from doflab import bounds
from doflab.model import DoFTuple, NetworkConfig

from conftest import FOUR_STUCK, FOUR_STUCK_AS_PRINTED, Y_STUCK, build
from oracle import feasible as oracle_feasible
from oracle import flat_to_dict

N_RANDOM = 10_000


def random_batch(rng, K, n, high=3):
    batch = rng.integers(0, high + 1, size=(n, K, K))
    batch[:, np.arange(K), np.arange(K)] = 0
    return batch


def random_config(rng, K):
    M = tuple(int(x) for x in rng.integers(1, 7, size=K))
    return NetworkConfig.from_unsorted(M, int(rng.integers(1, 9)))


def test_y_example_is_feasible():
    cfg, d = build((3, 2, 2), 3, (2, 0, 0, 1, 1, 0))
    rep = bounds.check_theorem1(cfg, d)
    assert rep.feasible and rep.violations == ()
    assert rep.total_dof == 4 and rep.total_dof_cap == 6


def test_stuck_y_instance_is_feasible_with_cap_seven():
    cfg, d = build(*Y_STUCK)
    rep = bounds.check(cfg, d)
    assert rep.feasible
    assert rep.total_dof_cap == 7


def test_node_bound_violation_is_reported():
    cfg, d = build((3, 2, 2), 3, (2, 2, 0, 0, 0, 0))
    rep = bounds.check(cfg, d)
    assert not rep.feasible
    fams = {(v.family, v.assignment[0]) for v in rep.violations}
    assert ("node_out", 0) in fams
    assert all(v.lhs > v.rhs for v in rep.violations)


def test_four_user_examples_feasible():
    for M, N, flat in [
        ((6, 5, 4, 3), 6, (1, 1, 0, 0, 1, 2, 0, 0, 1, 2, 0, 0)),
        ((6, 6, 4, 3), 6, (1, 1, 1, 0, 2, 0, 0, 0, 1, 0, 1, 0)),
        FOUR_STUCK,
    ]:
        cfg, d = build(M, N, flat)
        assert bounds.check_theorem2(cfg, d).feasible


def test_printed_four_user_stuck_tuple_is_outside_the_bound():
    cfg, d = build(*FOUR_STUCK_AS_PRINTED)
    rep = bounds.check_theorem2(cfg, d)
    assert not rep.feasible
    assert {"node_in", "pair_in", "triple_in", "triple_out"} <= {v.family for v in rep.violations}
    assert not oracle_feasible(cfg.M, cfg.N, flat_to_dict(4, d.flat))


def test_wrong_dimension_is_an_error():
    with pytest.raises(ValueError):
        bounds.check_theorem1(NetworkConfig((2, 2, 2, 2), 4), DoFTuple.zeros(4))
    with pytest.raises(ValueError):
        bounds.check_theorem2(NetworkConfig((2, 2, 2), 4), DoFTuple.zeros(3))
    with pytest.raises(ValueError):
        bounds.check(NetworkConfig((2, 2, 2), 4), DoFTuple.zeros(4))


def test_instance_counts():
    assert len(bounds.inequalities(NetworkConfig((2, 2, 2), 2))) == 6 * 4 + 1
    assert len(bounds.inequalities(NetworkConfig((2, 2, 2, 2), 2))) == 24 * 6 + 1


def test_single_and_batch_checks_agree():
    rng = np.random.default_rng(3)
    for K in (3, 4):
        cfg = random_config(rng, K)
        batch = random_batch(rng, K, 200)
        fast = bounds.batch_feasible(cfg, batch)
        slow = [bounds.check(cfg, DoFTuple(a)).feasible for a in batch]
        assert fast.tolist() == slow


@pytest.mark.parametrize("K", [3, 4])
def test_agrees_with_literal_oracle(K):
    rng = np.random.default_rng(100 + K)
    per_cfg = 100
    mismatches = 0
    for _ in range(N_RANDOM // per_cfg):
        cfg = random_config(rng, K)
        batch = random_batch(rng, K, per_cfg, high=2)
        fast = bounds.batch_feasible(cfg, batch)
        for a, f in zip(batch, fast):
            flat = DoFTuple(a).flat
            mismatches += f != oracle_feasible(cfg.M, cfg.N, flat_to_dict(K, flat))
    assert mismatches == 0


@pytest.mark.parametrize("K", [3, 4])
def test_monotone_in_every_entry(K):
    rng = np.random.default_rng(200 + K)
    for _ in range(N_RANDOM // 500):
        cfg = random_config(rng, K)
        batch = random_batch(rng, K, 500, high=2)
        base = bounds.batch_feasible(cfg, batch)
        for i in range(K):
            for j in range(K):
                if i == j:
                    continue
                up = batch.copy()
                up[:, i, j] += 1
                # adding demand never turns an infeasible tuple feasible
                assert not np.any(bounds.batch_feasible(cfg, up) & ~base)
                down = batch.copy()
                down[:, i, j] = np.maximum(down[:, i, j] - 1, 0)
                assert np.all(bounds.batch_feasible(cfg, down)[base])


@pytest.mark.parametrize("K", [3, 4])
def test_relabeling_invariance(K):
    rng = np.random.default_rng(300 + K)
    for _ in range(N_RANDOM // 100):
        M = rng.integers(1, 7, size=K)
        N = int(rng.integers(1, 9))
        perm = rng.permutation(K)
        cfg_a = NetworkConfig.from_unsorted(M, N)
        cfg_b = NetworkConfig.from_unsorted(M[perm], N)
        raw = random_batch(rng, K, 100, high=2)
        a = np.stack([cfg_a.canonical_tuple(x).array() for x in raw])
        b = np.stack([cfg_b.canonical_tuple(x[np.ix_(perm, perm)]).array() for x in raw])
        assert np.array_equal(bounds.batch_feasible(cfg_a, a), bounds.batch_feasible(cfg_b, b))


@pytest.mark.parametrize("K", [3, 4])
def test_total_cap_matches_derivation(K):
    rng = np.random.default_rng(400 + K)
    for _ in range(N_RANDOM // 2):
        cfg = random_config(rng, K)
        assert bounds.derived_cap(cfg) == bounds.closed_form_cap(cfg) == bounds.total_dof_cap(cfg)


def test_region_fixture():
    fx = json.loads((Path(__file__).parent / "fixtures" / "region_y_111_n3_cap1.json").read_text())
    cfg = NetworkConfig(tuple(fx["M"]), fx["N"])
    got = [list(t.flat) for t in bounds.enumerate_region(cfg, fx["cap"])]
    assert got == fx["tuples"]


def test_enumeration_guard():
    with pytest.raises(bounds.SearchSpaceTooLarge):
        next(bounds.iter_region(NetworkConfig((9, 9, 9, 9), 9), 9))
    with pytest.raises(ValueError):
        bounds.enumerate_region(NetworkConfig((1, 1, 1), 1), -1)


def test_report_json_uses_original_labels():
    cfg = NetworkConfig.from_unsorted((2, 3, 2), 3)
    d = cfg.canonical_tuple([[0, 0, 0], [2, 0, 2], [0, 0, 0]])
    out = bounds.check(cfg, d).to_json(cfg.labels)
    assert not out["feasible"]
    assert any(v["inequality"] == "node_out" and v["assignment"][0] == 2 for v in out["violations"])

"""Outer-bound inequality systems for the 3-user (Y) and 4-user relay networks.

Every inequality is expanded into concrete *instances*, one per ordered index
assignment, each holding the list of plain terms ``d[i, j]``, the list of
pairwise-max terms ``max(d[a, b], d[b, a])`` and an integer right-hand side.
Instances are evaluated with exact int64 arithmetic, either for one tuple
(:func:`check_theorem1`, :func:`check_theorem2`) or for a whole batch of
tuples at once (:func:`batch_slack`), which is what region enumeration and
the property suites use.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .model import DoFTuple, NetworkConfig

__all__ = [
    "Inequality",
    "Violation",
    "BoundReport",
    "BoundsConsistencyError",
    "SearchSpaceTooLarge",
    "inequalities",
    "distinct_positions",
    "check_theorem1",
    "check_theorem2",
    "check",
    "slacks",
    "batch_slack",
    "batch_feasible",
    "total_dof_cap",
    "closed_form_cap",
    "derived_cap",
    "enumerate_region",
    "iter_region",
    "MAX_SEARCH_POINTS",
]

MAX_SEARCH_POINTS = 10**8


class BoundsConsistencyError(AssertionError):
    """The closed-form total-DoF cap disagrees with its derivation from the inequalities."""


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Inequality:
    family: str
    assignment: tuple[int, ...]
    plain: tuple[tuple[int, int], ...]
    maxed: tuple[tuple[int, int], ...]
    rhs: int

    def lhs(self, a) -> int:
        return sum(int(a[i][j]) for i, j in self.plain) + sum(
            max(int(a[i][j]), int(a[j][i])) for i, j in self.maxed
        )

    def render(self) -> str:
        terms = [f"d{i + 1}{j + 1}" for i, j in self.plain]
        terms += [f"max(d{i + 1}{j + 1},d{j + 1}{i + 1})" for i, j in self.maxed]
        return " + ".join(terms) + f" <= {self.rhs}"


@dataclass(frozen=True)
class Violation:
    family: str
    lhs: int
    rhs: int
    assignment: tuple[int, ...]


@dataclass(frozen=True)
class BoundReport:
    feasible: bool
    violations: tuple[Violation, ...]
    total_dof: int
    total_dof_cap: int
    min_slack: int

    def to_json(self, labels: tuple[int, ...] | None = None) -> dict:
        relabel = (lambda n: labels[n] + 1) if labels else (lambda n: n + 1)
        return {
            "feasible": self.feasible,
            "totalDof": self.total_dof,
            "totalDofCap": self.total_dof_cap,
            "minSlack": self.min_slack,
            "violations": [
                {
                    "inequality": v.family,
                    "lhs": v.lhs,
                    "rhs": v.rhs,
                    "assignment": [relabel(n) for n in v.assignment],
                }
                for v in self.violations
            ],
        }


def closed_form_cap(cfg: NetworkConfig) -> int:
    M = cfg.M
    return min(2 * cfg.N, sum(M), 2 * sum(M[1:]))


@lru_cache(maxsize=256)
def _instances(M: tuple[int, ...], N: int) -> tuple[Inequality, ...]:
    K = len(M)
    out: list[Inequality] = []
    if K == 3:
        for i, j, k in itertools.permutations(range(3)):
            a = (i, j, k)
            node = min(N, M[i], M[j] + M[k])
            genie = min(N, M[j] + M[k])
            out.append(Inequality("node_out", a, ((i, j), (i, k)), (), node))
            out.append(Inequality("node_in", a, ((j, i), (k, i)), (), node))
            out.append(Inequality("genie_out", a, ((i, j), (i, k)), ((j, k),), genie))
            out.append(Inequality("genie_in", a, ((j, i), (k, i)), ((j, k),), genie))
    else:
        for i, j, k, l in itertools.permutations(range(4)):
            a = (i, j, k, l)
            node = min(M[i], N, M[j] + M[k] + M[l])
            two = min(N, M[i] + M[j])
            three = min(N, M[i] + M[j] + M[k])
            out.append(Inequality("node_out", a, ((i, j), (i, k), (i, l)), (), node))
            out.append(Inequality("node_in", a, ((j, i), (k, i), (l, i)), (), node))
            out.append(
                Inequality("pair_out", a, ((i, k), (i, l), (j, k), (j, l)), ((i, j),), two)
            )
            out.append(
                Inequality("pair_in", a, ((k, i), (l, i), (k, j), (l, j)), ((i, j),), two)
            )
            out.append(
                Inequality(
                    "triple_out", a, ((i, l), (j, l), (k, l), (i, j), (i, k)), ((j, k),), three
                )
            )
            out.append(
                Inequality(
                    "triple_in", a, ((l, i), (l, j), (l, k), (j, i), (k, i)), ((j, k),), three
                )
            )
    every = tuple((i, j) for i in range(K) for j in range(K) if i != j)
    cap = min(2 * N, sum(M), 2 * sum(M[1:]))
    out.append(Inequality("total", tuple(range(K)), every, (), cap))
    return tuple(out)


@lru_cache(maxsize=256)
def _distinct(M: tuple[int, ...], N: int) -> np.ndarray:
    seen: dict = {}
    for pos, q in enumerate(_instances(M, N)):
        key = (q.family, frozenset(q.plain), frozenset(frozenset(m) for m in q.maxed))
        seen.setdefault(key, pos)
    return np.array(sorted(seen.values()), dtype=np.intp)


def distinct_positions(cfg: NetworkConfig) -> np.ndarray:
    """Index of one representative per inequality, dropping symmetric re-assignments."""
    return _distinct(cfg.M, cfg.N)


def inequalities(cfg: NetworkConfig) -> tuple[Inequality, ...]:
    """All inequality instances (every ordered assignment) plus the total-DoF bound."""
    return _instances(cfg.M, cfg.N)


@dataclass
class _Family:
    plain: np.ndarray  # (n_inst, n_plain, 2)
    maxed: np.ndarray  # (n_inst, n_max, 2)
    rhs: np.ndarray  # (n_inst,)
    positions: np.ndarray  # index of each instance in the flat instance list


@lru_cache(maxsize=256)
def _families(M: tuple[int, ...], N: int) -> tuple[_Family, ...]:
    groups: dict[str, list[int]] = {}
    inst = _instances(M, N)
    for pos, q in enumerate(inst):
        groups.setdefault(q.family, []).append(pos)
    fams = []
    for positions in groups.values():
        qs = [inst[p] for p in positions]
        plain = np.array([q.plain for q in qs], dtype=np.intp).reshape(len(qs), -1, 2)
        maxed = np.array([q.maxed for q in qs], dtype=np.intp).reshape(len(qs), -1, 2)
        fams.append(
            _Family(plain, maxed, np.array([q.rhs for q in qs], dtype=np.int64), np.array(positions))
        )
    return tuple(fams)


def batch_slack(cfg: NetworkConfig, batch: np.ndarray) -> np.ndarray:
    """``rhs - lhs`` for every instance and every tuple in ``batch`` (shape ``(n, K, K)``).

    Returns an int64 array of shape ``(n, len(inequalities(cfg)))``.
    """
    batch = np.asarray(batch, dtype=np.int64)
    if batch.ndim == 2:
        batch = batch[None]
    n = batch.shape[0]
    inst = _instances(cfg.M, cfg.N)
    out = np.empty((n, len(inst)), dtype=np.int64)
    for fam in _families(cfg.M, cfg.N):
        lhs = batch[:, fam.plain[..., 0], fam.plain[..., 1]].sum(axis=-1)
        if fam.maxed.shape[1]:
            fwd = batch[:, fam.maxed[..., 0], fam.maxed[..., 1]]
            bwd = batch[:, fam.maxed[..., 1], fam.maxed[..., 0]]
            lhs = lhs + np.maximum(fwd, bwd).sum(axis=-1)
        out[:, fam.positions] = fam.rhs[None, :] - lhs
    return out


def batch_feasible(cfg: NetworkConfig, batch: np.ndarray) -> np.ndarray:
    return (batch_slack(cfg, batch) >= 0).all(axis=1)


def slacks(cfg: NetworkConfig, d: DoFTuple) -> np.ndarray:
    """Slack of every inequality instance for a single tuple."""
    _require_dims(cfg, d)
    return batch_slack(cfg, d.array())[0]


def _require_dims(cfg: NetworkConfig, d: DoFTuple) -> None:
    if d.K != cfg.K:
        raise ValueError(f"tuple is {d.K}x{d.K} but the network has K={cfg.K}")


def _report(cfg: NetworkConfig, d: DoFTuple) -> BoundReport:
    s = slacks(cfg, d)
    inst = inequalities(cfg)
    viol = tuple(
        Violation(q.family, q.rhs - int(sl), q.rhs, q.assignment)
        for q, sl in zip(inst, s)
        if sl < 0
    )
    return BoundReport(
        feasible=not viol,
        violations=viol,
        total_dof=d.total,
        total_dof_cap=total_dof_cap(cfg),
        min_slack=int(s.min()),
    )


def check_theorem1(cfg: NetworkConfig, d: DoFTuple) -> BoundReport:
    """Evaluate the Y-channel outer bound; every violated instance is reported."""
    if cfg.K != 3:
        raise ValueError(f"check_theorem1 needs K=3, got K={cfg.K}")
    _require_dims(cfg, d)
    return _report(cfg, d)


def check_theorem2(cfg: NetworkConfig, d: DoFTuple) -> BoundReport:
    """Evaluate the 4-user outer bound; every violated instance is reported."""
    if cfg.K != 4:
        raise ValueError(f"check_theorem2 needs K=4, got K={cfg.K}")
    _require_dims(cfg, d)
    return _report(cfg, d)


def check(cfg: NetworkConfig, d: DoFTuple) -> BoundReport:
    return check_theorem1(cfg, d) if cfg.K == 3 else check_theorem2(cfg, d)


def _find(inst, family: str, assignment: tuple[int, ...]) -> Inequality:
    for q in inst:
        if q.family == family and q.assignment == assignment:
            return q
    raise KeyError((family, assignment))


def derived_cap(cfg: NetworkConfig) -> int:
    """Total-DoF cap rebuilt by summing inequality instances.

    Per-node route: add the outgoing node bound of every user. Genie route:
    add the two genie/three-user bounds that keep user 1 on one side; their
    terms (choosing opposite directions inside the shared max) cover every
    demand exactly once.
    """
    K = cfg.K
    inst = inequalities(cfg)
    node_sum = 0
    for i in range(K):
        others = tuple(n for n in range(K) if n != i)
        node_sum += _find(inst, "node_out", (i,) + others).rhs

    if K == 3:
        up = _find(inst, "genie_out", (0, 1, 2))
        down = _find(inst, "genie_in", (0, 1, 2))
    else:
        up = _find(inst, "triple_out", (1, 2, 3, 0))
        down = _find(inst, "triple_in", (1, 2, 3, 0))
    (a, b), = up.maxed
    covered = list(up.plain) + [(a, b)] + list(down.plain) + [(b, a)]
    every = [(i, j) for i in range(K) for j in range(K) if i != j]
    if sorted(covered) != every:
        raise BoundsConsistencyError("genie pair does not cover every demand exactly once")
    return min(node_sum, up.rhs + down.rhs)


def total_dof_cap(cfg: NetworkConfig) -> int:
    """Closed-form total-DoF cap, cross-checked against its derivation from the inequalities."""
    closed = closed_form_cap(cfg)
    derived = derived_cap(cfg)
    if closed != derived:
        raise BoundsConsistencyError(
            f"closed-form cap {closed} != derived cap {derived} for M={cfg.M}, N={cfg.N}"
        )
    return closed


def _grid_size(K: int, cap: int) -> int:
    return (cap + 1) ** (K * (K - 1))


def iter_region(
    cfg: NetworkConfig, cap: int, chunk: int = 1 << 16
) -> Iterator[DoFTuple]:
    """Yield feasible tuples with every entry <= ``cap`` in lexicographic order of the flat listing."""
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    K = cfg.K
    n_free = K * (K - 1)
    total = _grid_size(K, cap)
    if total > MAX_SEARCH_POINTS:
        raise SearchSpaceTooLarge(
            f"{total} grid points exceed the enumeration guard of {MAX_SEARCH_POINTS}"
        )
    rows, cols = np.nonzero(~np.eye(K, dtype=bool))
    radix = (cap + 1) ** np.arange(n_free - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (codes[:, None] // radix[None, :]) % (cap + 1)
        batch = np.zeros((len(codes), K, K), dtype=np.int64)
        batch[:, rows, cols] = digits
        ok = batch_feasible(cfg, batch)
        for a in batch[ok]:
            yield DoFTuple(a)


def enumerate_region(cfg: NetworkConfig, cap: int) -> list[DoFTuple]:
    """All integral tuples with entries <= ``cap`` inside the outer bound, sorted."""
    return list(iter_region(cfg, cap))

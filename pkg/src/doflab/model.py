"""Network configurations, DoF demand tuples and the quantities derived from them.

Users are indexed from 0 internally; every human-facing rendering (reprs,
rationale strings, JSON) uses 1-based labels so that user 1 is the one with
the most antennas.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "NetworkConfig",
    "DoFTuple",
    "CycleKind",
    "CycleForm",
    "DerivedProfile",
    "Route",
    "RoutingTable",
    "derive_profile",
    "pairs",
    "argmax_edges",
]


def pairs(K: int) -> list[tuple[int, int]]:
    """Unordered user pairs ``(a, b)`` with ``a < b`` in lexicographic order."""
    return list(itertools.combinations(range(K), 2))


@dataclass(frozen=True)
class NetworkConfig:
    """A K-user MIMO relay network with no direct user-to-user links.

    ``M`` is stored sorted non-increasing. ``labels[p]`` is the caller's
    original index of the user sitting at sorted position ``p``; use
    :meth:`from_unsorted` when the caller's labelling is arbitrary.
    """

    M: tuple[int, ...]
    N: int
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        M = tuple(int(m) for m in self.M)
        if len(M) not in (3, 4):
            raise ValueError(f"only 3 or 4 users are supported, got K={len(M)}")
        if any(m < 1 for m in M) or int(self.N) < 1:
            raise ValueError("antenna counts must be positive")
        order = sorted(range(len(M)), key=lambda i: -M[i])
        if self.labels is None:
            labels = tuple(order)
            M = tuple(M[i] for i in order)
        else:
            labels = tuple(int(x) for x in self.labels)
            if sorted(labels) != list(range(len(M))):
                raise ValueError("labels must be a permutation of the user indices")
            if any(M[p] < M[p + 1] for p in range(len(M) - 1)):
                raise ValueError("M must be non-increasing when labels are given")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_unsorted(cls, M: Sequence[int], N: int) -> NetworkConfig:
        return cls(tuple(M), N)

    @property
    def K(self) -> int:
        return len(self.M)

    @property
    def is_identity_labelling(self) -> bool:
        return self.labels == tuple(range(self.K))

    def canonical_tuple(self, d) -> DoFTuple:
        """Re-index a demand matrix given in the caller's labels into sorted order."""
        a = np.asarray(d if not isinstance(d, DoFTuple) else d.array(), dtype=np.int64)
        idx = np.asarray(self.labels)
        return DoFTuple(a[np.ix_(idx, idx)])

    def original_tuple(self, d: DoFTuple) -> DoFTuple:
        """Inverse of :meth:`canonical_tuple`."""
        a = d.array()
        out = np.zeros_like(a)
        idx = np.asarray(self.labels)
        out[np.ix_(idx, idx)] = a
        return DoFTuple(out)

    def original_user(self, p: int) -> int:
        return self.labels[p]

    def to_json(self) -> dict:
        M = [0] * self.K
        for p, orig in enumerate(self.labels):
            M[orig] = self.M[p]
        return {"K": self.K, "M": M, "N": self.N}


@dataclass(frozen=True)
class DoFTuple:
    """K x K integer demand matrix; ``d[i, j]`` streams flow from user i to user j."""

    d: tuple[tuple[int, ...], ...]

    def __init__(self, d):
        a = np.asarray(d)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"demand matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a.astype(float))):
            raise ValueError("demands must be finite")
        if np.any(a != np.round(a)):
            raise ValueError("demands must be integers")
        a = a.astype(np.int64)
        if np.any(a < 0):
            raise ValueError("demands must be nonnegative")
        if np.any(np.diag(a) != 0):
            raise ValueError("diagonal of the demand matrix must be zero")
        object.__setattr__(self, "d", tuple(tuple(int(x) for x in row) for row in a))

    @classmethod
    def from_flat(cls, values: Sequence[int], K: int | None = None) -> DoFTuple:
        """Build from the row-major off-diagonal listing ``(d12, d13, d21, d23, ...)``."""
        values = list(values)
        if K is None:
            K = {6: 3, 12: 4}.get(len(values))
            if K is None:
                raise ValueError(f"cannot infer K from {len(values)} entries")
        if len(values) != K * (K - 1):
            raise ValueError(f"expected {K * (K - 1)} entries for K={K}")
        a = np.zeros((K, K), dtype=np.int64)
        it = iter(values)
        for i in range(K):
            for j in range(K):
                if i != j:
                    a[i, j] = next(it)
        return cls(a)

    @classmethod
    def zeros(cls, K: int) -> DoFTuple:
        return cls(np.zeros((K, K), dtype=np.int64))

    @property
    def K(self) -> int:
        return len(self.d)

    @property
    def flat(self) -> tuple[int, ...]:
        K = self.K
        return tuple(self.d[i][j] for i in range(K) for j in range(K) if i != j)

    @property
    def total(self) -> int:
        return sum(self.flat)

    def array(self) -> np.ndarray:
        return np.array(self.d, dtype=np.int64)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.d[i][j]

    def transpose(self) -> DoFTuple:
        return DoFTuple(self.array().T)

    def __repr__(self) -> str:
        return f"DoFTuple{self.flat}"


class CycleKind(str, enum.Enum):
    NONE = "none"
    Y_FORWARD = "y_forward"
    Y_REVERSE = "y_reverse"
    SINGLE_CYCLE = "single_cycle"
    DOUBLE_CYCLE = "double_cycle"
    # only reachable for tuples that already violate the outer bound
    ACYCLIC = "acyclic"


@dataclass(frozen=True)
class CycleForm:
    """Shape of the relay-demand sum when it exceeds the relay antennas.

    ``cycle`` lists the oriented cycle, starting at its smallest node: a
    3-cycle for the Y forms and the single-cycle form, the Hamiltonian
    4-cycle for the double-cycle form. ``outsider``/``direction`` are set for
    the single-cycle form only: the fourth user and whether its three argmax
    edges all leave it (``"out"``) or all enter it (``"in"``).
    """

    kind: CycleKind
    cycle: tuple[int, ...] = ()
    outsider: int | None = None
    direction: str | None = None
    edges: tuple[tuple[int, int], ...] = ()

    @property
    def exceeded(self) -> bool:
        return self.kind is not CycleKind.NONE

    def cycle_edges(self) -> list[tuple[int, int]]:
        c = self.cycle
        return [(c[t], c[(t + 1) % len(c)]) for t in range(len(c))]

    def describe(self) -> str:
        lab = lambda n: str(n + 1)  # noqa: E731
        if self.kind is CycleKind.NONE:
            return "relay demand within budget"
        if self.kind in (CycleKind.Y_FORWARD, CycleKind.Y_REVERSE, CycleKind.DOUBLE_CYCLE):
            return f"{self.kind.value} " + "->".join(map(lab, self.cycle + self.cycle[:1]))
        if self.kind is CycleKind.SINGLE_CYCLE:
            return (
                f"single 3-cycle " + "->".join(map(lab, self.cycle + self.cycle[:1]))
                + f" with user {self.outsider + 1} all-{self.direction}"
            )
        return "acyclic (outer bound violated)"


@dataclass(frozen=True)
class DerivedProfile:
    dstar: dict[tuple[int, int], int]
    mbar: tuple[int, ...]
    nbar: int
    cycle_form: CycleForm


def argmax_edges(d: DoFTuple) -> tuple[tuple[int, int], ...]:
    """Directed edge per unordered pair pointing along the larger demand.

    Ties resolve to the forward direction (lower index to higher index).
    """
    return tuple((a, b) if d[a, b] >= d[b, a] else (b, a) for a, b in pairs(d.K))


def _three_cycle(nodes: Iterable[int], edge_set: set[tuple[int, int]]) -> tuple[int, ...] | None:
    a, b, c = sorted(nodes)
    if {(a, b), (b, c), (c, a)} <= edge_set:
        return (a, b, c)
    if {(a, c), (c, b), (b, a)} <= edge_set:
        return (a, c, b)
    return None


def _classify(K: int, edges: tuple[tuple[int, int], ...]) -> CycleForm:
    edge_set = set(edges)
    outdeg = [0] * K
    for a, _ in edges:
        outdeg[a] += 1
    if K == 3:
        cyc = _three_cycle(range(3), edge_set)
        if cyc is None:
            return CycleForm(CycleKind.ACYCLIC, edges=edges)
        kind = CycleKind.Y_FORWARD if cyc == (0, 1, 2) else CycleKind.Y_REVERSE
        return CycleForm(kind, cycle=cyc, edges=edges)

    sources = [n for n in range(K) if outdeg[n] == K - 1]
    sinks = [n for n in range(K) if outdeg[n] == 0]
    if sources and sinks:
        return CycleForm(CycleKind.ACYCLIC, edges=edges)
    if sources or sinks:
        outsider = (sources or sinks)[0]
        rest = [n for n in range(K) if n != outsider]
        cyc = _three_cycle(rest, edge_set)
        assert cyc is not None
        return CycleForm(
            CycleKind.SINGLE_CYCLE,
            cycle=cyc,
            outsider=outsider,
            direction="out" if sources else "in",
            edges=edges,
        )
    # strongly connected tournament on 4 nodes: unique Hamiltonian cycle
    for perm in itertools.permutations(range(1, K)):
        order = (0,) + perm
        if all((order[t], order[(t + 1) % K]) in edge_set for t in range(K)):
            return CycleForm(CycleKind.DOUBLE_CYCLE, cycle=order, edges=edges)
    raise AssertionError("strongly connected 4-tournament without a Hamiltonian cycle")


def derive_profile(cfg: NetworkConfig, d: DoFTuple) -> DerivedProfile:
    """Pairwise maxima, used antennas per user, relay demand and its cycle form."""
    if d.K != cfg.K:
        raise ValueError(f"tuple is {d.K}x{d.K} but the network has K={cfg.K}")
    a = d.array()
    dstar = {(i, j): int(max(a[i, j], a[j, i])) for i, j in pairs(cfg.K)}
    mbar = tuple(int(max(a[i].sum(), a[:, i].sum())) for i in range(cfg.K))
    nbar = sum(dstar.values())
    edges = argmax_edges(d)
    if nbar > cfg.N:
        form = _classify(cfg.K, edges)
    else:
        form = CycleForm(CycleKind.NONE, edges=edges)
    return DerivedProfile(dstar=dstar, mbar=mbar, nbar=nbar, cycle_form=form)


@dataclass(frozen=True)
class Route:
    source: int
    destination: int
    via: tuple[int, ...]
    streams: int

    def __post_init__(self):
        if self.streams <= 0:
            raise ValueError("route must carry a positive number of streams")
        if self.via[0] != self.source or self.via[-1] != self.destination:
            raise ValueError("route path must start at the source and end at the destination")
        if len(set(self.via)) != len(self.via):
            raise ValueError("route path revisits a node")


@dataclass(frozen=True)
class RoutingTable:
    entries: tuple[Route, ...] = field(default_factory=tuple)

    def delivered(self, K: int) -> np.ndarray:
        """End-to-end streams per (source, destination)."""
        out = np.zeros((K, K), dtype=np.int64)
        for r in self.entries:
            out[r.source, r.destination] += r.streams
        return out

    def hop_load(self, K: int) -> np.ndarray:
        """Streams carried on each user-to-user hop through the relay."""
        out = np.zeros((K, K), dtype=np.int64)
        for r in self.entries:
            for a, b in zip(r.via, r.via[1:]):
                out[a, b] += r.streams
        return out

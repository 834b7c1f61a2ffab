"""Rerouting demands around 3-node cycles so that SSA fits in the relay.

A reroute ``(a, b) via c`` of ``n`` streams moves ``n`` of the ``a -> b``
streams onto the two-hop path ``a -> c -> b``: the hop demands become
``d[a, b] - n``, ``d[a, c] + n`` and ``d[c, b] + n``. When the relay demand
(sum of pairwise maxima) exceeds the relay antennas by ``lam``, the argmax
pattern contains a directed 3-cycle, and rerouting ``lam`` streams of one
cycle edge along the reverse of the other two edges lowers the relay demand
by exactly ``lam``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, replace

import numpy as np

from . import bounds
from .bounds import Violation
from .model import (
    CycleKind,
    DerivedProfile,
    DoFTuple,
    NetworkConfig,
    Route,
    RoutingTable,
    derive_profile,
)

__all__ = [
    "Scheme",
    "Reroute",
    "Attempt",
    "DetourPlan",
    "InfeasibleDemand",
    "DetourFailed",
    "plan",
    "apply_ds_y",
    "apply_ds1",
    "apply_ds2",
    "apply_reroutes",
    "routing_for",
    "lemma_guard",
    "exhaustive_detours",
    "double_cycle_roles",
]


class Scheme(str, enum.Enum):
    DIRECT = "direct_ssa"
    DSY = "ds_y"
    DS1 = "ds1"
    DS2 = "ds2"
    UNRESOLVED = "unresolved"


class InfeasibleDemand(ValueError):
    """The demand tuple is outside the outer bound, so no plan is attempted."""

    def __init__(self, report: bounds.BoundReport):
        self.report = report
        super().__init__(f"tuple violates {len(report.violations)} outer-bound instances")


@dataclass(frozen=True)
class Reroute:
    edge: tuple[int, int]
    via: int
    amount: int

    def describe(self) -> str:
        a, b = self.edge
        return f"{self.amount} x d{a + 1}{b + 1} via user {self.via + 1}"


@dataclass(frozen=True)
class Attempt:
    """One candidate transformation and why it was kept or rejected."""

    reroutes: tuple[Reroute, ...]
    modified: DoFTuple | None
    nbar: int | None
    violations: tuple[Violation, ...]
    accepted: bool
    reason: str
    slack: tuple[int, ...] = ()


class DetourFailed(Exception):
    def __init__(self, attempts: tuple[Attempt, ...]):
        self.attempts = attempts
        super().__init__(f"none of {len(attempts)} detour candidates passed")


@dataclass(frozen=True)
class DetourPlan:
    scheme: Scheme
    lam: int
    beta: int
    gamma: int
    reroutes: tuple[Reroute, ...]
    modified: DoFTuple | None
    routing: RoutingTable | None
    rationale: str
    original: DoFTuple
    guard: bool | None = None
    attempts: tuple[Attempt, ...] = ()
    exhaustive: dict | None = None

    @property
    def resolved(self) -> bool:
        return self.scheme is not Scheme.UNRESOLVED

    def to_json(self, cfg: NetworkConfig) -> dict:
        lab = lambda n: cfg.labels[n] + 1  # noqa: E731

        def tup(t: DoFTuple | None):
            return None if t is None else cfg.original_tuple(t).array().tolist()

        def rr(r: Reroute):
            return {"edge": [lab(r.edge[0]), lab(r.edge[1])], "via": lab(r.via), "amount": r.amount}

        out = {
            "scheme": self.scheme.value,
            "lambda": self.lam,
            "beta": self.beta,
            "gamma": self.gamma,
            "lemmaGuard": self.guard,
            "reroutes": [rr(r) for r in self.reroutes],
            "modified": tup(self.modified),
            "routing": None
            if self.routing is None
            else [
                {
                    "source": lab(r.source),
                    "destination": lab(r.destination),
                    "via": [lab(n) for n in r.via],
                    "streams": r.streams,
                }
                for r in self.routing.entries
            ],
            "rationale": self.rationale,
            "attempts": [
                {
                    "reroutes": [rr(r) for r in a.reroutes],
                    "modified": tup(a.modified),
                    "accepted": a.accepted,
                    "reason": a.reason,
                }
                for a in self.attempts
            ],
        }
        if self.exhaustive is not None:
            out["exhaustive"] = {
                k: (tup(v) if isinstance(v, DoFTuple) else v) for k, v in self.exhaustive.items()
            }
        return out


def apply_reroutes(d: DoFTuple, reroutes) -> np.ndarray:
    """Hop-demand matrix after the reroutes (may contain negative entries)."""
    a = d.array()
    for r in reroutes:
        i, j = r.edge
        a[i, j] -= r.amount
        a[i, r.via] += r.amount
        a[r.via, j] += r.amount
    return a


def routing_for(d: DoFTuple, reroutes) -> RoutingTable:
    """Routes delivering the original demand ``d`` under the given reroutes."""
    K = d.K
    moved = np.zeros((K, K), dtype=np.int64)
    detours: dict[tuple[int, int, int], int] = {}
    for r in reroutes:
        moved[r.edge] += r.amount
        key = (r.edge[0], r.edge[1], r.via)
        detours[key] = detours.get(key, 0) + r.amount
    entries = []
    for i in range(K):
        for j in range(K):
            if i == j:
                continue
            direct = d[i, j] - moved[i, j]
            if direct < 0:
                raise ValueError(f"rerouting more than d{i + 1}{j + 1}={d[i, j]} streams")
            if direct:
                entries.append(Route(i, j, (i, j), int(direct)))
            for c in range(K):
                n = detours.get((i, j, c), 0)
                if n:
                    entries.append(Route(i, j, (i, c, j), n))
    return RoutingTable(tuple(entries))


def _evaluate(cfg: NetworkConfig, d: DoFTuple, reroutes: tuple[Reroute, ...]) -> Attempt:
    a = apply_reroutes(d, reroutes)
    if np.any(a < 0):
        return Attempt(reroutes, None, None, (), False, "negative hop demand")
    mod = DoFTuple(a)
    nbar = derive_profile(cfg, mod).nbar
    rep = bounds.check(cfg, mod)
    s = tuple(int(x) for x in bounds.slacks(cfg, mod)[bounds.distinct_positions(cfg)])
    if nbar > cfg.N:
        return Attempt(reroutes, mod, nbar, rep.violations, False, f"relay demand {nbar} > N={cfg.N}", s)
    if not rep.feasible:
        fams = sorted({v.family for v in rep.violations})
        return Attempt(
            reroutes, mod, nbar, rep.violations, False, "outer bound violated: " + ", ".join(fams), s
        )
    return Attempt(reroutes, mod, nbar, (), True, "ok", s)


def _rank_key(att: Attempt):
    # smaller is better: largest min slack, fewest distinct constraints at that
    # min, then the lexicographically smallest modified tuple
    lo = min(att.slack)
    return (-lo, att.slack.count(lo), att.modified.flat)


def _select(attempts: list[Attempt]) -> Attempt:
    ok = [a for a in attempts if a.accepted]
    if not ok:
        raise DetourFailed(tuple(attempts))
    return min(ok, key=_rank_key)


def _check_margins(cfg, d, margins, what):
    """Margins implied by the outer bound plus ``nbar = N + lam``; a failure is a bounds bug."""
    if not bounds.check(cfg, d).feasible:
        return
    for label, value, need in margins:
        if value < need:
            raise AssertionError(f"{what}: margin {label}={value} < {need} on a feasible tuple")


def _finish(cfg, d, scheme, lam, beta, gamma, chosen: Attempt, attempts, note: str) -> DetourPlan:
    return DetourPlan(
        scheme=scheme,
        lam=lam,
        beta=beta,
        gamma=gamma,
        reroutes=chosen.reroutes,
        modified=chosen.modified,
        routing=routing_for(d, chosen.reroutes),
        rationale=note,
        original=d,
        attempts=tuple(attempts),
    )


def _identity(cfg, d, scheme) -> DetourPlan:
    return DetourPlan(
        scheme=scheme,
        lam=0,
        beta=0,
        gamma=0,
        reroutes=(),
        modified=d,
        routing=routing_for(d, ()),
        rationale="nothing to reroute",
        original=d,
    )


def _cycle_detour(cfg, d, lam, profile: DerivedProfile, scheme: Scheme) -> DetourPlan:
    cyc = profile.cycle_form.cycle
    edges = profile.cycle_form.cycle_edges()
    _check_margins(
        cfg,
        d,
        [(f"d{a + 1}{b + 1}-d{b + 1}{a + 1}", d[a, b] - d[b, a], lam) for a, b in edges],
        scheme.value,
    )
    attempts = []
    for a, b in edges:
        (c,) = [n for n in cyc if n not in (a, b)]
        attempts.append(_evaluate(cfg, d, (Reroute((a, b), c, lam),)))
    chosen = _select(attempts)
    r = chosen.reroutes[0]
    note = (
        f"relay demand {profile.nbar} = N + {lam}; {profile.cycle_form.describe()}; "
        f"rerouted {r.describe()}"
    )
    return _finish(cfg, d, scheme, lam, 0, 0, chosen, attempts, note)


def apply_ds_y(cfg: NetworkConfig, d: DoFTuple, lam: int) -> DetourPlan:
    """Detour ``lam`` streams of one edge of the oversubscribed 3-cycle of a Y channel."""
    if cfg.K != 3:
        raise ValueError("apply_ds_y needs K=3")
    if lam == 0:
        return _identity(cfg, d, Scheme.DSY)
    profile = derive_profile(cfg, d)
    if profile.cycle_form.kind not in (CycleKind.Y_FORWARD, CycleKind.Y_REVERSE):
        raise ValueError(f"no directed 3-cycle in the relay demand ({profile.cycle_form.describe()})")
    if profile.nbar != cfg.N + lam:
        raise ValueError(f"relay demand {profile.nbar} != N + lam = {cfg.N + lam}")
    return _cycle_detour(cfg, d, lam, profile, Scheme.DSY)


def apply_ds1(cfg: NetworkConfig, d: DoFTuple, lam: int) -> DetourPlan:
    """Detour ``lam`` streams around the single 3-cycle of a 4-user relay demand."""
    if cfg.K != 4:
        raise ValueError("apply_ds1 needs K=4")
    if lam == 0:
        return _identity(cfg, d, Scheme.DS1)
    profile = derive_profile(cfg, d)
    if profile.cycle_form.kind is not CycleKind.SINGLE_CYCLE:
        raise ValueError(f"relay demand is not single-cycle ({profile.cycle_form.describe()})")
    if profile.nbar != cfg.N + lam:
        raise ValueError(f"relay demand {profile.nbar} != N + lam = {cfg.N + lam}")
    return _cycle_detour(cfg, d, lam, profile, Scheme.DS1)


def double_cycle_roles(edges) -> tuple[int, int, int, int]:
    """Roles ``(u, v, x, y)`` in a strongly connected 4-user argmax pattern.

    The two directed 3-cycles are ``u -> v -> x -> u`` and ``u -> v -> y -> u``;
    they share the edge ``u -> v`` and ``x -> y``.
    """
    edge_set = set(edges)
    succ = {n: [b for a, b in edge_set if a == n] for n in range(4)}
    ones = [n for n in range(4) if len(succ[n]) == 1]
    twos = [n for n in range(4) if len(succ[n]) == 2]
    if len(ones) != 2 or len(twos) != 2:
        raise ValueError("argmax pattern is not strongly connected")
    (u,) = [n for n in ones if succ[n][0] in twos]
    (v,) = succ[u]
    (y,) = [n for n in ones if n != u]
    (x,) = [n for n in twos if n != v]
    expected = {(u, v), (v, x), (v, y), (x, u), (y, u), (x, y)}
    assert expected == edge_set, (expected, edge_set)
    return u, v, x, y


def apply_ds2(cfg: NetworkConfig, d: DoFTuple, lam: int) -> DetourPlan:
    """Split ``lam = beta + gamma`` over the two 3-cycles sharing an edge.

    ``beta`` streams of ``x -> u`` and ``gamma`` streams of ``y -> u`` are sent
    through ``v``; the reverse of the shared edge, ``v -> u``, carries both.
    The split is read off the two alternative single-cycle sums obtained by
    flipping ``y -> u`` (giving ``N + beta``) or ``v -> x`` (giving
    ``N + gamma``). When that split is not a valid nonnegative decomposition
    of ``lam`` every integer split is searched instead.
    """
    if cfg.K != 4:
        raise ValueError("apply_ds2 needs K=4")
    if lam == 0:
        return _identity(cfg, d, Scheme.DS2)
    profile = derive_profile(cfg, d)
    if profile.cycle_form.kind is not CycleKind.DOUBLE_CYCLE:
        raise ValueError(f"relay demand is not double-cycle ({profile.cycle_form.describe()})")
    if profile.nbar != cfg.N + lam:
        raise ValueError(f"relay demand {profile.nbar} != N + lam = {cfg.N + lam}")
    u, v, x, y = double_cycle_roles(profile.cycle_form.edges)
    _check_margins(
        cfg,
        d,
        [
            ("shared edge", d[u, v] - d[v, u], lam),
            ("flip pair", (d[y, u] - d[u, y]) + (d[v, x] - d[x, v]), lam),
        ],
        "ds2",
    )
    beta = lam - (d[y, u] - d[u, y])
    gamma = lam - (d[v, x] - d[x, v])

    def reroutes(b: int, g: int) -> tuple[Reroute, ...]:
        out = []
        if b:
            out.append(Reroute((x, u), v, b))
        if g:
            out.append(Reroute((y, u), v, g))
        return tuple(out)

    lab = lambda n: n + 1  # noqa: E731
    head = (
        f"relay demand {profile.nbar} = N + {lam}; cycles {lab(u)}->{lab(v)}->{lab(x)}->{lab(u)} and "
        f"{lab(u)}->{lab(v)}->{lab(y)}->{lab(u)} share {lab(u)}->{lab(v)}"
    )
    attempts: list[Attempt] = []
    if beta >= 0 and gamma >= 0 and beta + gamma == lam:
        first = _evaluate(cfg, d, reroutes(beta, gamma))
        attempts.append(first)
        if first.accepted:
            note = f"{head}; beta={beta}, gamma={gamma} from the flipped sums"
            return _finish(cfg, d, Scheme.DS2, lam, beta, gamma, first, attempts, note)
    split_of: dict[tuple[Reroute, ...], tuple[int, int]] = {}
    for b in range(lam + 1):
        rr = reroutes(b, lam - b)
        split_of[rr] = (b, lam - b)
        if attempts and attempts[0].reroutes == rr:
            continue
        attempts.append(_evaluate(cfg, d, rr))
    chosen = _select(attempts)
    b, g = split_of[chosen.reroutes]
    note = (
        f"{head}; flipped sums give beta={beta}, gamma={gamma}, not a usable split; "
        f"searched splits and chose beta={b}, gamma={g}"
    )
    return _finish(cfg, d, Scheme.DS2, lam, b, g, chosen, attempts, note)


def lemma_guard(cfg: NetworkConfig, profile: DerivedProfile) -> bool:
    """Sufficient antenna conditions under which the detour schemes are known to succeed."""
    M, N = cfg.M, cfg.N
    if cfg.K == 3:
        return M[0] != min(N, M[0], M[1] + M[2])
    form = profile.cycle_form
    single_l1 = form.kind is CycleKind.SINGLE_CYCLE and form.outsider == 0
    first = M[0] != min(N, M[0], sum(M[1:])) and N <= M[0] + M[1] and not single_l1
    return first or N <= M[1]


def _unit_moves(K: int):
    return [
        (a, b, c)
        for a in range(K)
        for b in range(K)
        for c in range(K)
        if a != b and c not in (a, b)
    ]


def exhaustive_detours(
    cfg: NetworkConfig, d: DoFTuple, lam: int, max_multiset: int = 4
) -> dict:
    """Search every way of rerouting ``lam`` streams through one intermediate user.

    For ``lam <= max_multiset`` every multiset of ``lam`` single-stream
    reroutes (any edge, any intermediate) is tried; otherwise every single
    edge/intermediate choice carrying all ``lam`` streams. Returns the number
    of candidates and the valid modified tuples found.
    """
    moves = _unit_moves(cfg.K)
    if lam <= max_multiset:
        combos = itertools.combinations_with_replacement(moves, lam)
        mode = "multiset"
    else:
        combos = ((m,) * lam for m in moves)
        mode = "single-edge"
    searched = 0
    valid: list[DoFTuple] = []
    seen = set()
    for combo in combos:
        searched += 1
        rr = tuple(Reroute((a, b), c, 1) for a, b, c in combo)
        a = apply_reroutes(d, rr)
        if np.any(a < 0):
            continue
        key = a.tobytes()
        if key in seen:
            continue
        seen.add(key)
        mod = DoFTuple(a)
        if derive_profile(cfg, mod).nbar <= cfg.N and bounds.check(cfg, mod).feasible:
            valid.append(mod)
    valid.sort(key=lambda t: t.flat)
    return {"mode": mode, "searched": searched, "valid": len(valid), "validTuples": valid}


_DISPATCH = {
    CycleKind.Y_FORWARD: (apply_ds_y, Scheme.DSY),
    CycleKind.Y_REVERSE: (apply_ds_y, Scheme.DSY),
    CycleKind.SINGLE_CYCLE: (apply_ds1, Scheme.DS1),
    CycleKind.DOUBLE_CYCLE: (apply_ds2, Scheme.DS2),
}


def plan(cfg: NetworkConfig, d: DoFTuple) -> DetourPlan:
    """Plan how to serve ``d``: plain SSA, one of the detour schemes, or unresolved.

    Raises :class:`InfeasibleDemand` when ``d`` is outside the outer bound.
    """
    report = bounds.check(cfg, d)
    if not report.feasible:
        raise InfeasibleDemand(report)
    profile = derive_profile(cfg, d)
    if profile.nbar <= cfg.N:
        return replace(
            _identity(cfg, d, Scheme.DIRECT),
            rationale=f"relay demand {profile.nbar} <= N={cfg.N}; SSA applies directly",
        )
    lam = profile.nbar - cfg.N
    guard = lemma_guard(cfg, profile)
    fn, scheme = _DISPATCH[profile.cycle_form.kind]
    guard_note = "lemma guard holds" if guard else "lemma guard fails, detour attempted anyway"
    try:
        result = fn(cfg, d, lam)
    except DetourFailed as exc:
        search = exhaustive_detours(cfg, d, lam)
        return DetourPlan(
            scheme=Scheme.UNRESOLVED,
            lam=lam,
            beta=0,
            gamma=0,
            reroutes=(),
            modified=None,
            routing=None,
            rationale=(
                f"relay demand {profile.nbar} = N + {lam}; {profile.cycle_form.describe()}; "
                f"{guard_note}; every {scheme.value} candidate fails "
                f"({'; '.join(a.reason for a in exc.attempts)}); exhaustive {search['mode']} search over "
                f"{search['searched']} reroutings found {search['valid']} valid"
            ),
            original=d,
            guard=guard,
            attempts=exc.attempts,
            exhaustive=search,
        )
    return replace(result, guard=guard, rationale=f"{result.rationale}; {guard_note}")

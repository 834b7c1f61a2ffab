"""Signal-space-alignment designs over random channels and their certification.

The construction follows the two-phase relay model. In the uplink every user
pair ``{a, b}`` aligns its two directions inside a ``d*_ab``-dimensional relay
subspace. The relay separates the pair subspaces with ``D = inv(S)``, where
``S`` stacks the aligned bases. In the downlink the relay precodes each pair
signal with ``T_p``. The receive filters ``U`` and the precoder ``T`` come
from the same alignment applied to the transposed (reciprocal) network: a
user's filter for a partner's streams lies in a subspace that every other
pair's precoder is orthogonal to.

All matrices are real. Rank decisions use a relative singular-value threshold.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import null_space

from .model import DerivedProfile, DoFTuple, NetworkConfig, derive_profile, pairs

__all__ = [
    "RANK_RTOL",
    "ALIGN_TOL",
    "AlignmentInfeasible",
    "RelayZFInfeasible",
    "ChannelRealization",
    "DecodabilityCertificate",
    "SSADesign",
    "SlopeFit",
    "generate_channels",
    "build_alignment",
    "build_relay_processing",
    "design_for",
    "certify",
    "sum_rate",
    "rate_curve",
    "estimate_dof_slope",
    "simulate_symbols",
    "default_power_grid",
]

RANK_RTOL = 1e-8
ALIGN_TOL = 1e-9

Pair = tuple[int, int]
Stream = tuple[int, int]


class AlignmentInfeasible(ValueError):
    """A pair's null space is too small, or the pair subspaces are not a direct sum."""

    def __init__(self, pair: Pair | None, required: int, available: int):
        self.pair = pair
        self.required = required
        self.available = available
        where = f"pair {pair[0] + 1}-{pair[1] + 1}" if pair else "direct sum of pair subspaces"
        super().__init__(f"{where}: need {required} dimensions, have {available}")


class RelayZFInfeasible(ValueError):
    """The downlink precoder/filter construction ran out of dimensions."""

    def __init__(self, pair: Pair | None, required: int, available: int):
        self.pair = pair
        self.required = required
        self.available = available
        self.deficit = required - available
        where = f"pair {pair[0] + 1}-{pair[1] + 1}" if pair else "relay precoder"
        super().__init__(f"{where}: dimension deficit {self.deficit}")


@dataclass(frozen=True)
class ChannelRealization:
    """Uplink ``H_iR`` (N̄ x M_i) and downlink ``H_Ri`` (M_i x N̄) matrices."""

    uplink: dict[int, np.ndarray]
    downlink: dict[int, np.ndarray]
    seed: int

    def scaled(self, user: int, factor: float) -> ChannelRealization:
        up = dict(self.uplink)
        up[user] = up[user] * factor
        return replace(self, uplink=up)


@dataclass(frozen=True)
class DecodabilityCertificate:
    per_stream: dict[Stream, bool]
    alignment_residual: float
    min_singular_ratio: float
    direct_sum_rank: int
    rank_rtol: float = RANK_RTOL
    dof_slope_estimate: float | None = None

    @property
    def all_true(self) -> bool:
        return all(self.per_stream.values())

    @property
    def aligned(self) -> bool:
        return self.alignment_residual < ALIGN_TOL

    def to_json(self, labels=None) -> dict:
        lab = (lambda i: labels[i] + 1) if labels is not None else (lambda i: i + 1)
        return {
            "perStream": {f"{lab(i)}->{lab(j)}": ok for (i, j), ok in sorted(self.per_stream.items())},
            "allTrue": self.all_true,
            "alignmentResidual": float(self.alignment_residual),
            "aligned": self.aligned,
            "minSingularRatio": float(self.min_singular_ratio),
            "directSumRank": self.direct_sum_rank,
            "rankRtol": self.rank_rtol,
            "dofSlopeEstimate": self.dof_slope_estimate,
        }


@dataclass(frozen=True)
class SSADesign:
    """Beamformers, relay processing and receive filters for one realization.

    ``V[(i, j)]`` is M_i x d_ij. ``D[p]`` is d*_p x N̄ and ``T[p]`` is N̄ x d*_p
    for unordered pairs ``p = (a, b)``, ``a < b``. ``U[(j, i)]`` is the
    d_ji x M_i filter user i applies to recover the streams from user j.
    """

    cfg: NetworkConfig
    d: DoFTuple
    profile: DerivedProfile
    V: dict[Stream, np.ndarray]
    basis: dict[Pair, np.ndarray]
    alignment_residual: float
    direct_sum_rank: int
    D: dict[Pair, np.ndarray] = field(default_factory=dict)
    T: dict[Pair, np.ndarray] = field(default_factory=dict)
    U: dict[Stream, np.ndarray] = field(default_factory=dict)
    relay_residual: float = 0.0
    certificate: DecodabilityCertificate | None = None

    @property
    def nbar(self) -> int:
        return self.profile.nbar

    @property
    def streams(self) -> list[Stream]:
        K = self.d.K
        return [(i, j) for i in range(K) for j in range(K) if i != j and self.d[i, j] > 0]

    def receive_filter(self, i: int) -> np.ndarray:
        """User i's stacked filter, one row block per partner that sends to it."""
        blocks = [self.U[(j, i)] for j in range(self.d.K) if j != i and self.d[j, i] > 0]
        return np.vstack(blocks) if blocks else np.zeros((0, self.cfg.M[i]))

    def relay_matrix(self) -> np.ndarray:
        """Overall relay map ``sum_p T_p D_p`` (N̄ x N̄)."""
        n = self.nbar
        G = np.zeros((n, n))
        for p in self.D:
            G += self.T[p] @ self.D[p]
        return G


def _rng(seed: int, stage: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stage])


def _rank(s: np.ndarray, scale: float) -> int:
    if scale <= 0:
        return 0
    return int(np.sum(s > RANK_RTOL * scale))


def generate_channels(cfg: NetworkConfig, profile: DerivedProfile, seed: int) -> ChannelRealization:
    """Draw i.i.d. standard normal channels sized to the relay demand N̄."""
    if profile.nbar > cfg.N:
        raise ValueError(f"relay demand {profile.nbar} exceeds N={cfg.N}; plan a detour first")
    rng = _rng(seed, 0)
    n = profile.nbar
    up = {i: rng.standard_normal((n, cfg.M[i])) for i in range(cfg.K)}
    down = {i: rng.standard_normal((cfg.M[i], n)) for i in range(cfg.K)}
    return ChannelRealization(uplink=up, downlink=down, seed=int(seed))


def _orthonormal(A: np.ndarray) -> np.ndarray:
    if A.shape[1] == 0:
        return A
    q, _ = np.linalg.qr(A)
    return q


def _unit_columns(A: np.ndarray) -> np.ndarray:
    if A.shape[1] == 0:
        return A
    return A / np.linalg.norm(A, axis=0, keepdims=True)


def _subspace_residual(X: np.ndarray, B: np.ndarray) -> float:
    """Relative distance of the columns of X from span(B)."""
    nx = np.linalg.norm(X)
    if X.shape[1] == 0 or nx == 0:
        return 0.0
    Q = _orthonormal(B)
    return float(np.linalg.norm(X - Q @ (Q.T @ X)) / nx)


def _top_directions(A: np.ndarray, k: int) -> np.ndarray:
    """Orthonormal k-frame of inputs that A amplifies most."""
    _, _, vt = np.linalg.svd(A)
    return vt[:k].T


def _align(chan: dict[int, np.ndarray], dem: np.ndarray, n: int, err):
    """Pairwise alignment for channels ``chan[i]`` (n x M_i) and demands ``dem``.

    Pairs with the least spare dimension go first. Each pair takes the
    directions, inside its admissible set, whose relay images stick out most
    from the span already claimed by earlier pairs; this keeps the stacked
    bases well conditioned. Returns beamformers, the aligned basis per pair,
    the worst alignment residual and the rank of the stacked bases. ``err`` is
    the exception class raised on failure.
    """
    K = dem.shape[0]
    V: dict[Stream, np.ndarray] = {}
    basis: dict[Pair, np.ndarray] = {p: np.zeros((n, 0)) for p in pairs(K)}
    null: dict[Pair, np.ndarray] = {}
    spare = {}
    for a, b in pairs(K):
        big, small = (a, b) if dem[a, b] >= dem[b, a] else (b, a)
        n_al, dstar = int(dem[small, big]), int(dem[big, small])
        if n_al > 0:
            null[(a, b)] = null_space(np.hstack([chan[big], -chan[small]]))
            spare[(a, b)] = null[(a, b)].shape[1] - n_al
        else:
            spare[(a, b)] = chan[big].shape[1] - dstar
    claimed = np.zeros((n, 0))
    worst = 0.0
    for a, b in sorted(pairs(K), key=lambda p: (spare[p], p)):
        big, small = (a, b) if dem[a, b] >= dem[b, a] else (b, a)
        n_al = int(dem[small, big])
        extra = int(dem[big, small]) - n_al
        Hb, Hs = chan[big], chan[small]
        Mb, Ms = Hb.shape[1], Hs.shape[1]
        perp = np.eye(n) - claimed @ claimed.T
        if n_al > 0:
            Z = null[(a, b)]
            if Z.shape[1] < n_al:
                raise err((a, b), n_al, Z.shape[1])
            C = _top_directions(perp @ Hb @ Z[:Mb], n_al)
            vb, vs = Z[:Mb] @ C, Z[Mb:] @ C
            img = _orthonormal(Hb @ vb)
            perp = perp - img @ img.T
        else:
            vb, vs = np.zeros((Mb, 0)), np.zeros((Ms, 0))
        if extra > 0:
            comp = null_space(vb.T) if n_al > 0 else np.eye(Mb)
            vb = np.hstack([vb, comp @ _top_directions(perp @ Hb @ comp, extra)])
        V[(big, small)] = _unit_columns(vb)
        V[(small, big)] = _unit_columns(vs)
        if vb.shape[1] == 0:
            continue
        Sb = Hb @ V[(big, small)]
        sv = np.linalg.svd(Sb, compute_uv=False)
        if _rank(sv, sv[0]) < Sb.shape[1]:
            raise err((a, b), Sb.shape[1], _rank(sv, sv[0]))
        if n_al > 0:
            Ss = Hs @ V[(small, big)]
            ss = np.linalg.svd(Ss, compute_uv=False)
            if _rank(ss, ss[0]) < n_al:
                raise err((a, b), n_al, _rank(ss, ss[0]))
            worst = max(worst, _subspace_residual(Ss, Sb))
        basis[(a, b)] = Sb
        claimed = _orthonormal(np.hstack([claimed, Sb]))
    S = np.hstack([basis[p] for p in pairs(K)])
    rank = 0
    if n:
        s = np.linalg.svd(S, compute_uv=False)
        rank = _rank(s, s[0])
    if rank < n:
        raise err(None, n, rank)
    return V, basis, worst, rank


def build_alignment(cfg: NetworkConfig, d: DoFTuple, ch: ChannelRealization) -> SSADesign:
    """Uplink beamformers so both directions of every pair share one relay subspace."""
    profile = derive_profile(cfg, d)
    if profile.nbar > cfg.N:
        raise ValueError(f"relay demand {profile.nbar} exceeds N={cfg.N}")
    for i in range(cfg.K):
        if ch.uplink[i].shape != (profile.nbar, cfg.M[i]):
            raise ValueError(f"uplink channel of user {i + 1} has shape {ch.uplink[i].shape}")
    V, basis, worst, rank = _align(
        ch.uplink, d.array(), profile.nbar, AlignmentInfeasible
    )
    return SSADesign(
        cfg=cfg, d=d, profile=profile, V=V, basis=basis,
        alignment_residual=worst, direct_sum_rank=rank,
    )


def _blocks(K: int, dstar: dict[Pair, int]):
    out, start = {}, 0
    for p in pairs(K):
        out[p] = slice(start, start + dstar[p])
        start += dstar[p]
    return out


def build_relay_processing(design: SSADesign, ch: ChannelRealization) -> SSADesign:
    """Add the relay combiners ``D``, precoders ``T`` and receive filters ``U``."""
    K, n = design.cfg.K, design.nbar
    blk = _blocks(K, design.profile.dstar)
    if n == 0:
        empty = {p: np.zeros((0, 0)) for p in pairs(K)}
        return replace(design, D=dict(empty), T=dict(empty), U={})
    S = np.hstack([design.basis[p] for p in pairs(K)])
    Sinv = np.linalg.inv(S)
    D = {p: Sinv[blk[p]] for p in pairs(K)}

    # reciprocal network: channels H_Ri^T, demands transposed
    recip = {i: ch.downlink[i].T for i in range(K)}
    Vr, basis_r, _, _ = _align(recip, design.d.array().T, n, RelayZFInfeasible)
    Sr = np.hstack([basis_r[p] for p in pairs(K)])
    # column scaling is free (absorbed at the receiver); equalize relay power per dimension
    Tall = _unit_columns(np.linalg.inv(Sr).T)
    T = {p: Tall[:, blk[p]] for p in pairs(K)}
    # user i listens for stream j->i with the reciprocal beamformer of i->j
    U = {(j, i): Vr[(i, j)].T for i in range(K) for j in range(K) if i != j}

    # leakage of each combiner onto the other pairs' subspaces
    leak = 0.0
    for p in pairs(K):
        for q in pairs(K):
            if p != q and design.basis[q].shape[1] and D[p].shape[0]:
                num = np.abs(D[p] @ design.basis[q]).max()
                leak = max(leak, float(num / max(np.abs(D[p]).max(), 1e-300)))
    return replace(design, D=D, T=T, U=U, relay_residual=leak)


def design_for(cfg: NetworkConfig, d: DoFTuple, ch: ChannelRealization) -> SSADesign:
    """Full design (alignment, relay processing and certificate) for one realization."""
    design = build_relay_processing(build_alignment(cfg, d, ch), ch)
    return replace(design, certificate=certify(design, ch))


def _stream_images(design: SSADesign, ch: ChannelRealization) -> dict[Stream, np.ndarray]:
    """Relay-output images ``G H_iR V_ij`` of every stream (N̄ x d_ij)."""
    G = design.relay_matrix()
    return {s: G @ ch.uplink[s[0]] @ design.V[s] for s in design.streams}


def _measure_alignment(design: SSADesign, ch: ChannelRealization) -> tuple[float, int]:
    """Worst pair alignment residual and rank of the stacked pair bases, from V."""
    K, n = design.cfg.K, design.nbar
    worst, cols = 0.0, []
    for a, b in pairs(K):
        big, small = (a, b) if design.d[a, b] >= design.d[b, a] else (b, a)
        Sb = ch.uplink[big] @ design.V[(big, small)]
        Ss = ch.uplink[small] @ design.V[(small, big)]
        if Ss.shape[1]:
            worst = max(worst, _subspace_residual(Ss, Sb))
        cols.append(Sb)
    if n == 0:
        return worst, 0
    s = np.linalg.svd(np.hstack(cols), compute_uv=False)
    return worst, _rank(s, s[0])


def certify(design: SSADesign, ch: ChannelRealization) -> DecodabilityCertificate:
    """Rank test of the end-to-end linear chain at every receiver.

    A user knows its own symbols and cancels them first. Its desired streams
    are those addressed to it; streams between two other users are
    interference. Decoding is possible iff interference occupies ``r``
    dimensions and desired plus interference spans ``n_des + r <= M_i``.
    A stream block is certified when it is also independent of everything
    else the user sees.
    """
    K = design.cfg.K
    per: dict[Stream, bool] = {s: True for s in design.streams}
    ratio = 1.0
    residual, rank = _measure_alignment(design, ch)
    if not design.streams:
        return DecodabilityCertificate(per, residual, 1.0, rank)
    imgs = _stream_images(design, ch)
    for k in range(K):
        Hk = ch.downlink[k]
        des = [s for s in design.streams if s[1] == k]
        intf = [s for s in design.streams if k not in s]
        if not des:
            continue
        Ed = {s: Hk @ imgs[s] for s in des}
        Ei = np.hstack([Hk @ imgs[s] for s in intf]) if intf else np.zeros((Hk.shape[0], 0))
        full = np.hstack([Ed[s] for s in des] + [Ei])
        sv = np.linalg.svd(full, compute_uv=False)
        scale = sv[0] if sv.size else 0.0
        r = _rank(np.linalg.svd(Ei, compute_uv=False), scale) if Ei.shape[1] else 0
        n_des = sum(Ed[s].shape[1] for s in des)
        total = _rank(sv, scale)
        ok_user = total == n_des + r and n_des + r <= Hk.shape[0]
        if total:
            ratio = min(ratio, float(sv[total - 1] / scale))
        for s in des:
            others = [Ed[t] for t in des if t != s] + [Ei]
            rest = np.hstack(others)
            r_rest = _rank(np.linalg.svd(rest, compute_uv=False), scale) if rest.shape[1] else 0
            r_with = _rank(np.linalg.svd(np.hstack([Ed[s], rest]), compute_uv=False), scale)
            per[s] = bool(ok_user and r_with == r_rest + Ed[s].shape[1])
    return DecodabilityCertificate(
        per_stream=per,
        alignment_residual=residual,
        min_singular_ratio=ratio,
        direct_sum_rank=rank,
    )


def _powers(design: SSADesign, P: float) -> dict[int, float]:
    K = design.cfg.K
    n = design.d.array().sum(axis=1)
    return {i: (P / n[i] if n[i] else 0.0) for i in range(K)}


def sum_rate(design: SSADesign, ch: ChannelRealization, P: float) -> float:
    """Sum over streams of 0.5*log2(1 + min(uplink SINR, downlink SINR)).

    Uplink: the relay's pair combiner output is zero-forced for the stream
    with the partner's symbols treated as known side information. Downlink:
    the relay forwards noise-free pair signals scaled to total power P and
    the receiver applies its filter ``U`` followed by zero-forcing.
    """
    if not design.streams:
        return 0.0
    K = design.cfg.K
    pw = _powers(design, P)
    pair_of = lambda s: (min(s), max(s))  # noqa: E731
    up = {s: ch.uplink[s[0]] @ design.V[s] for s in design.streams}

    # relay transmit power normalization
    G = design.relay_matrix()
    X = np.hstack([G @ up[s] * np.sqrt(pw[s[0]]) for s in design.streams])
    beta = np.sqrt(P / np.sum(X**2))

    total = 0.0
    for s in design.streams:
        i, j = s
        p = pair_of(s)
        Dp = design.D[p]
        A = Dp @ up[s]
        F = np.linalg.pinv(A)
        interf = np.zeros(A.shape[1])
        for t in design.streams:
            if pair_of(t) != p:
                interf += pw[t[0]] * np.sum((F @ Dp @ up[t]) ** 2, axis=1)
        noise_up = np.sum((F @ Dp) ** 2, axis=1)
        sinr_up = pw[i] / (noise_up + interf)

        Uj = design.U[s]
        B = beta * Uj @ ch.downlink[j] @ design.T[p] @ A
        Binv = np.linalg.pinv(B)
        interf_d = np.zeros(A.shape[1])
        for t in design.streams:
            if j not in t:
                L = beta * Binv @ Uj @ ch.downlink[j] @ G @ up[t]
                interf_d += pw[t[0]] * np.sum(L**2, axis=1)
        noise_d = np.sum((Binv @ Uj) ** 2, axis=1)
        sinr_dn = pw[i] / (noise_d + interf_d)
        total += float(np.sum(0.5 * np.log2(1.0 + np.minimum(sinr_up, sinr_dn))))
    return total


@dataclass(frozen=True)
class SlopeFit:
    powers: np.ndarray
    sum_rates: np.ndarray
    window: np.ndarray
    slope: float
    intercept: float


def default_power_grid() -> np.ndarray:
    return np.logspace(2, 6, 17)


def _trial_seeds(seed: int, trials: int) -> list[int]:
    ss = np.random.SeedSequence([int(seed), 7])
    return [int(c.generate_state(1)[0]) for c in ss.spawn(trials)]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("DOF_LAB_THREADS", "1")))
    except ValueError:
        return 1


def rate_curve(
    cfg: NetworkConfig, d: DoFTuple, seed: int, power_grid, trials: int = 1
) -> SlopeFit:
    """Trial-averaged sum rate on a power grid and its top-decade slope fit.

    Trial 0 uses the realization for ``seed``; the others use fresh channels
    from seeds spawned off it.
    """
    grid = np.asarray(sorted(float(p) for p in power_grid))
    if grid.size < 3:
        raise ValueError("power grid needs at least 3 points")
    if np.any(grid <= 0):
        raise ValueError("powers must be positive")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    profile = derive_profile(cfg, d)
    seeds = [int(seed)] + _trial_seeds(seed, trials - 1) if trials > 1 else [int(seed)]

    def one(sd: int) -> np.ndarray:
        ch = generate_channels(cfg, profile, sd)
        des = build_relay_processing(build_alignment(cfg, d, ch), ch)
        return np.array([sum_rate(des, ch, P) for P in grid])

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rates = list(pool.map(one, seeds))
    mean = np.mean(rates, axis=0)
    window = grid >= grid[-1] / 10.0
    if window.sum() < 2:
        window[-2:] = True
    x = 0.5 * np.log2(grid[window])
    slope, intercept = np.polyfit(x, mean[window], 1)
    return SlopeFit(grid, mean, window, float(slope), float(intercept))


def estimate_dof_slope(
    design: SSADesign, ch: ChannelRealization, power_grid=None, trials: int = 1
) -> float:
    """Fitted slope of sum rate against 0.5*log2(P) for the design's tuple."""
    if design.certificate is not None and not design.certificate.all_true:
        raise ValueError("slope estimation needs a positive certificate")
    grid = default_power_grid() if power_grid is None else power_grid
    return rate_curve(design.cfg, design.d, ch.seed, grid, trials).slope


def simulate_symbols(
    design: SSADesign, ch: ChannelRealization, P: float, n_symbols: int = 2000, seed: int = 0
) -> dict[Stream, float]:
    """Monte-Carlo amplify-and-forward run; per-stream MSE of the recovered symbols.

    Users send unit-power symbols through their beamformers, the relay applies
    ``sum_p T_p D_p`` with a power-normalizing gain, and each receiver cancels
    its own contribution, applies ``U`` and inverts the desired map.
    """
    rng = np.random.default_rng(seed)
    if not design.streams:
        return {}
    K, n = design.cfg.K, design.nbar
    pw = _powers(design, P)
    sym = {s: rng.choice([-1.0, 1.0], size=(design.d[s], n_symbols)) for s in design.streams}
    tx = {i: np.zeros((design.cfg.M[i], n_symbols)) for i in range(K)}
    for s in design.streams:
        tx[s[0]] += np.sqrt(pw[s[0]]) * design.V[s] @ sym[s]
    yr = sum(ch.uplink[i] @ tx[i] for i in range(K)) + rng.standard_normal((n, n_symbols))
    G = design.relay_matrix()
    xr = G @ yr
    beta = np.sqrt(P * n_symbols / np.sum(xr**2))
    xr = beta * xr
    mse = {}
    for j in range(K):
        yj = ch.downlink[j] @ xr + rng.standard_normal((design.cfg.M[j], n_symbols))
        yj = yj - beta * ch.downlink[j] @ G @ ch.uplink[j] @ tx[j]
        for s in [t for t in design.streams if t[1] == j]:
            i = s[0]
            Uj = design.U[s]
            eff = beta * np.sqrt(pw[i]) * Uj @ ch.downlink[j] @ G @ ch.uplink[i] @ design.V[s]
            est = np.linalg.solve(eff, Uj @ yj)
            mse[s] = float(np.mean((est - sym[s]) ** 2))
    return mse

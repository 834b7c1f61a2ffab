"""Rerouting messages when the relay is oversubscribed.

Signal-space alignment needs one relay dimension per pair (the larger of the
two directions). When those exceed the relay's antennas, some messages take
a two-hop detour through a third user. We plan detours for three networks
and one network where no detour helps.
"""

from doflab import DoFTuple, NetworkConfig, derive_profile, plan

cases = {
    "Y channel": ((3, 2, 2), 3, (2, 0, 0, 1, 1, 0)),
    "4 users, double cycle": ((6, 5, 4, 3), 6, (1, 1, 0, 0, 1, 2, 0, 0, 1, 2, 0, 0)),
    "4 users, single cycle": ((6, 6, 4, 3), 6, (1, 1, 1, 0, 2, 0, 0, 0, 1, 0, 1, 0)),
    "Y channel, stuck": ((3, 2, 2), 4, (2, 0, 0, 2, 2, 0)),
}

for title, (M, N, flat) in cases.items():
    cfg, d = NetworkConfig(M, N), DoFTuple.from_flat(flat)
    prof = derive_profile(cfg, d)
    p = plan(cfg, d)
    print(f"\n== {title}: {d}, relay demand {prof.nbar} on N={N}")
    print("  scheme:", p.scheme.value)
    print("  why:", p.rationale)
    if p.resolved:
        print("  modified:", p.modified, "relay demand", derive_profile(cfg, p.modified).nbar)
        for r in p.routing.entries:
            if len(r.via) > 2:
                print(f"  {r.streams} stream(s) {r.source + 1}->{r.destination + 1} travel via",
                      "->".join(str(n + 1) for n in r.via))
    else:
        print(f"  exhaustive search: {p.exhaustive['searched']} reroutings, {p.exhaustive['valid']} valid")

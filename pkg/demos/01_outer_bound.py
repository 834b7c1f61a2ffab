"""Where does a demand tuple sit relative to the outer bound?

A 3-user MIMO Y channel with 3, 2 and 2 antennas and a 3-antenna relay.
We check a few tuples, look at which inequalities bind, and enumerate a
small region exhaustively.
"""

from doflab import DoFTuple, NetworkConfig, bounds, derive_profile

cfg = NetworkConfig((3, 2, 2), N=3)
print("network", cfg.M, "relay", cfg.N, "total-DoF cap", bounds.total_dof_cap(cfg))

for flat in [(2, 0, 0, 1, 1, 0), (2, 1, 1, 0, 1, 0), (2, 2, 0, 0, 0, 0)]:
    d = DoFTuple.from_flat(flat)
    rep = bounds.check(cfg, d)
    prof = derive_profile(cfg, d)
    print(f"\n{d}: feasible={rep.feasible}, relay demand {prof.nbar}, {prof.cycle_form.describe()}")
    for v in rep.violations[:3]:
        print(f"  violates {v.family} at users {[n + 1 for n in v.assignment]}: {v.lhs} > {v.rhs}")

# the slack vector shows how far each inequality is from binding
d = DoFTuple.from_flat((2, 0, 0, 1, 1, 0))
tight = [q for q, s in zip(bounds.inequalities(cfg), bounds.slacks(cfg, d)) if s == 0]
print(f"\n{len(tight)} inequalities are tight for {d}, e.g. {tight[0].render()}")

small = NetworkConfig((1, 1, 1), N=3)
region = bounds.enumerate_region(small, cap=1)
print(f"\nsingle-antenna users, 0/1 demands: {len(region)} of 64 tuples are inside the bound")

"""Randomized soundness spot-check against the brute-force oracle.

Each scenario runs one flow on a small mesh (half of them with random
background saturation), then enumerates every feasible simple path within
the hop budget on the pre-setup snapshot and checks the protocol's verdict
against it.
"""

from beenoc import RunConfig, single_flow_scenario, soundness_violation
from beenoc.traffic import make_rng

cfg = RunConfig(mesh_width=4, mesh_height=4, seed=0, wire_count=4)
rng = make_rng(1234)

established = failed = 0
for index in range(60):
    outcome = single_flow_scenario(cfg, rng, saturate=index % 2 == 1)
    problem = soundness_violation(outcome)
    status = "established" if outcome.established else "failed"
    if outcome.established:
        established += 1
        detail = f"{outcome.path_length} hops, member of {outcome.feasible_count} feasible"
    else:
        failed += 1
        detail = f"{outcome.feasible_count} feasible on snapshot"
    tag = "idle" if outcome.idle else "saturated"
    print(f"  [{index:02d}] {outcome.source} -> {outcome.destination} "
          f"demand {outcome.required_bandwidth:.1f} ({tag}): {status} ({detail})"
          + (f"  <-- VIOLATION: {problem}" if problem else ""))
    assert problem is None

print(f"\nall 60 scenarios sound: {established} established, {failed} blocked")

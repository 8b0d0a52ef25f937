"""What each ablation switch costs in model calls and prompt volume.

Runs the same ten synthetic cases under several configurations, each against a
perfect-answer transcript, and tallies backend traffic. Quality is constant
here by construction; the point is the price of the discussion phase.
"""

from tor import RunConfig, ScriptedBackend, default_label_pool, generate_cases, perfect_transcript, run_batch
from tor.roles import AgentRole

cases = generate_cases(10, seed=99)
pool = default_label_pool()
O, L, R, P = AgentRole.OUTPATIENT, AgentRole.LABORATORY, AgentRole.RADIOLOGY, AgentRole.PATHOLOGY

configs = {
    "full (k=2, t=2)": RunConfig(),
    "k=3, t=3": RunConfig(k=3, t=3),
    "early exit": RunConfig(early_exit=True),
    "no cross-verification": RunConfig(cross_verification_enabled=False),
    "free-text views": RunConfig(evidence_tree_enabled=False),
    "outpatient + laboratory": RunConfig(active_roles={O, L}),
    "outpatient only": RunConfig(active_roles={O}),
}

print(f"{'configuration':26s} {'calls':>6s} {'calls/case':>10s} {'prompt kB':>10s} {'F1':>7s}")
for name, cfg in configs.items():
    backend = ScriptedBackend(perfect_transcript(cases, pool, cfg))
    batch = run_batch(cases, pool, cfg, backend)
    assert batch.ok and backend.remaining() == []
    kb = sum(len(r.text) for r in backend.requests) / 1024
    print(f"{name:26s} {backend.calls:6d} {backend.calls / len(cases):10.1f} {kb:10.1f} "
          f"{batch.report.micro.f1:7.2f}")

# When nobody wants to talk, each of the k*t turns still polls every active specialist.
n, k, t = 4, 2, 2
print(f"\nSilent panel, n={n}, k={k}, t={t}: {n} initial + {n * k * t} polls + 1 final = {n + n * k * t + 1} calls")

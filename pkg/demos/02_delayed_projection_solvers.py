"""Delayed projection on a constrained quadratic: SGD vs SVRG vs ASVRG.

Projecting only every E steps makes each projection "cheaper to afford":
the plain stochastic method pays for it with a variance floor, the
variance-reduced method converges linearly with no floor, and the
accelerated variant needs fewer stages still.  This script runs all
three on one seeded LCQP and prints projections-to-target, the quantity
the delayed-projection technique is designed to shrink.
"""

from delayproj import (
    SolverConfig,
    complexity_to_eps,
    dp_asvrg,
    dp_sgd,
    dp_svrg,
    make_lcqp,
    solve_reference,
)

prob = make_lcqp(seed=7, p=30, n_atoms=120, m_constraints=5,
                 eigen_floor=0.25, eigen_ceil=2.5)
f_star = prob.value_oracle(solve_reference(prob))
L, mu = prob.smoothness_L, prob.strong_convexity_mu
print(f"LCQP: p=30, N=120, L={L:.2f}, mu={mu:.2f}, kappa={L / mu:.1f}\n")

E = 5
runs = {}
cfg = SolverConfig(variant="dp_sgd", eta="auto", gap_E=E, total_T=7200,
                   batch=1, seed=1, record_every=1)
_, runs["dp_sgd"] = dp_sgd(prob, cfg, f_star=f_star)

cfg = SolverConfig(variant="dp_svrg", eta="auto", gap_E=E, inner_m=120,
                   stages_S=60, batch=1, seed=1, record_every=1)
_, runs["dp_svrg"] = dp_svrg(prob, cfg, f_star=f_star)

cfg = SolverConfig(variant="dp_asvrg", eta="auto", gap_E=E, inner_m=120,
                   stages_S=60, batch=1, seed=1, record_every=1)
_, runs["dp_asvrg"] = dp_asvrg(prob, cfg, f_star=f_star)

print(f"{'solver':>10} {'final gap':>12} {'P to 1e-3':>10} {'P to 1e-6':>10}")
for name, trace in runs.items():
    row3 = complexity_to_eps(trace, 1e-3)
    row6 = complexity_to_eps(trace, 1e-6)
    fmt = lambda r: str(r.projections_to_eps) if r.reached else "-"
    print(f"{name:>10} {min(trace.suboptimality):>12.2e} "
          f"{fmt(row3):>10} {fmt(row6):>10}")

print("\nthe plain method stalls at its variance floor; the variance-reduced")
print("methods pass it, and the accelerated one uses the fewest projections")

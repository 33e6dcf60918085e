"""
Twin critics as a two-member ensemble
=====================================

min(q1, q2) is the mean minus one population std, so a single scheduled
multiplier moves the bootstrap target between optimism and pessimism.
"""
import numpy as np

from ader import ensemble_stats, eta, scheduled_target

q1, q2 = 3.0, 7.0
st = ensemble_stats(q1, q2)
print("mean", st.mu, "std", st.sigma, "mean - std", st.mu - st.sigma, "min", min(q1, q2))

# early in training eta is negative: the spread becomes a bonus
for t in (2, 3, 10, 100, 10_000, 10**9):
    print(f"t={t:>10}  eta={eta(t, alpha=2.0, kappa=5.0):+.4f}")

# eta=1 is the clipped double-Q target, eta=0 the plain ensemble mean
r, gamma = 1.0, 0.99
for e in (-0.94, 0.0, 1.0, 2.0):
    print(f"eta={e:+.2f}  target={scheduled_target(r, False, gamma, q1, q2, e):.4f}")

# a terminal transition ignores the critics
print("terminal:", scheduled_target(r, True, gamma, q1, q2, 1.0))

q = np.random.default_rng(0).normal(size=(2, 5))
print("batched stds:", ensemble_stats(q[0], q[1]).sigma)

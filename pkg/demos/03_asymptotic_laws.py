"""
Large-sample laws against simulation
====================================

The null law of R2 is approximated by a weighted sum of chi-square
variables whose weights come from a Sturm-Liouville problem.  The
average-pooled statistics have a similar representation with weights
given by the spectrum of a circulant kernel.  Here both approximations
are put next to simulated quantiles.
"""

import numpy as np

from circgof.asymptotics import asymptotic_null, circulant_eigenvalues, kernel_exact
from circgof.montecarlo import simulate
from circgof.seeding import RunSeed

seed = RunSeed(11)
probs = np.array([0.05, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99])

for label, stat, pool in (("r2", "r2", "cs0"), ("w2_avg", "w2", "cs1"), ("r2_avg", "r2", "cs1")):
    for n in (10, 50):
        law = asymptotic_null(label, n)
        q_law, _ = law.quantile(probs, reps=50_000, seed=seed)
        q_sim = np.quantile(simulate([stat], [pool], n, 20_000, seed, tag="demo")[stat, pool], probs)
        print(f"\n{label} n={n}  (law mean {law.mean:.4f})")
        print("    p   law     simulated")
        for p, a, b in zip(probs, q_law, q_sim):
            print(f"  {p:.2f}  {a:.4f}  {b:.4f}")

# The W kernel annihilates the constant vector, so its smallest eigenvalue
# is zero; every diagonal entry is n / (n + 1), so the trace is n.
k = kernel_exact(20, "W")
phi = circulant_eigenvalues(k, sort=True)
print(f"\nW kernel n=20: trace {k.trace:.6f}, smallest |eigenvalue| {abs(phi).min():.2e}")

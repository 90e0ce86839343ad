"""
Log-normal screen for R(T_n)
============================

Sample conditioned full binary trees and look at the centred, scaled
log R(T_n).  Compare the two routes to mu: sample mean over n, and the
expectation of the toll over the unconditioned critical tree.
"""

import numpy as np
from scipy import stats

from subtree_census.models import parse_model
from subtree_census.montecarlo import estimate_mu, run_clt_experiment
from subtree_census.sampler import RngStream, sample_conditioned_batch
from subtree_census.trees import log_counts_batch

model = parse_model("binary-full")
n = 1001

rows = sample_conditioned_batch(model, n, 4000, RngStream(1, 0))
log_r, log_s = log_counts_batch(rows)
z = (log_r - log_r.mean()) / log_r.std()
print("skew %.3f, excess kurtosis %.3f" % (stats.skew(z), stats.kurtosis(z)))
print("KS against N(0,1):", stats.kstest(z, "norm").statistic)
print("log S - log R in [0, log n]:", bool(np.all((log_s >= log_r) & (log_s - log_r <= np.log(n)))))

# histogram as text
hist, edges = np.histogram(z, bins=15, range=(-3.5, 3.5))
for h, e in zip(hist, edges):
    print(f"{e:+5.2f} " + "#" * (h // 15))

rep = run_clt_experiment(model, n, 4000, seed=2)
est = estimate_mu(model, enum_cutoff=15, mc_samples=10_000, size_cap=10_000, seed=3)
print("\nmu_hat (mean log R / n) =", rep.mu_hat)
print("mu (toll expectation)   =", est.mu_total, "+-", est.std_error)
# the gap is mostly the O(1/n) constant in E log R(T_n) = mu n + c + o(1)
print("n * gap =", n * (rep.mu_hat - est.mu_total))

"""
Radii and growth rates of root-subtree moments
==============================================

For full binary trees, E R(T_n)^m grows like gamma_m tau_m^n.  Print the
constants for m = 0..10 and check that the growth rates are close to, but
not exactly, powers of tau_1.
"""

import numpy as np

from subtree_census.models import parse_model
from subtree_census.singularity import singularity_reports

reps = singularity_reports(parse_model("binary-full"), 10)
print(f"{'m':>3} {'rho':>10} {'tau':>10} {'gamma':>10}")
for r in reps:
    print(f"{r.m:3d} {r.rho:10.6f} {r.tau:10.5f} {r.gamma:10.6f}")

# log tau_m against m: a straight line would mean tau_m = tau_1^m
m = np.arange(1, 11)
log_tau = np.log([r.tau for r in reps[1:]])
slope, icept = np.polyfit(m, log_tau, 1)
print("\nlog tau_m ~ %.5f m + %.5f" % (slope, icept))
print("log tau_1 =", np.log(reps[1].tau))

"""
A family without a square-root branch
=====================================

With w_0 = a and w_k proportional to k^-4 for k >= 1, F_1 stops at the
radius of Phi before its derivative blows up.
"""

from subtree_census.models import parse_model
from subtree_census.singularity import singularity_reports

for a in (0.02, 0.05, 0.09, 0.0996):
    reps = singularity_reports(parse_model(f"zeta4:a={a}"), 1)
    print(f"a={a:<7} " + "  ".join(f"m={r.m}: rho={r.rho:.6f} {r.branch_label}" for r in reps))

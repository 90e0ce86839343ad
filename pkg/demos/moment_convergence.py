"""
Exact moments against their asymptote
=====================================

The coefficients of the series solve the moment problem exactly.  The ratio
to gamma_m tau_m^n should approach 1 with a 1/n correction.
"""

from subtree_census.models import parse_model
from subtree_census.series import compute_F_family, exact_moment
from subtree_census.singularity import singularity_reports

model = parse_model("binary-full")
reps = singularity_reports(model, 2)
fam = compute_F_family(model, 2, 401, "float")

for m in (1, 2):
    print(f"m = {m}")
    for n in (11, 51, 101, 201, 401):
        ratio = exact_moment(fam, m, n) / (reps[m].gamma * reps[m].tau ** n)
        print(f"  n={n:4d}  ratio={ratio:.8f}  n(ratio-1)={n * (ratio - 1):+.4f}")

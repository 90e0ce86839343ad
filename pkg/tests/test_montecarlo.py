import math

import numpy as np
import pytest

from subtree_census.models import parse_model
from subtree_census.montecarlo import estimate_mu, run_clt_experiment, small_tree_law
from subtree_census.sampler import tilted_law
from subtree_census.trees import iter_trees, log_counts

BINARY = parse_model("binary-full")
CATALAN = parse_model("catalan")


def test_small_tree_law_binary():
    dist = small_tree_law(tilted_law(BINARY, critical=True), 9)
    for j, cat in enumerate([1, 1, 2, 5, 14]):
        k = 2 * j + 1
        assert math.fsum(dist[k].values()) == pytest.approx(cat / 2 ** k, rel=1e-14)
    for k in (2, 4, 6, 8):
        assert math.fsum(dist[k].values()) == 0
    # both shapes of size 5 have R = (4 + 1)(1 + 1)
    assert dist[5] == {10: pytest.approx(2 / 32)}
    assert dist[3] == {4: pytest.approx(1 / 8)}


def test_small_tree_law_matches_enumeration():
    law = tilted_law(CATALAN, critical=True)
    dist = small_tree_law(law, 7)
    for k in range(1, 8):
        want = {}
        for t in iter_trees(k, range(k)):
            p = math.prod(law.pmf(d) for d in t.degrees)
            r = round(math.exp(log_counts(t)[0]))
            want[r] = want.get(r, 0.0) + p
        assert set(dist[k]) == set(want)
        for r, p in want.items():
            assert dist[k][r] == pytest.approx(p, rel=1e-12)


def test_mu_stable_in_cutoff():
    a = estimate_mu(BINARY, enum_cutoff=13, mc_samples=20_000, size_cap=20_000, seed=5)
    b = estimate_mu(BINARY, enum_cutoff=17, mc_samples=20_000, size_cap=20_000, seed=5)
    assert abs(a.mu_total - b.mu_total) < 1e-3
    assert b.mu_exact_part < b.mu_total
    # P(|T| > k) decays like k^(-1/2), so the head leaves real mass to the tail
    assert a.head_mass < b.head_mass < 1
    assert b.censored_bound <= b.censored_mass / 20_000 + 1e-15
    assert b.sigma2_estimate > 0


def test_mu_reproducible_across_threads():
    a = estimate_mu(CATALAN, 10, 3000, 2000, seed=8, threads=1)
    b = estimate_mu(CATALAN, 10, 3000, 2000, seed=8, threads=3)
    assert a == b
    with pytest.raises(ValueError):
        estimate_mu(CATALAN, 10, 100, 10, seed=1)


def test_clt_small_run():
    rep = run_clt_experiment(BINARY, 201, 2000, seed=3)
    assert rep.samples == 2000 and rep.bound_violations == 0
    assert 0 < rep.mu_hat < math.log(2)
    assert rep.mean_logR <= rep.mean_logS <= rep.mean_logR + math.log(201)
    same = run_clt_experiment(BINARY, 201, 2000, seed=3, threads=2)
    assert rep == same
    d = rep.as_dict()
    assert "pass" in d and "pass_" not in d


def test_clt_mean_matches_exact_small_size():
    n = 15
    vals = np.array([log_counts(t)[0] for t in iter_trees(n, [0, 2])])
    rep = run_clt_experiment(BINARY, n, 20_000, seed=12)
    se = math.sqrt(vals.var() / 20_000)
    assert abs(rep.mean_logR - vals.mean()) < 4 * se
    assert rep.var_logR == pytest.approx(vals.var(), rel=0.1)

import math

import pytest

from subtree_census.acceptance import TABLE_RHO, TABLE_TAU
from subtree_census.models import parse_model
from subtree_census.series import compute_F_family
from subtree_census.singularity import (
    NO_BRANCH,
    SQUARE_ROOT,
    SingularityError,
    eval_F_point,
    family_at,
    find_singularity,
    mixed_constants,
    singularity_reports,
    size_law,
    subcriticality,
    verify_polynomials,
)

BINARY = parse_model("binary-full")
SQ3 = math.sqrt(3)


@pytest.fixture(scope="module")
def binary_reports():
    return singularity_reports(BINARY, 10)


def test_table(binary_reports):
    assert all(r.branch == SQUARE_ROOT for r in binary_reports)
    for m in range(1, 11):
        assert binary_reports[m].rho == pytest.approx(TABLE_RHO[m], abs=1e-5)
        assert binary_reports[m].tau == pytest.approx(TABLE_TAU[m], abs=1e-5)
        assert binary_reports[m].residual < 1e-12


def test_m0_and_first_order(binary_reports):
    r0, r1 = binary_reports[0], binary_reports[1]
    assert r0.rho == pytest.approx(0.5, abs=1e-14) and r0.s == pytest.approx(1.0)
    assert r0.tau == 1.0 and r0.gamma == 1.0
    assert r0.lambda_ == pytest.approx(math.sqrt(2 / math.pi), abs=1e-12)
    assert r1.rho == pytest.approx(math.sqrt(2 * SQ3 - 3) / 2, abs=1e-12)
    assert r1.gamma == pytest.approx(math.sqrt((3 + SQ3) / 2), abs=1e-10)


def test_monotone_radii(binary_reports):
    rhos = [r.rho for r in binary_reports]
    assert all(a > b for a, b in zip(rhos, rhos[1:]))
    taus = [r.tau for r in binary_reports]
    assert all(a < b for a, b in zip(taus, taus[1:]))


def test_point_values():
    assert eval_F_point(BINARY, 0, 0.4) == pytest.approx((1 - math.sqrt(1 - 0.64)) / 0.8, abs=1e-14)
    assert eval_F_point(BINARY, 2, 0.0) == 0.0
    with pytest.raises(ValueError):
        eval_F_point(BINARY, 0, -0.1)
    with pytest.raises(SingularityError):
        eval_F_point(BINARY, 1, 0.4)


@pytest.mark.parametrize("name", ["binary-full", "catalan", "poisson"])
def test_point_matches_series(name):
    model = parse_model(name)
    reps = singularity_reports(model, 3)
    # float coefficients of F_3 for catalan leave the double range past n ~ 245
    fam = compute_F_family(model, 3, 240, "float")
    for m in range(4):
        z = 0.9 * reps[m].rho
        pv = family_at(model, m, z)
        assert pv.F[m] == pytest.approx(fam.F[m].evaluate(z), abs=1e-8)
        assert subcriticality(model, m, 0.5 * reps[m].rho) < 1
        assert subcriticality(model, m, z) < 1


def test_branch_point_is_critical(binary_reports):
    for r in binary_reports[1:4]:
        assert subcriticality(BINARY, r.m, r.rho * (1 - 1e-9)) == pytest.approx(1.0, abs=1e-3)


def test_catalan_lambda():
    r0 = singularity_reports(parse_model("catalan"), 0)[0]
    assert r0.rho == pytest.approx(0.25)
    assert r0.lambda_ == pytest.approx(1 / (4 * math.sqrt(math.pi)), abs=1e-12)


def test_polynomials(binary_reports):
    p1, p2, p3 = verify_polynomials(*binary_reports[1:4])
    assert p1 < 1e-12 and p2 < 1e-10 and p3 < 1e-6


@pytest.mark.parametrize("a", ["0.09", "0.0996"])
def test_no_branch_point(a):
    model = parse_model(f"zeta4:a={a}")
    reps = singularity_reports(model, 3)
    assert len(reps) == 2
    assert reps[0].is_square_root
    assert reps[1].branch == NO_BRANCH and reps[1].branch_label == "no-branch-point(xb)"
    assert reps[1].rho < reps[0].rho
    with pytest.raises(SingularityError):
        find_singularity(model, 2, reps)


def test_small_a_has_a_branch():
    reps = singularity_reports(parse_model("zeta4:a=0.02"), 1)
    assert reps[1].is_square_root or reps[1].reason == "xb"


def test_mixed_constants(binary_reports):
    mc = mixed_constants(BINARY, binary_reports, 2)
    assert mc.alpha[(1, 0)] == pytest.approx((1 + SQ3) / 2, abs=1e-10)
    assert mc.majority_ratio == pytest.approx(SQ3 - 1, abs=1e-10)
    assert mc.alpha[(1, 1)] == pytest.approx(1.339117, abs=1e-5)
    assert 0 < mc.correlation < 1
    for (l, m), g in mc.gamma_prime.items():
        assert g == pytest.approx(mc.alpha[(m, l)] * binary_reports[m + l].gamma)
    with pytest.raises(SingularityError):
        mixed_constants(BINARY, binary_reports[:2], 2)


def test_size_law(binary_reports):
    law = size_law(BINARY, binary_reports[1])
    assert law.mu_x == pytest.approx(2 / 3, abs=1e-12)
    assert law.sigma2_x == pytest.approx((1 + SQ3) / 9, abs=1e-12)
    with pytest.raises(SingularityError):
        size_law(BINARY, binary_reports[2])

"""Acceptance checks, shared by ``census verify`` and the test suite.

Each check returns a ``CriterionResult`` holding one line of sub-results.
Reference values for full binary trees are the tabulated ones; tolerances
are the stated ones and are never widened here.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional

import numpy as np

from .models import parse_model
from .montecarlo import estimate_mu, run_clt_experiment
from .series import compute_bivariate, compute_F_family, compute_G_family, exact_moment
from .singularity import (
    NO_BRANCH,
    mixed_constants,
    singularity_reports,
    size_law,
    verify_polynomials,
)
from .trees import counts, iter_trees

__all__ = ["CriterionResult", "CHECKS", "run_all", "format_result"]

SQ3 = math.sqrt(3.0)
SQ2 = math.sqrt(2.0)

TABLE_TAU = {
    1: 1.467890, 2: 2.158182, 3: 3.177848, 4: 4.685754, 5: 6.918003,
    6: 10.22570, 7: 15.13130, 8: 22.41257, 9: 33.22804, 10: 49.30410,
}
TABLE_RHO = {
    1: 0.340625, 2: 0.231676, 3: 0.157339, 4: 0.106706, 5: 0.072275,
    6: 0.048896, 7: 0.033044, 8: 0.022309, 9: 0.015048, 10: 0.010141,
}
ALPHA_REF = {(1, 0): 1.366025, (1, 1): 1.339117, (2, 0): 1.893755}
# keyed (general marks, root marks), like ALPHA_REF
GAMMA_PRIME_REF = {(1, 0): 2.101204, (1, 1): 3.160952, (2, 0): 4.470213}
CORRELATION_REF = 0.973087

CLT_SIZES = (501, 1001, 2001)
CLT_SAMPLES = 10_000
CLT_SEED = 20240601
MU_SETTINGS = {
    "binary-full": dict(enum_cutoff=17, mc_samples=20_000, size_cap=20_000),
    "catalan": dict(enum_cutoff=12, mc_samples=20_000, size_cap=20_000),
}
# variance stability: max/min of var(log R)/n over the sizes
VAR_RATIO_LIMIT = 1.25
# moment asymptote: relative spread of n (ratio - 1) against its value at n = 401
C_SPREAD_LIMIT = 0.1


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool = True
    parts: List[str] = field(default_factory=list)
    elapsed: float = 0.0

    def check(self, label: str, ok: bool, detail: str = ""):
        self.passed = self.passed and bool(ok)
        self.parts.append(f"{label}:{'ok' if ok else 'FAIL'}" + (f"({detail})" if detail else ""))
        return ok


def format_result(r: CriterionResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    return f"[{status}] criterion {r.number}: {r.title} ({r.elapsed:.1f}s) " + "; ".join(r.parts)


def _near(res: CriterionResult, label: str, got: float, want: float, tol: float):
    err = abs(got - want)
    res.check(label, err <= tol, f"{got:.9g} vs {want:.9g}, |err|={err:.2e}, tol={tol:g}")


@lru_cache(maxsize=None)
def _binary_reports(max_m: int = 10):
    return tuple(singularity_reports(parse_model("binary-full"), max_m))


def check_table() -> CriterionResult:
    res = CriterionResult(1, "singularity table, m = 1..10")
    t0 = time.perf_counter()
    reps = singularity_reports(parse_model("binary-full"), 10)
    dt = time.perf_counter() - t0
    worst_tau = max(abs(reps[m].tau - TABLE_TAU[m]) for m in range(1, 11))
    worst_rho = max(abs(reps[m].rho - TABLE_RHO[m]) for m in range(1, 11))
    res.check("tau", worst_tau <= 1e-5, f"max |err|={worst_tau:.2e}")
    res.check("rho", worst_rho <= 1e-5, f"max |err|={worst_rho:.2e}")
    res.check("runtime", dt < 10.0, f"{dt:.2f}s")
    return res


def check_closed_forms() -> CriterionResult:
    res = CriterionResult(2, "closed-form constants")
    reps = _binary_reports()
    _near(res, "rho0", reps[0].rho, 0.5, 1e-12)
    _near(res, "rho1", reps[1].rho, math.sqrt(2 * SQ3 - 3) / 2, 1e-10)
    rho2 = 0.5 * math.sqrt(2 * math.sqrt(48 * SQ2 + 59) - 8 * SQ2 - 11)
    _near(res, "rho2", reps[2].rho, rho2, 1e-10)
    _near(res, "lambda0", reps[0].lambda_, math.sqrt(2 / math.pi), 1e-4)
    _near(res, "lambda1", reps[1].lambda_, math.sqrt((3 + SQ3) / math.pi), 1e-4)
    _near(res, "lambda2", reps[2].lambda_, 1.883418, 1e-4)
    _near(res, "gamma1", reps[1].gamma, math.sqrt((3 + SQ3) / 2), 1e-4)
    _near(res, "gamma2", reps[2].gamma, 2.360501, 1e-4)
    return res


def check_polynomials() -> CriterionResult:
    res = CriterionResult(3, "minimal polynomials and tau ratios")
    reps = _binary_reports()
    p1, p2, p3 = verify_polynomials(reps[1], reps[2], reps[3])
    res.check("P1", p1 < 1e-9, f"{p1:.2e}")
    res.check("P2", p2 < 1e-7, f"{p2:.2e}")
    res.check("P3", p3 < 1e-3, f"{p3:.2e}")
    t1, t2, t3 = reps[1].tau, reps[2].tau, reps[3].tau
    _near(res, "tau2/tau1^2", t2 / t1 ** 2, 1.0016, 2e-4)
    _near(res, "tau3 tau1^3/tau2^3", t3 * t1 ** 3 / t2 ** 3, 0.99988, 5e-5)
    return res


def check_mixed() -> CriterionResult:
    res = CriterionResult(4, "general-subtree constants")
    reps = _binary_reports()
    mc = mixed_constants(parse_model("binary-full"), reps, 2)
    for key, want in ALPHA_REF.items():
        _near(res, f"alpha{key}", mc.alpha[key], want, 1e-4)
    for (m, l), want in GAMMA_PRIME_REF.items():
        _near(res, f"gamma'[m={m},l={l}]", mc.gamma_prime[(l, m)], want, 1e-4)
    _near(res, "correlation", mc.correlation, CORRELATION_REF, 1e-4)
    _near(res, "R/S ratio", mc.majority_ratio, SQ3 - 1, 1e-4)
    return res


def _exhaustive_sums(alphabet, n):
    acc: Dict[tuple, int] = {}
    keys = [(0, l) for l in range(4)] + [(m, l) for m in range(1, 4) for l in range(4 - m)]
    for t in iter_trees(n, alphabet):
        c = counts(t)
        for m, l in keys:
            acc[(m, l)] = acc.get((m, l), 0) + c.s ** m * c.r ** l
    return acc


def check_oracle(max_n: int = 13) -> CriterionResult:
    res = CriterionResult(5, f"series = exhaustive sums, n <= {max_n}")
    t0 = time.perf_counter()
    for name in ("binary-full", "catalan"):
        model = parse_model(name)
        fam = compute_F_family(model, 3, max_n, "rational")
        mix = compute_G_family(fam, 3)
        alphabet = [0, 2] if name == "binary-full" else list(range(max_n))
        bad = []
        for n in range(1, max_n + 1):
            sums = _exhaustive_sums(alphabet, n)
            for key in mix.G:
                want = sums.get(key, 0)
                if mix.G[key][n] != want:
                    bad.append((n, key))
        res.check(name, not bad, f"{len(bad)} mismatches" if bad else "all equal")
    dt = time.perf_counter() - t0
    res.check("runtime", dt < 60.0, f"{dt:.1f}s")
    return res


def check_moment_asymptote() -> CriterionResult:
    res = CriterionResult(6, "moment asymptote O(1/n)")
    model = parse_model("binary-full")
    reps = _binary_reports()
    fam = compute_F_family(model, 2, 401, "float")
    ns = list(range(101, 402, 50))
    for m in (1, 2):
        C = {n: n * (exact_moment(fam, m, n) / (reps[m].gamma * reps[m].tau ** n) - 1) for n in ns}
        ref = C[401]
        spread = max(abs(c - ref) for c in C.values()) / abs(ref)
        res.check(f"m={m}", spread <= C_SPREAD_LIMIT, f"C_401={ref:.4f}, spread={spread:.3f}")
    return res


def check_size_law() -> CriterionResult:
    res = CriterionResult(7, "root-subtree size constants")
    model = parse_model("binary-full")
    law = size_law(model, _binary_reports()[1])
    _near(res, "mu_x", law.mu_x, 2 / 3, 1e-10)
    _near(res, "sigma2_x", law.sigma2_x, (1 + SQ3) / 9, 1e-10)
    biv = compute_bivariate(compute_F_family(model, 1, 201, "rational"))
    dev = max(abs(float(biv.mean_size(n)) - 2 * n / 3) for n in range(1, 202, 2))
    res.check("|E X_n - 2n/3|", dev < 5, f"max={dev:.4f}")
    return res


def check_counterexample(cli_main: Optional[Callable] = None) -> CriterionResult:
    res = CriterionResult(8, "branch failure without an infinite derivative at R")
    for a in ("0.09", "0.0996"):
        model = parse_model(f"zeta4:a={a}")
        reps = singularity_reports(model, 1)
        r1 = reps[-1]
        ok = len(reps) == 2 and r1.branch == NO_BRANCH and r1.reason == "xb"
        res.check(f"a={a}", ok, r1.branch_label)
    if cli_main is not None:
        import io
        import contextlib

        with contextlib.redirect_stdout(io.StringIO()):
            code = cli_main(["singularities", "--model", "zeta4:a=0.09", "--max-m", "1"])
        res.check("cli exit", code == 3, f"exit {code}")
    return res


@lru_cache(maxsize=None)
def _clt(name: str, n: int):
    return run_clt_experiment(parse_model(name), n, CLT_SAMPLES, CLT_SEED)


def check_clt() -> CriterionResult:
    res = CriterionResult(9, "log-normal screening, binary, n=2001")
    t0 = time.perf_counter()
    reps = {n: _clt("binary-full", n) for n in CLT_SIZES}
    dt = time.perf_counter() - t0
    big = reps[2001]
    res.check("bound", big.bound_violations == 0, f"{big.bound_violations} violations")
    res.check("mu_hat>0", big.mu_hat > 0, f"{big.mu_hat:.6f}")
    v = np.array([reps[n].sigma2_hat for n in CLT_SIZES])
    slope = np.polyfit(np.array(CLT_SIZES, float), v * np.array(CLT_SIZES), 1)[0]
    res.check("var/n>0", bool((v > 0).all()) and slope > 0, f"{', '.join(f'{x:.6f}' for x in v)}")
    res.check("var/n stable", v.max() / v.min() <= VAR_RATIO_LIMIT, f"max/min={v.max() / v.min():.3f}")
    res.check(
        "normality",
        big.pass_,
        f"skew={big.skewness:.3f}, exkurt={big.excess_kurtosis:.3f}, KS={big.ks_statistic:.4f}",
    )
    res.check("runtime", dt < 60.0, f"{dt:.1f}s")
    return res


def check_mu_agreement() -> CriterionResult:
    res = CriterionResult(10, "mu: small-tree expectation vs CLT mean at n=2001")
    for name, kw in MU_SETTINGS.items():
        est = estimate_mu(parse_model(name), seed=CLT_SEED, **kw)
        clt = _clt(name, 2001)
        se = math.hypot(est.std_error, clt.mu_hat_std_error)
        diff = abs(est.mu_total - clt.mu_hat)
        res.check(
            name,
            diff < 3 * se,
            f"mu={est.mu_total:.7f}, mu_hat={clt.mu_hat:.7f}, |diff|={diff:.2e}, 3se={3 * se:.2e}",
        )
    return res


CHECKS = [
    check_table,
    check_closed_forms,
    check_polynomials,
    check_mixed,
    check_oracle,
    check_moment_asymptote,
    check_size_law,
    check_counterexample,
    check_clt,
    check_mu_agreement,
]


def run_all(cli_main: Optional[Callable] = None, emit: Callable[[str], None] = print) -> List[CriterionResult]:
    out = []
    for fn in CHECKS:
        t0 = time.perf_counter()
        r = fn(cli_main) if fn is check_counterexample else fn()
        r.elapsed = time.perf_counter() - t0
        emit(format_result(r))
        out.append(r)
    return out

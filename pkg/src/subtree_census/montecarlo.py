"""Monte Carlo checks of the log-normal limit of ``R(T_n)`` and ``S(T_n)``.

Two independent routes to the constant ``mu`` in ``E log R(T_n) ~ mu n``:

* ``run_clt_experiment``: sample conditioned trees of size ``n`` and divide
  the mean of ``log R`` by ``n``;
* ``estimate_mu``: ``mu = E f(T)`` for the unconditioned critical tree ``T``
  and the toll ``f(T) = log(1 + 1/R(T))``, exact over small trees plus a
  Monte Carlo tail.

Samples are drawn in fixed-size chunks, chunk ``k`` from substream ``k``, so
results do not depend on how many worker threads are used.
"""

from __future__ import annotations

import math
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np
from scipy import stats

from .models import OffspringModel
from .sampler import RngStream, _walk_unconditioned, sample_conditioned_batch, tilted_law
from .trees import OrderedTree, log_counts, log_counts_batch

__all__ = [
    "CltReport",
    "MuEstimate",
    "run_clt_experiment",
    "estimate_mu",
    "small_tree_law",
    "SKEW_LIMIT",
    "KURT_LIMIT",
    "KS_FACTOR",
]

CHUNK = 1000
SKEW_LIMIT = 0.1
KURT_LIMIT = 0.2
# three times the 1% Kolmogorov-Smirnov critical value 1.63 / sqrt(samples)
KS_FACTOR = 3 * 1.63


def _workers(threads: Optional[int]) -> int:
    return max(1, threads if threads else (os.cpu_count() or 1))


@dataclass(frozen=True)
class CltReport:
    n: int
    samples: int
    mean_logR: float
    var_logR: float
    mean_logS: float
    var_logS: float
    mu_hat: float
    sigma2_hat: float
    skewness: float
    excess_kurtosis: float
    ks_statistic: float
    pass_: bool
    bound_violations: int
    mu_hat_std_error: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("pass_")
        return d


def _clt_chunk(model, n, count, stream, law):
    degs = sample_conditioned_batch(model, n, count, stream, law=law)
    return log_counts_batch(degs)


def run_clt_experiment(
    model: OffspringModel, n: int, samples: int, seed: int, threads: Optional[int] = None
) -> CltReport:
    """Sample ``samples`` trees of size ``n`` and screen ``log R`` for normality."""
    if samples < 2:
        raise ValueError("need at least two samples")
    law = tilted_law(model, critical=False)
    root = RngStream(seed, 0)
    sizes = [min(CHUNK, samples - k) for k in range(0, samples, CHUNK)]
    jobs = [(model, n, c, root.substream(i), law) for i, c in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=_workers(threads)) as pool:
        parts = list(pool.map(lambda a: _clt_chunk(*a), jobs))
    log_r = np.concatenate([p[0] for p in parts])
    log_s = np.concatenate([p[1] for p in parts])
    gap = log_s - log_r
    violations = int(np.count_nonzero((gap < -1e-9) | (gap > math.log(n) + 1e-9)))
    mean_r, var_r = float(log_r.mean()), float(log_r.var(ddof=1))
    z = (log_r - mean_r) / math.sqrt(var_r) if var_r > 0 else np.zeros_like(log_r)
    skew = float(stats.skew(z))
    kurt = float(stats.kurtosis(z))
    ks = float(stats.kstest(z, "norm").statistic)
    ok = abs(skew) < SKEW_LIMIT and abs(kurt) < KURT_LIMIT and ks < KS_FACTOR / math.sqrt(samples)
    return CltReport(
        n=n,
        samples=samples,
        mean_logR=mean_r,
        var_logR=var_r,
        mean_logS=float(log_s.mean()),
        var_logS=float(log_s.var(ddof=1)),
        mu_hat=mean_r / n,
        sigma2_hat=var_r / n,
        skewness=skew,
        excess_kurtosis=kurt,
        ks_statistic=ks,
        pass_=ok and violations == 0,
        bound_violations=violations,
        mu_hat_std_error=math.sqrt(var_r / samples) / n,
    )


# --------------------------------------------------------------------------
# mu = E f(T)


def small_tree_law(law, cutoff: int) -> Dict[int, Dict[int, float]]:
    """``P(|T| = k, R(T) = r)`` for the unconditioned tree, all ``k <= cutoff``.

    Trees are built from forests: a root of degree ``d`` over a forest of
    ``d`` trees of total size ``k - 1`` has ``R = prod (R_child + 1)``.
    """
    dist: Dict[int, Dict[int, float]] = {1: {1: law.pmf(0)}}
    # forest[d][s]: d trees of total size s, keyed by prod (R_c + 1)
    forest: Dict[int, Dict[int, Dict[int, float]]] = defaultdict(dict)
    for s in range(1, cutoff):
        forest[1][s] = {r + 1: p for r, p in dist[s].items()}
        for d in range(2, s + 1):
            acc: Dict[int, float] = defaultdict(float)
            for s1 in range(1, s - d + 2):
                left = forest[d - 1].get(s - s1)
                if not left:
                    continue
                for r1, p1 in forest[1][s1].items():
                    for r2, p2 in left.items():
                        acc[r1 * r2] += p1 * p2
            if acc:
                forest[d][s] = dict(acc)
        nxt: Dict[int, float] = defaultdict(float)
        for d in range(1, s + 1):
            pd = law.pmf(d)
            if pd == 0 or s not in forest[d]:
                continue
            for r, p in forest[d][s].items():
                nxt[r] += pd * p
        dist[s + 1] = dict(nxt)
    return dist


@dataclass(frozen=True)
class MuEstimate:
    mu_exact_part: float
    mu_mc_part: float
    mu_total: float
    sigma2_estimate: float
    std_error: float
    enum_cutoff: int
    mc_samples: int
    size_cap: int
    head_mass: float
    tail_hits: int
    censored: int
    censored_mass: float
    censored_bound: float

    def as_dict(self) -> dict:
        return asdict(self)


def _tail_chunk(law, count, stream, cutoff, size_cap):
    gen = stream.generator()
    # columns: f, f^2, f*F, f*|T|
    rows = []
    censored = 0
    for _ in range(count):
        degs = _walk_unconditioned(law, gen, size_cap)
        if degs is None:
            censored += 1
            continue
        if len(degs) <= cutoff:
            continue
        log_r, _ = log_counts(OrderedTree(tuple(degs.tolist())))
        f = math.log1p(math.exp(-log_r))
        F = log_r + f
        rows.append((f, f * f, f * F, f * len(degs)))
    return rows, censored


def estimate_mu(
    model: OffspringModel,
    enum_cutoff: int,
    mc_samples: int,
    size_cap: int,
    seed: int,
    threads: Optional[int] = None,
) -> MuEstimate:
    """``mu = E f(T)`` with an exact head over trees of size ``<= enum_cutoff``.

    Trees above the cutoff come from ``mc_samples`` unconditioned draws of
    which only the large ones contribute; draws exceeding ``size_cap`` are
    censored and bounded using ``f(T) <= 1/R(T) <= 1/|T|``.  ``sigma2`` uses

        sigma^2 = 2 E[f(T)(F(T) - |T| mu)] - Var f(T) - mu^2 / Var xi.
    """
    if size_cap <= enum_cutoff:
        raise ValueError("size_cap must exceed enum_cutoff")
    law = tilted_law(model, critical=True)
    head = small_tree_law(law, enum_cutoff)
    h = np.zeros(4)
    head_mass = 0.0
    for k, table in head.items():
        for r, p in table.items():
            f = math.log1p(1.0 / r)
            F = math.log1p(r)
            h += p * np.array([f, f * f, f * F, f * k])
            head_mass += p
    root = RngStream(seed, 1)
    sizes = [min(CHUNK, mc_samples - k) for k in range(0, mc_samples, CHUNK)]
    jobs = [(law, c, root.substream(i), enum_cutoff, size_cap) for i, c in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=_workers(threads)) as pool:
        parts = list(pool.map(lambda a: _tail_chunk(*a), jobs))
    rows = [r for part, _ in parts for r in part]
    censored = sum(c for _, c in parts)
    vals = np.zeros((mc_samples, 4))
    if rows:
        vals[: len(rows)] = np.array(rows)
    t = vals.mean(axis=0)
    se = float(vals[:, 0].std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else math.inf
    censored_mass = censored / mc_samples
    censored_bound = censored_mass / size_cap
    Ef, Ef2, EfF, Efn = h + t
    mu = Ef
    sigma2 = 2 * (EfF - mu * Efn) - (Ef2 - mu * mu) - mu * mu / law.variance
    return MuEstimate(
        mu_exact_part=float(h[0]),
        mu_mc_part=float(t[0]),
        mu_total=float(mu),
        sigma2_estimate=float(sigma2),
        std_error=se,
        enum_cutoff=enum_cutoff,
        mc_samples=mc_samples,
        size_cap=size_cap,
        head_mass=head_mass,
        tail_hits=len(rows),
        censored=censored,
        censored_mass=censored_mass,
        censored_bound=censored_bound,
    )

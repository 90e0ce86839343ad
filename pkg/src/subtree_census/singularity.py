"""Dominant singularities of the root-subtree generating functions.

For each ``m`` the function ``F_m`` is the smallest solution of
``w = Psi_m(z, w) = z Phi(w + H_m(z))``.  Its radius ``rho_m`` and value
``s_m = F_m(rho_m)`` solve the characteristic system

    Psi_m(rho, s) = s,        d/dw Psi_m(rho, s) = rho Phi'(s + H_m(rho)) = 1,

provided the branch point is reached before ``s + H_m`` hits the radius ``R``
of ``Phi``.  All derivatives of ``F_k`` are analytic recurrences obtained by
differentiating the fixed-point equation, never finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .models import OffspringModel
from .sampler import SamplerError, critical_tilt

__all__ = [
    "SingularityError",
    "SingularityReport",
    "MixedConstants",
    "SizeLaw",
    "PointValues",
    "family_at",
    "eval_F_point",
    "find_singularity",
    "singularity_reports",
    "lambda_constant",
    "mixed_constants",
    "size_law",
    "verify_polynomials",
    "subcriticality",
]

SQUARE_ROOT = "square-root"
NO_BRANCH = "no-branch-point"

_NEWTON_TOL = 1e-13
_MAX_RESTARTS = 8


class SingularityError(RuntimeError):
    pass


@dataclass(frozen=True)
class PointValues:
    """``F_k``, ``F_k'``, ``F_k''`` and ``FF_k`` at one point, for ``k = 0..m``."""

    z: float
    F: tuple
    dF: tuple
    d2F: tuple
    FF: tuple


def _H(vals: Sequence[float], m: int) -> float:
    return math.fsum(comb(m, k) * vals[k] for k in range(m))


def _smallest_fixed_point(model: OffspringModel, z: float, H: float) -> float:
    # g(w) = z Phi(w + H) - w is convex with g(0) > 0.  Newton from w = 0
    # climbs monotonically to the smallest root, or fails if g turns upward first.
    R = model.radius
    w = 0.0
    for _ in range(200):
        x = w + H
        if x >= R:
            raise SingularityError(f"F(z) reaches the radius of Phi at z={z}")
        g = z * model.phi(x, 0) - w
        dg = z * model.phi(x, 1) - 1.0
        if g <= 1e-16 * max(1.0, w):
            return w
        if dg >= 0:
            raise SingularityError(f"no fixed point at z={z}: z is beyond the singularity")
        step = -g / dg
        w_new = w + step
        if w_new >= R - H and math.isfinite(R):
            # zeta4: the iterate may hit the radius exactly at the boundary
            w_new = min(w_new, R - H)
        if step <= 1e-16 * max(1.0, w_new):
            return w_new
        w = w_new
    raise SingularityError(f"fixed point iteration did not converge at z={z}")


def family_at(model: OffspringModel, m: int, z: float) -> PointValues:
    """Values and first two derivatives of ``F_0..F_m`` at ``z`` (``0 <= z < rho_m``)."""
    F: List[float] = []
    dF: List[float] = []
    d2F: List[float] = []
    FFs: List[float] = []
    for k in range(m + 1):
        H = _H(F, k)
        dH = _H(dF, k)
        d2H = _H(d2F, k)
        if z == 0.0:
            F.append(0.0)
            dF.append(model.phi(0.0, 0))
            d2F.append(2 * model.phi(0.0, 0) * model.phi(0.0, 1))
            FFs.append(H)
            continue
        w = _smallest_fixed_point(model, z, H)
        x = w + H
        p0, p1, p2 = model.phi(x, 0), model.phi(x, 1), model.phi(x, 2)
        den = 1.0 - z * p1
        if den <= 0:
            raise SingularityError(f"z={z} is at or beyond the branch point of F_{k}")
        d1 = (p0 + z * p1 * dH) / den
        dx = d1 + dH
        d2 = (2 * p1 * dx + z * p2 * dx * dx + z * p1 * d2H) / den
        F.append(w)
        dF.append(d1)
        d2F.append(d2)
        FFs.append(x)
    return PointValues(z, tuple(F), tuple(dF), tuple(d2F), tuple(FFs))


def eval_F_point(model: OffspringModel, m: int, z: float) -> float:
    """``F_m(z)`` as the smallest fixed point of ``w -> z Phi(w + H_m(z))``."""
    if z < 0:
        raise ValueError("z must be nonnegative")
    return family_at(model, m, z).F[m]


@dataclass(frozen=True)
class SingularityReport:
    m: int
    rho: float
    s: float
    tau: float
    lambda_: float
    gamma: float
    branch: str
    reason: str = ""
    residual: float = 0.0
    iterations: int = 0
    FF: float = math.nan

    @property
    def is_square_root(self) -> bool:
        return self.branch == SQUARE_ROOT

    @property
    def branch_label(self) -> str:
        return self.branch if not self.reason else f"{self.branch}({self.reason})"


def _residual(model, m, rho, s):
    # returns (E1, E2, jacobian) or raises if outside the domain
    lower = family_at(model, m - 1, rho) if m > 0 else None
    if m > 0:
        H = _H(lower.F, m)
        dH = _H(lower.dF, m)
    else:
        H = dH = 0.0
    x = s + H
    if x >= model.radius:
        raise SingularityError("s + H_m(rho) reached the radius of Phi")
    p0, p1, p2 = model.phi(x, 0), model.phi(x, 1), model.phi(x, 2)
    e1 = rho * p0 - s
    e2 = rho * p1 - 1.0
    J = np.array([[p0 + rho * p1 * dH, rho * p1 - 1.0], [p1 + rho * p2 * dH, rho * p2]])
    return e1, e2, J, x


def _xb_precheck(model: OffspringModel, m: int, upper: float) -> Optional[float]:
    """Radius at which ``FF_m`` would reach ``R``, if that pre-empts the branch point.

    With ``Phi'(R)`` finite, let ``rho_b`` solve ``z Phi(R) + H_m(z) = R``.
    If ``rho_b Phi'(R) < 1`` then at ``rho_b`` the map ``w -> rho_b Phi(w + H)``
    is a contraction on ``[0, R - H]`` whose only fixed point is the endpoint,
    so ``FF_m(rho_b) = R`` and the square-root branch is never reached.
    """
    R = model.radius
    if not math.isfinite(R):
        return None
    phiR = model.phi_at_radius(0)
    dphiR = model.phi_at_radius(1)
    if not (math.isfinite(phiR) and math.isfinite(dphiR)):
        return None

    def gap(z):
        H = _H(family_at(model, m - 1, z).F, m) if m > 0 else 0.0
        return z * phiR + H - R

    lo, hi = 0.0, upper * (1 - 1e-12)
    try:
        if gap(hi) < 0:
            return None
    except SingularityError:
        # lower families blew up before hi; shrink to the evaluable range
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * hi:
            break
    rho_b = 0.5 * (lo + hi)
    if rho_b * dphiR < 1.0:
        return rho_b
    return None


def _solve_m0(model: OffspringModel):
    # H_0 = 0: s Phi'(s) / Phi(s) = 1 is the critical tilt, rho = s / Phi(s)
    s = critical_tilt(model)
    rho = s / model.phi(s, 0)
    return rho, s


def _newton(model, m, rho, s, rho_max, tol=_NEWTON_TOL):
    best = None
    for it in range(1, 101):
        e1, e2, J, _ = _residual(model, m, rho, s)
        norm = math.hypot(e1, e2)
        best = (rho, s, norm, it)
        if norm < tol:
            return best
        try:
            step = np.linalg.solve(J, [-e1, -e2])
        except np.linalg.LinAlgError:
            raise SingularityError("singular Jacobian")
        t = 1.0
        while t > 1e-10:
            r_new, s_new = rho + t * step[0], s + t * step[1]
            if 0 < r_new < rho_max and s_new > 0:
                try:
                    f1, f2, _, _ = _residual(model, m, r_new, s_new)
                    if math.hypot(f1, f2) < norm:
                        break
                except SingularityError:
                    pass
            t *= 0.5
        else:
            raise SingularityError("damped Newton stalled")
        rho, s = float(r_new), float(s_new)
    raise SingularityError(f"Newton did not converge (residual {best[2]:.3e})")


def _start_value(model, m, rho0):
    try:
        return eval_F_point(model, m, rho0)
    except SingularityError:
        pass
    # rho0 beyond the branch point: take w with rho0 Phi'(w + H) = 1
    H = _H(family_at(model, m - 1, rho0).F, m)
    lo, hi = 0.0, 1.0
    if math.isfinite(model.radius):
        hi = model.radius - H
    else:
        while rho0 * model.phi(hi + H, 1) < 1:
            hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rho0 * model.phi(mid + H, 1) < 1:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_singularity(
    model: OffspringModel, m: int, lower: Sequence[SingularityReport] = (), tol: float = _NEWTON_TOL
) -> SingularityReport:
    """Solve the characteristic system for ``F_m`` given reports for ``0..m-1``."""
    lower = list(lower)
    if len(lower) < m:
        lower = singularity_reports(model, m - 1, tol) if m > 0 else []
    if m > 0 and not all(r.is_square_root for r in lower[:m]):
        raise SingularityError(f"lower order lacks a square-root branch; cannot continue to m={m}")
    rho0_report = lower[0] if m > 0 else None
    if m == 0:
        try:
            rho, s = _solve_m0(model)
        except SamplerError as exc:
            return SingularityReport(0, math.nan, math.nan, math.nan, math.nan, math.nan, NO_BRANCH, str(exc))
        it = 0
        e1, e2, _, x = _residual(model, 0, rho, s)
        res = math.hypot(e1, e2)
    else:
        rho_prev = lower[m - 1].rho
        rho_b = _xb_precheck(model, m, rho_prev)
        if rho_b is not None:
            s_b = rho_b * model.phi_at_radius(0)
            return SingularityReport(
                m, rho_b, s_b, lower[0].rho / rho_b, math.nan, math.nan, NO_BRANCH, "xb",
                FF=model.radius,
            )
        rng = np.random.default_rng(m)
        last_err = None
        for attempt in range(_MAX_RESTARTS + 1):
            factor = 0.72 if attempt == 0 else float(rng.uniform(0.3, 0.98))
            rho_start = factor * rho_prev
            try:
                s_start = _start_value(model, m, rho_start)
                rho, s, res, it = _newton(model, m, rho_start, s_start, rho_prev, tol)
                break
            except SingularityError as exc:
                last_err = exc
        else:
            raise SingularityError(f"m={m}: no convergence after restarts ({last_err})")
        _, _, _, x = _residual(model, m, rho, s)
        if not rho < rho_prev:
            return SingularityReport(m, rho, s, math.nan, math.nan, math.nan, NO_BRANCH, "xa")
        if not x < model.radius:
            return SingularityReport(m, rho, s, math.nan, math.nan, math.nan, NO_BRANCH, "xb")
    rho_0 = rho if m == 0 else rho0_report.rho
    partial = SingularityReport(m, rho, s, rho_0 / rho, math.nan, math.nan, SQUARE_ROOT, "", res, it, x)
    lam = lambda_constant(model, partial)
    lam0 = lam if m == 0 else lower[0].lambda_
    return SingularityReport(m, rho, s, rho_0 / rho, lam, lam / lam0, SQUARE_ROOT, "", res, it, x)


def lambda_constant(model: OffspringModel, report: SingularityReport) -> float:
    """``lambda_m = span * sqrt(2 rho Psi_z / Psi_ww) / (2 sqrt(pi))``."""
    if not report.is_square_root:
        raise SingularityError("lambda is defined only for a square-root branch")
    rho, s, m = report.rho, report.s, report.m
    dH = _H(family_at(model, m - 1, rho).dF, m) if m > 0 else 0.0
    H = _H(family_at(model, m - 1, rho).F, m) if m > 0 else 0.0
    x = s + H
    psi_z = model.phi(x, 0) + rho * model.phi(x, 1) * dH
    psi_ww = rho * model.phi(x, 2)
    if psi_ww <= 0:
        raise SingularityError("degenerate branch point (Psi_ww = 0)")
    g = math.sqrt(2.0 * rho * psi_z / psi_ww)
    return model.span * g / (2.0 * math.sqrt(math.pi))


def singularity_reports(model: OffspringModel, max_m: int, tol: float = _NEWTON_TOL) -> List[SingularityReport]:
    """Reports for ``m = 0..max_m``; stops after the first non-square-root branch."""
    out: List[SingularityReport] = []
    for m in range(max_m + 1):
        rep = find_singularity(model, m, out, tol)
        out.append(rep)
        if not rep.is_square_root:
            break
    return out


def subcriticality(model: OffspringModel, m: int, z: float) -> float:
    """``d/dw Psi_m(z, F_m(z)) = z Phi'(FF_m(z))``; below 1 for ``z < rho_m``."""
    pv = family_at(model, m, z)
    return z * model.phi(pv.FF[m], 1)


# --------------------------------------------------------------------------
# general subtrees


@dataclass(frozen=True)
class MixedConstants:
    """Constants of ``E[S^m R^l] ~ gamma'_{l,m} tau_{m+l}^n``.

    ``alpha`` is keyed ``(m, l)`` with ``m`` general-subtree marks and ``l``
    root-subtree marks; ``gamma_prime`` is keyed ``(l, m)``, so
    ``gamma_prime[(l, m)] = alpha[(m, l)] * gamma_{l+m}``.
    """

    alpha: Dict[Tuple[int, int], float]
    gamma_prime: Dict[Tuple[int, int], float]
    correlation: float
    majority_ratio: float


def mixed_constants(
    model: OffspringModel, reports: Sequence[SingularityReport], max_total: int = 2
) -> MixedConstants:
    """``alpha_{m,l}`` by the recursion over general-subtree marks, for ``m + l <= max_total``."""
    if len(reports) <= max_total or not all(r.is_square_root for r in reports[: max_total + 1]):
        raise SingularityError(f"need square-root reports through m={max_total}")
    alpha: Dict[Tuple[int, int], float] = {}
    for T in range(max_total + 1):
        alpha[(0, T)] = 1.0
    for T in range(1, max_total + 1):
        rho_T = reports[T].rho
        FF = family_at(model, T - 1, rho_T).FF
        for m in range(1, T + 1):
            l = T - m
            num = 1.0 + rho_T * math.fsum(
                comb(m, k) * alpha[(k, T - k)] * model.phi(FF[T - k], 1) for k in range(1, m)
            )
            den = 1.0 - rho_T * model.phi(FF[l], 1)
            if den <= 0:
                raise SingularityError(f"nonpositive denominator for alpha_({m},{l})")
            alpha[(m, l)] = float(num / den)
    gamma_prime = {(l, m): a * reports[m + l].gamma for (m, l), a in alpha.items()}
    corr = math.nan
    if max_total >= 2:
        corr = alpha[(1, 1)] / math.sqrt(alpha[(2, 0)])
    return MixedConstants(alpha, gamma_prime, corr, 1.0 / alpha[(1, 0)])


# --------------------------------------------------------------------------
# size of a random root subtree


@dataclass(frozen=True)
class SizeLaw:
    d1: float
    d2: float
    d3: float
    mu_x: float
    sigma2_x: float


def size_law(model: OffspringModel, report_1: SingularityReport) -> SizeLaw:
    """Mean and variance constants of the size of a uniform root subtree."""
    if report_1.m != 1 or not report_1.is_square_root:
        raise SingularityError("size law needs the square-root report for m = 1")
    rho, s = report_1.rho, report_1.s
    pv = family_at(model, 0, rho)
    d1, d2 = pv.dF[0], pv.d2F[0]
    d3 = model.phi(s + pv.F[0], 2)
    mu = s / (s + rho * d1)
    num = rho * (d2 * d3 * rho * s * s + d1 * d1 * d3 * rho * s + d1 * d3 * s * s - d1 * d1)
    sigma2 = num / ((d1 * rho + s) ** 3 * d3)
    return SizeLaw(d1, d2, d3, mu, sigma2)


# --------------------------------------------------------------------------
# full binary trees: algebraic checks

_P1 = (16, 0, 24, 0, -3)
_P2 = (256, 0, 2816, 0, -32, 0, 6384, 0, -343)
_P3 = (
    65536, 0, 5111808, 0, 70434816, 0, -785866752, 0, 206968320, 0,
    10195628544, 0, -16526908224, 0, 7520519520, 0, -176201487,
)


def _horner(coeffs, x):
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def verify_polynomials(r1: SingularityReport, r2: SingularityReport, r3: SingularityReport):
    """Residuals of the minimal polynomials of ``rho_1, rho_2, rho_3`` (full binary trees).

    The first two are absolute; the third is divided by its leading coefficient.
    """
    return (
        abs(_horner(_P1, r1.rho)),
        abs(_horner(_P2, r2.rho)),
        abs(_horner(_P3, r3.rho)) / _P3[0],
    )

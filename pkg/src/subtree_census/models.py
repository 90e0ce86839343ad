"""Weight models (generators) for simply generated trees.

A model is a weight sequence ``w_0, w_1, ...`` with generator
``Phi(z) = sum_k w_k z**k``.  Four families are supported:

* ``finite``    -- a finite list of nonnegative weights (``binary-full`` is ``1, 0, 1``);
* ``geometric`` -- all weights one, ``Phi(z) = 1/(1-z)`` (uniform plane trees);
* ``exponential`` -- ``w_k = 1/k!``, ``Phi(z) = exp(z)`` (Poisson offspring);
* ``zeta4``     -- ``Phi(z) = a + (1-a)/zeta(4) * sum_{k>=1} z**k / k**4``, a family
  whose derivative stays finite at the radius of convergence.

Weights are raw; they are never normalised to a probability law here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Optional

import mpmath
import numpy as np

__all__ = [
    "OffspringModel",
    "AdmissibilityReport",
    "ModelSpecError",
    "parse_model",
    "phi_eval",
    "validate_admissibility",
    "zeta3",
    "zeta4",
    "a0_threshold",
]


class ModelSpecError(ValueError):
    """Raised for malformed or inadmissible model specifications."""


def _zeta_direct(s: int, cutoff: int = 2000) -> float:
    # Direct sum plus Euler-Maclaurin tail; remainder below 1e-25 for s >= 3.
    head = math.fsum(k ** -float(s) for k in range(cutoff - 1, 0, -1))
    K = float(cutoff)
    tail = (
        K ** (1 - s) / (s - 1)
        + 0.5 * K ** -s
        + s * K ** (-s - 1) / 12.0
        - s * (s + 1) * (s + 2) * K ** (-s - 3) / 720.0
    )
    return head + tail


_ZETA3 = _zeta_direct(3)
_ZETA4 = math.pi ** 4 / 90.0


def zeta3() -> float:
    return _ZETA3


def zeta4() -> float:
    return _ZETA4


def a0_threshold() -> float:
    """Upper end of the zeta4 parameter range for which ``nu > 1``."""
    return 1.0 - _ZETA4 / _ZETA3


def _falling(k: int, p: int) -> int:
    out = 1
    for i in range(p):
        out *= k - i
    return out


def _stirling1_signed(p: int) -> list[int]:
    # s(p, j) for j = 0..p
    row = [1]
    for n in range(p):
        nxt = [0] * (len(row) + 1)
        for j, c in enumerate(row):
            nxt[j + 1] += c
            nxt[j] -= n * c
        row = nxt
    return row


@dataclass(frozen=True)
class OffspringModel:
    """A weight model for simply generated trees.

    ``kind`` is one of ``finite``, ``geometric``, ``exponential``, ``zeta4``.
    ``weights`` holds exact rationals for the finite kind; ``a`` is the zeta4
    parameter.  ``name`` is the spec text the model was parsed from.
    """

    kind: str
    weights: tuple = ()
    a: Optional[float] = None
    name: str = ""
    radius: float = field(init=False)
    span: int = field(init=False)

    def __post_init__(self):
        if self.kind == "finite":
            w = self.weights
            if not w or any(x < 0 for x in w):
                raise ModelSpecError("weights must be nonnegative")
            if w[0] <= 0:
                raise ModelSpecError("w0 must be positive")
            if not any(x > 0 for x in w[2:]):
                raise ModelSpecError("need a positive weight w_k with k >= 2")
            radius = math.inf
            span = reduce(math.gcd, [k for k in range(1, len(w)) if w[k] > 0])
        elif self.kind in ("geometric", "zeta4", "exponential"):
            if self.kind == "zeta4" and not (self.a is not None and 0 < self.a < 1):
                raise ModelSpecError("zeta4 parameter a must lie in (0, 1)")
            radius = math.inf if self.kind == "exponential" else 1.0
            span = 1
        else:
            raise ModelSpecError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "radius", radius)
        object.__setattr__(self, "span", span)

    # -- weight sequence -------------------------------------------------

    @property
    def degree(self) -> Optional[int]:
        """Largest k with w_k > 0, or None when the support is infinite."""
        if self.kind == "finite":
            return max(k for k, x in enumerate(self.weights) if x > 0)
        return None

    @property
    def is_rational(self) -> bool:
        return self.kind != "zeta4"

    def weight(self, k: int, exact: bool = False):
        """Weight ``w_k``; a Fraction when ``exact`` (not available for zeta4)."""
        if k < 0:
            return 0
        if self.kind == "finite":
            x = self.weights[k] if k < len(self.weights) else Fraction(0)
            return Fraction(x) if exact else float(x)
        if self.kind == "geometric":
            return Fraction(1) if exact else 1.0
        if self.kind == "exponential":
            if exact:
                return Fraction(1, math.factorial(k))
            return 1.0 / math.factorial(k) if k <= 170 else math.exp(-math.lgamma(k + 1))
        if exact:
            raise ValueError("zeta4 weights are irrational")
        if k == 0:
            return self.a
        return (1.0 - self.a) / _ZETA4 / k ** 4

    # -- generator and derivatives --------------------------------------

    def phi(self, x: float, order: int = 0) -> float:
        return phi_eval(self, x, order)

    def phi_at_radius(self, order: int = 0) -> float:
        """``lim_{z -> R} Phi^(order)(z)``; may be ``inf``."""
        if math.isinf(self.radius):
            return math.inf
        if self.kind == "geometric":
            return math.inf
        # zeta4 at z = 1
        c = (1.0 - self.a) / _ZETA4
        if order == 0:
            return 1.0
        if order == 1:
            return c * _ZETA3
        if order == 2:
            return c * (math.pi ** 2 / 6.0 - _ZETA3)
        return math.inf

    def __str__(self):
        return self.name or self.kind


def _zeta4_direct(x: float, p: int, a: float) -> float:
    """Term-wise differentiated series sum_k (k)_p x^(k-p) / k^4, x <= 0.9."""
    c = (1.0 - a) / _ZETA4
    kmin = max(p, 1)
    total = 0.0
    start = kmin
    chunk = 256
    while True:
        k = np.arange(start, start + chunk, dtype=float)
        fall = np.ones_like(k)
        for i in range(p):
            fall *= k - i
        terms = fall * x ** (k - p) / k ** 4
        total += float(terms.sum())
        # ratio bound for the remaining tail: t_{k+1}/t_k <= x (K+1)/(K+1-p)
        K = start + chunk - 1
        q = x * (K + 1) / (K + 1 - p) if K + 1 > p else 1.0
        last = float(terms[-1])
        if q < 1.0:
            bound = last * q / (1.0 - q)
            if bound <= 1e-17 * max(total, 1e-300):
                break
        start += chunk
    out = c * total
    if p == 0:
        out += a
    return out


def _zeta4_polylog(x: float, p: int, a: float) -> float:
    # x^p D^p = sum_j s(p, j) theta^j and theta Li_s = Li_{s-1}
    c = (1.0 - a) / _ZETA4
    s = _stirling1_signed(p)
    with mpmath.workdps(30):
        acc = mpmath.mpf(0)
        for j, coeff in enumerate(s):
            if coeff:
                acc += coeff * mpmath.polylog(4 - j, x)
        val = float(acc / mpmath.mpf(x) ** p)
    out = c * val
    if p == 0:
        out += a
    return out


def phi_eval(model: OffspringModel, x: float, order: int = 0) -> float:
    """Evaluate ``Phi^(order)(x)`` for ``0 <= x < R``.

    zeta4 also accepts ``x == 1`` for orders where the series converges there.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if x < 0:
        raise ValueError("x must be nonnegative")
    R = model.radius
    if x >= R:
        if model.kind == "zeta4" and x == R:
            val = model.phi_at_radius(order)
            if math.isfinite(val):
                return val
        raise ValueError(f"x={x} outside the disc of convergence (R={R})")
    if model.kind == "finite":
        w = model.weights
        acc = 0.0
        for k in range(len(w) - 1, order - 1, -1):
            acc = acc * x + float(w[k]) * _falling(k, order)
        return acc
    if model.kind == "geometric":
        return math.factorial(order) / (1.0 - x) ** (order + 1)
    if model.kind == "exponential":
        return math.exp(x)
    if x <= 0.9:
        return _zeta4_direct(x, order, model.a)
    return _zeta4_polylog(x, order, model.a)


def _parse_decimal(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelSpecError(f"bad decimal {text!r}") from exc


def parse_model(spec: str) -> OffspringModel:
    """Parse a model spec string.

    Grammar: ``binary-full`` | ``catalan`` | ``poisson`` | ``zeta4:a=<decimal>``
    | ``weights:<w0>,<w1>,...,<wK>``.

    >>> parse_model("binary-full").span
    2
    """
    spec = spec.strip()
    if spec == "binary-full":
        return OffspringModel("finite", (Fraction(1), Fraction(0), Fraction(1)), name=spec)
    if spec == "catalan":
        return OffspringModel("geometric", name=spec)
    if spec == "poisson":
        return OffspringModel("exponential", name=spec)
    if spec.startswith("zeta4:"):
        rest = spec[len("zeta4:"):]
        if not rest.startswith("a="):
            raise ModelSpecError("expected zeta4:a=<decimal>")
        a = float(_parse_decimal(rest[2:]))
        return OffspringModel("zeta4", a=a, name=spec)
    if spec.startswith("weights:"):
        parts = spec[len("weights:"):].split(",")
        w = tuple(_parse_decimal(p) for p in parts)
        while len(w) > 1 and w[-1] == 0:
            w = w[:-1]
        if all(x == 0 for x in w):
            raise ModelSpecError("all weights are zero")
        return OffspringModel("finite", w, name=spec)
    raise ModelSpecError(f"unrecognised model spec {spec!r}")


@dataclass(frozen=True)
class AdmissibilityReport:
    radius: float
    nu: float
    philm_holds: bool
    philmx_holds: bool
    span: int


def _nu(model: OffspringModel) -> float:
    if model.kind == "finite":
        # z Phi'/Phi -> K as z -> inf for a degree-K polynomial
        return float(model.degree)
    if model.kind in ("geometric", "exponential"):
        return math.inf
    # zeta4: monotone limit at z = 1 where Phi(1) = 1
    return model.phi_at_radius(1) / model.phi_at_radius(0)


def validate_admissibility(model: OffspringModel) -> AdmissibilityReport:
    """Check ``lim z Phi'(z)/Phi(z) > 1`` and ``Phi'(R) = inf`` at the radius."""
    nu = _nu(model)
    philmx = math.isinf(model.radius) or math.isinf(model.phi_at_radius(0)) or math.isinf(
        model.phi_at_radius(1)
    )
    return AdmissibilityReport(
        radius=model.radius,
        nu=nu,
        philm_holds=nu > 1,
        philmx_holds=philmx,
        span=model.span,
    )

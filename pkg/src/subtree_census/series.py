"""Truncated power series for subtree-counting generating functions.

Every series here is solved by a forward coefficient recurrence.  Each
defining equation carries a factor ``z`` in front of everything that refers
back to the series being defined, so coefficient ``n`` only needs
coefficients ``< n`` of the whole system.  Series are built as a graph of
lazily extended nodes (sums, products, ``z``-shifts, ``Phi^(p)`` composed with
a series) and extended one index at a time, in creation order.

Families computed:

* ``F_m = z Phi(FF_m)``, ``FF_m = sum_k C(m,k) F_k``: weighted sums of ``R(T)^m``;
* ``G_{m,l}``: weighted sums of ``S(T)^m R(T)^l``;
* ``d/du F_1(z,u)`` and ``d^2/du^2 F_1(z,u)`` at ``u = 1``: factorial moments of
  the size of a uniformly chosen root subtree.

Scalar kinds: ``rational`` (Fraction, exact), ``float`` (float64) and
``wide`` (mpmath numbers at 53 bits, with unbounded exponent, for orders
where float64 would overflow).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as _iproduct
from math import comb
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .models import OffspringModel

__all__ = [
    "TruncatedSeries",
    "SeriesFamily",
    "MixedFamily",
    "BivariateDerivatives",
    "SeriesError",
    "compute_F_family",
    "compute_G_family",
    "compute_bivariate",
    "exact_moment",
    "exact_mixed_moment",
    "compositions",
]

SCALAR_KINDS = ("rational", "float", "wide")


class SeriesError(ValueError):
    pass


# --------------------------------------------------------------------------
# scalar rings


class _Ring:
    def __init__(self, kind: str):
        if kind not in SCALAR_KINDS:
            raise SeriesError(f"unknown scalar kind {kind!r}")
        self.kind = kind
        if kind == "rational":
            self.zero, self.one = Fraction(0), Fraction(1)
        elif kind == "float":
            self.zero, self.one = 0.0, 1.0
        else:
            self.zero, self.one = mpmath.mpf(0), mpmath.mpf(1)

    def scalar(self, x):
        if self.kind == "rational":
            return Fraction(x)
        if self.kind == "float":
            return float(x)
        return mpmath.mpf(x)

    def weight(self, model: OffspringModel, k: int):
        if self.kind == "rational":
            return model.weight(k, exact=True)
        if self.kind == "wide" and model.is_rational:
            w = model.weight(k, exact=True)
            return mpmath.mpf(w.numerator) / w.denominator
        return self.scalar(model.weight(k))

    def storage(self, size: int):
        if self.kind == "float":
            return np.zeros(size)
        return [self.zero] * size

    def conv(self, x, y, j: int):
        """``sum_{i=0}^{j} x[i] y[j-i]``"""
        if self.kind == "float":
            return float(np.dot(x[: j + 1], y[j::-1]))
        acc = self.zero
        for i in range(j + 1):
            xi = x[i]
            if xi:
                acc += xi * y[j - i]
        return acc


# --------------------------------------------------------------------------
# lazy series graph


class _Node:
    def __init__(self, ws: "_Workspace"):
        self.ws = ws
        self.c = ws.ring.storage(ws.N + 1)
        self.known = 0
        ws.nodes.append(self)

    def __getitem__(self, j: int):
        while self.known <= j:
            self.c[self.known] = self.compute(self.known)
            self.known += 1
        return self.c[j]

    def compute(self, j: int):
        raise NotImplementedError


class _Linear(_Node):
    def __init__(self, ws, terms):
        super().__init__(ws)
        self.terms = [(ws.ring.scalar(a), s) for a, s in terms if a]

    def compute(self, j):
        acc = self.ws.ring.zero
        for a, s in self.terms:
            acc += a * s[j]
        return acc


class _Product(_Node):
    def __init__(self, ws, x, y):
        super().__init__(ws)
        self.x, self.y = x, y

    def compute(self, j):
        self.x[j]
        self.y[j]
        return self.ws.ring.conv(self.x.c, self.y.c, j)


class _Shift(_Node):
    """``z * x``"""

    def __init__(self, ws, x):
        super().__init__(ws)
        self.x = x

    def compute(self, j):
        return self.x[j - 1] if j > 0 else self.ws.ring.zero


class _Const(_Node):
    def __init__(self, ws, value):
        super().__init__(ws)
        self.value = ws.ring.scalar(value)

    def compute(self, j):
        return self.value if j == 0 else self.ws.ring.zero


class _Fixed(_Node):
    """A series defined by an expression that may refer back to it."""

    def __init__(self, ws):
        super().__init__(ws)
        self.expr = None

    def bind(self, expr):
        self.expr = expr

    def compute(self, j):
        return self.expr[j]


class _Powers:
    """Online powers ``A^0, A^1, ...`` of a series with ``A[0] = 0``."""

    def __init__(self, ws, A):
        self.ws, self.A = ws, A
        self.pw = [_Const(ws, 1), A]

    def get(self, e: int):
        while len(self.pw) <= e:
            self.pw.append(_Product(self.ws, self.pw[-1], self.A))
        return self.pw[e]


class _PhiCompose(_Node):
    """``Phi^(p)(A)`` for a series ``A`` with zero constant term."""

    def __init__(self, ws, p: int, powers: _Powers):
        super().__init__(ws)
        self.p = p
        self.powers = powers
        K = ws.degree
        top = ws.N + p if K is None else K
        ring = ws.ring
        # coefficient of A^e in Phi^(p)(A) is w_{e+p} (e+p)_p
        self.coef = [
            ring.weight(ws.model, e + p) * math.perm(e + p, p) for e in range(top - p + 1)
        ]
        # only powers that can appear below order N are materialised
        for e in range(min(len(self.coef) - 1, ws.N) + 1):
            powers.get(e)

    def compute(self, j):
        ring = self.ws.ring
        acc = ring.zero
        # A^e has valuation e
        for e in range(min(j, len(self.coef) - 1) + 1):
            a = self.coef[e]
            if a:
                acc += a * self.powers.get(e)[j]
        return acc


class _Workspace:
    def __init__(self, model: OffspringModel, N: int, kind: str):
        self.model = model
        self.N = N
        self.ring = _Ring(kind)
        if kind == "rational" and not model.is_rational:
            raise SeriesError(f"model {model} has irrational weights; use kind='float'")
        self.degree = model.degree
        self.nodes: List[_Node] = []
        self._powers: Dict[int, _Powers] = {}
        self._compose: Dict[tuple, _PhiCompose] = {}

    def powers(self, series) -> _Powers:
        key = id(series)
        if key not in self._powers:
            self._powers[key] = _Powers(self, series)
        return self._powers[key]

    def phi(self, p: int, series) -> _PhiCompose:
        key = (p, id(series))
        if key not in self._compose:
            self._compose[key] = _PhiCompose(self, p, self.powers(series))
        return self._compose[key]

    def run(self, upto: Optional[int] = None):
        top = self.N if upto is None else upto
        for j in range(top + 1):
            # creation order keeps recursion shallow: inputs at j-1 are cached
            for node in list(self.nodes):
                node[j]


# --------------------------------------------------------------------------
# public containers


@dataclass(frozen=True)
class TruncatedSeries:
    coeffs: tuple
    scalar_kind: str

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, z: float) -> float:
        """Partial sum at ``z`` (float), Horner from the top."""
        if self.scalar_kind == "wide":
            # coefficients may exceed the float range while the sum does not
            acc = mpmath.mpf(0)
            for c in reversed(self.coeffs):
                acc = acc * z + c
            return float(acc)
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * z + float(c)
        return acc

    def as_floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])


def _freeze(node: _Node, N: int, kind: str) -> TruncatedSeries:
    return TruncatedSeries(tuple(node[j] for j in range(N + 1)), kind)


@dataclass
class SeriesFamily:
    """``F_0..F_M``, their binomial sums ``FF_m`` and ``H_m = FF_m - F_m``."""

    model: OffspringModel
    order: int
    max_m: int
    scalar_kind: str
    F: List[TruncatedSeries]
    FF: List[TruncatedSeries]
    H: List[TruncatedSeries]
    _ws: _Workspace = field(repr=False, default=None)
    _F_nodes: list = field(repr=False, default=None)
    _FF_nodes: list = field(repr=False, default=None)


def compute_F_family(model: OffspringModel, M: int, N: int, scalar_kind: str = "float") -> SeriesFamily:
    """Solve ``F_m = z Phi(sum_k C(m,k) F_k)`` for ``m = 0..M`` to order ``N``."""
    if M < 0 or N < 1:
        raise SeriesError("need M >= 0 and N >= 1")
    ws = _Workspace(model, N, scalar_kind)
    F_nodes, FF_nodes, H_nodes = [], [], []
    for m in range(M + 1):
        Fm = _Fixed(ws)
        FF = _Linear(ws, [(comb(m, k), F_nodes[k]) for k in range(m)] + [(1, Fm)])
        H = _Linear(ws, [(comb(m, k), F_nodes[k]) for k in range(m)])
        Fm.bind(_Shift(ws, ws.phi(0, FF)))
        F_nodes.append(Fm)
        FF_nodes.append(FF)
        H_nodes.append(H)
    ws.run()
    return SeriesFamily(
        model=model,
        order=N,
        max_m=M,
        scalar_kind=scalar_kind,
        F=[_freeze(x, N, scalar_kind) for x in F_nodes],
        FF=[_freeze(x, N, scalar_kind) for x in FF_nodes],
        H=[_freeze(x, N, scalar_kind) for x in H_nodes],
        _ws=ws,
        _F_nodes=F_nodes,
        _FF_nodes=FF_nodes,
    )


def exact_moment(fam: SeriesFamily, m: int, n: int):
    """``E R(T_n)^m = F_m[n] / F_0[n]``; exact Fraction in rational mode."""
    if m > fam.max_m or n > fam.order:
        raise SeriesError("moment outside the computed family")
    den = fam.F[0][n]
    if not den:
        raise SeriesError(f"no tree of size {n} for {fam.model}")
    return fam.F[m][n] / den


# --------------------------------------------------------------------------
# mixed family G_{m,l}


def compositions(k: int, p: int):
    """Ordered tuples of ``p`` positive integers summing to ``k``."""
    if p == 1:
        if k >= 1:
            yield (k,)
        return
    for first in range(1, k - p + 2):
        for rest in compositions(k - first, p - 1):
            yield (first,) + rest


def _multinomial(parts) -> int:
    out = math.factorial(sum(parts))
    for q in parts:
        out //= math.factorial(q)
    return out


@dataclass
class MixedFamily:
    """``G[(m, l)]``: weighted sums of ``S(T)^m R(T)^l`` for ``m + l <= max_total``."""

    family: SeriesFamily
    max_total: int
    G: Dict[Tuple[int, int], TruncatedSeries]


def compute_G_family(fam: SeriesFamily, M_total: int, N: Optional[int] = None) -> MixedFamily:
    """All ``G_{m,l}`` with ``m + l <= M_total`` by the full combinatorial recursion.

    With ``T = m + l``, splitting on the number ``k`` of general subtrees not
    containing the root and on the ``p`` root children that receive them,

        G_{m,l} = F_T + sum_{k=1}^m C(m,k) sum_{p>=1} (z/p!)
                  sum_{k_1+..+k_p=k} multinomial(k; k_1..k_p)
                  prod_j [sum_{i=0}^{T-k} C(T-k,i) G_{k_j,i}] Phi^(p)(FF_{T-k}).
    """
    if fam.max_m < M_total:
        raise SeriesError("F family must be computed to order M_total")
    if N is not None and N > fam.order:
        raise SeriesError("N exceeds the family order")
    N = fam.order if N is None else N
    ws = fam._ws
    ring = ws.ring
    G: Dict[Tuple[int, int], _Node] = {}
    for l in range(M_total + 1):
        G[(0, l)] = fam._F_nodes[l]
    for T in range(1, M_total + 1):
        for m in range(1, T + 1):
            G[(m, T - m)] = _Fixed(ws)
    # inner sums  Q_{kj, r} = sum_i C(r, i) G_{kj, i}
    inner: Dict[Tuple[int, int], _Node] = {}

    def Q(kj, r):
        key = (kj, r)
        if key not in inner:
            inner[key] = _Linear(ws, [(comb(r, i), G[(kj, i)]) for i in range(r + 1)])
        return inner[key]

    for T in range(1, M_total + 1):
        for m in range(1, T + 1):
            l = T - m
            terms = [(1, fam._F_nodes[T])]
            for k in range(1, m + 1):
                r = T - k
                base = fam._FF_nodes[r]
                for p in range(1, k + 1):
                    for parts in compositions(k, p):
                        prod = ws.phi(p, base)
                        for kj in parts:
                            prod = _Product(ws, prod, Q(kj, r))
                        coeff = Fraction(comb(m, k) * _multinomial(parts), math.factorial(p))
                        if ring.kind != "rational":
                            coeff = float(coeff)
                        terms.append((coeff, _Shift(ws, prod)))
            G[(m, l)].bind(_Linear(ws, terms))
    ws.run(N)
    kind = fam.scalar_kind
    return MixedFamily(fam, M_total, {key: _freeze(node, N, kind) for key, node in G.items()})


def exact_mixed_moment(mix: MixedFamily, m: int, ell: int, n: int):
    """``E[S(T_n)^m R(T_n)^ell] = G_{m,ell}[n] / F_0[n]``."""
    if m + ell > mix.max_total:
        raise SeriesError("mixed moment outside the computed family")
    den = mix.family.F[0][n]
    if not den:
        raise SeriesError(f"no tree of size {n} for {mix.family.model}")
    return mix.G[(m, ell)][n] / den


# --------------------------------------------------------------------------
# bivariate F_1(z, u): root-subtree size


@dataclass
class BivariateDerivatives:
    """``F_1``, ``dF_1/du`` and ``d^2F_1/du^2`` at ``u = 1``."""

    F1: TruncatedSeries
    dF1_du: TruncatedSeries
    d2F1_du2: TruncatedSeries
    F0: TruncatedSeries

    def mean_size(self, n: int):
        """``E X_n`` for a uniformly random (tree, root subtree) pair of size ``n``."""
        return self.dF1_du[n] / self.F1[n]

    def factorial_moment2(self, n: int):
        return self.d2F1_du2[n] / self.F1[n]

    def variance_size(self, n: int):
        mu = self.mean_size(n)
        return self.factorial_moment2(n) + mu - mu * mu


def compute_bivariate(fam: SeriesFamily, N: Optional[int] = None) -> BivariateDerivatives:
    """u-derivatives at ``u = 1`` of ``Y = z u Phi(Y + F_0)``.

    Differentiating once and twice in ``u`` and setting ``u = 1``:

        A = F_1 + z Phi'(FF_1) A
        B = 2 z Phi'(FF_1) A + z Phi''(FF_1) A^2 + z Phi'(FF_1) B
    """
    if fam.max_m < 1:
        raise SeriesError("bivariate series need F_1")
    N = fam.order if N is None else N
    ws = fam._ws
    FF1 = fam._FF_nodes[1]
    d1 = ws.phi(1, FF1)
    d2 = ws.phi(2, FF1)
    A = _Fixed(ws)
    A.bind(_Linear(ws, [(1, fam._F_nodes[1]), (1, _Shift(ws, _Product(ws, d1, A)))]))
    B = _Fixed(ws)
    AA = _Product(ws, A, A)
    B.bind(
        _Linear(
            ws,
            [
                (2, _Shift(ws, _Product(ws, d1, A))),
                (1, _Shift(ws, _Product(ws, d2, AA))),
                (1, _Shift(ws, _Product(ws, d1, B))),
            ],
        )
    )
    ws.run(N)
    kind = fam.scalar_kind
    return BivariateDerivatives(
        F1=TruncatedSeries(fam.F[1].coeffs[: N + 1], kind),
        dF1_du=_freeze(A, N, kind),
        d2F1_du2=_freeze(B, N, kind),
        F0=TruncatedSeries(fam.F[0].coeffs[: N + 1], kind),
    )

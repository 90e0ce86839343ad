"""Exact samplers for conditioned and unconditioned Galton-Watson trees.

Weights are tilted to a probability law ``p_k = w_k b**k / Phi(b)``; the
conditioned tree of size ``n`` does not depend on ``b``.  Random streams are
numpy ``Philox`` (a counter-based generator) keyed by
``SeedSequence(seed, spawn_key=(stream_id,))``, so each ``(seed, stream_id)``
pair is reproducible bit for bit and distinct stream ids are independent.

Conditioned sampling:

1. draw the vector of degree *counts* ``(N_0, N_1, ...)`` of ``n`` i.i.d.
   degrees (a multinomial draw) and reject until ``sum_k k N_k = n - 1``;
2. lay the counts out in uniformly random order;
3. rotate to the unique valid Lukasiewicz word (cycle lemma).

Rejecting on the counts is the same event as rejecting the i.i.d. vector on
its sum, and given the counts an i.i.d. vector is a uniform arrangement, so
the output law equals plain rejection on i.i.d. degree vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import OffspringModel
from .trees import OrderedTree

__all__ = [
    "RngStream",
    "SamplerError",
    "TiltedLaw",
    "critical_tilt",
    "tilted_law",
    "cycle_lemma_rotate",
    "sample_conditioned",
    "sample_conditioned_batch",
    "sample_unconditioned",
    "sample_unconditioned_sizes",
]

# mass left in the explicit tail cell of the multinomial draw
_TAIL_MASS = 1e-12


class SamplerError(ValueError):
    pass


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, k: int) -> "RngStream":
        """Stream ``k`` below this one, for chunked parallel work."""
        return RngStream(self.seed, (self.stream_id << 20) + k + 1)


def _mean_ratio(model: OffspringModel, b: float) -> float:
    return b * model.phi(b, 1) / model.phi(b, 0)


def critical_tilt(model: OffspringModel) -> float:
    """Solve ``b Phi'(b) / Phi(b) = 1`` by bisection on ``(0, R)``."""
    lo = 0.0
    if math.isinf(model.radius):
        hi = 1.0
        while _mean_ratio(model, hi) < 1.0:
            hi *= 2.0
            if hi > 1e8:
                raise SamplerError("no critical tilt found")
    else:
        R = model.radius
        near = R * (1 - 1e-12)
        if _mean_ratio(model, near) < 1.0:
            raise SamplerError(f"model {model} admits no critical tilt")
        hi = near
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _mean_ratio(model, mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    return 0.5 * (lo + hi)


class TiltedLaw:
    """Offspring law ``p_k = w_k b**k / Phi(b)``."""

    def __init__(self, model: OffspringModel, b: float):
        self.model = model
        self.b = b
        self._norm = model.phi(b, 0)
        deg = model.degree
        if deg is not None:
            probs = [model.weight(k) * b ** k / self._norm for k in range(deg + 1)]
        else:
            probs = []
            acc = 0.0
            k = 0
            while True:
                p = self.pmf(k)
                probs.append(p)
                acc += p
                k += 1
                if k > 5 and 1.0 - acc < _TAIL_MASS and p < _TAIL_MASS:
                    break
        self.table = np.array(probs)
        self.finite = deg is not None
        self.tail = 0.0 if self.finite else max(0.0, 1.0 - float(self.table.sum()))

    def pmf(self, k: int) -> float:
        return self.model.weight(k) * self.b ** k / self._norm

    @property
    def mean(self) -> float:
        return self.b * self.model.phi(self.b, 1) / self._norm

    @property
    def variance(self) -> float:
        m = self.mean
        return self.b ** 2 * self.model.phi(self.b, 2) / self._norm + m - m * m

    def cell_probs(self) -> np.ndarray:
        if self.finite:
            p = self.table / self.table.sum()
            return p
        return np.append(self.table, self.tail) / (self.table.sum() + self.tail)

    def sample_tail(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw degrees conditioned to exceed the table range (inverse transform)."""
        K = len(self.table)
        out = np.empty(size, dtype=np.int64)
        for j in range(size):
            u = rng.random() * self.tail
            k = K
            acc = self.pmf(k)
            while acc < u and k < K + 100000:
                k += 1
                acc += self.pmf(k)
            out[j] = k
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        probs = self.cell_probs()
        cells = rng.choice(len(probs), size=size, p=probs)
        if not self.finite:
            hit = cells == len(self.table)
            if hit.any():
                cells[hit] = self.sample_tail(rng, int(hit.sum()))
        return cells.astype(np.int64)


def tilted_law(model: OffspringModel, critical: bool = True) -> TiltedLaw:
    """Tilted offspring law.  With ``critical=False`` any finite-mean tilt is accepted."""
    try:
        b = critical_tilt(model)
    except SamplerError:
        if critical:
            raise
        b = model.radius * 0.5 if math.isfinite(model.radius) else 1.0
    return TiltedLaw(model, b)


def cycle_lemma_rotate(degrees: np.ndarray) -> np.ndarray:
    """Rotate each row (degree sum ``n-1``) to its unique valid rotation.

    The walk ``sum (d_i - 1)`` ends at ``-1``; starting right after the first
    position where its running minimum is attained gives the valid word.
    """
    degrees = np.atleast_2d(np.asarray(degrees, dtype=np.int64))
    B, n = degrees.shape
    walk = np.cumsum(degrees - 1, axis=1)
    start = (np.argmin(walk, axis=1) + 1) % n
    idx = (start[:, None] + np.arange(n)[None, :]) % n
    return np.take_along_axis(degrees, idx, axis=1)


def _check_size(model: OffspringModel, n: int):
    if n < 1:
        raise SamplerError("n must be at least 1")
    if (n - 1) % model.span:
        raise SamplerError(
            f"no tree of size {n} exists for {model} (sizes are 1 mod {model.span})"
        )


def sample_conditioned_batch(
    model: OffspringModel, n: int, count: int, rng: RngStream | np.random.Generator,
    law: Optional[TiltedLaw] = None,
) -> np.ndarray:
    """``count`` independent conditioned trees of size ``n``, one per row."""
    _check_size(model, n)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if law is None:
        law = tilted_law(model, critical=False)
    probs = law.cell_probs()
    ncell = len(probs)
    degs_of_cell = np.arange(ncell)
    out = np.empty((count, n), dtype=np.int64)
    filled = 0
    # about sqrt(n) tries per accepted sample at criticality
    tries = max(16, int(4 * math.sqrt(n)) * max(1, count))
    while filled < count:
        batch = min(tries, 50000)
        counts = gen.multinomial(n, probs, size=batch)
        tails = [None] * batch
        sums = counts @ degs_of_cell
        if not law.finite:
            tail_cell = ncell - 1
            sums -= counts[:, tail_cell] * tail_cell
            for i in np.nonzero(counts[:, tail_cell])[0]:
                vals = law.sample_tail(gen, int(counts[i, tail_cell]))
                tails[i] = vals
                sums[i] += int(vals.sum())
        for i in np.nonzero(sums == n - 1)[0]:
            if filled == count:
                break
            c = counts[i].copy()
            if not law.finite:
                c[-1] = 0
            row = np.repeat(degs_of_cell, c)
            if tails[i] is not None:
                row = np.concatenate([row, tails[i]])
            out[filled] = row
            filled += 1
    gen.permuted(out, axis=1, out=out)
    return cycle_lemma_rotate(out)


def sample_conditioned(model: OffspringModel, n: int, rng: RngStream | np.random.Generator) -> OrderedTree:
    """One tree drawn with probability proportional to its weight among size-``n`` trees."""
    row = sample_conditioned_batch(model, n, 1, rng)[0]
    return OrderedTree(tuple(row.tolist()))


def _walk_unconditioned(law: TiltedLaw, gen: np.random.Generator, size_cap: int):
    # Lukasiewicz walk: the tree is complete when 1 + sum (d_i - 1) hits 0.
    parts = []
    height = 1
    total = 0
    chunk = 64
    while True:
        d = law.sample(gen, chunk)
        walk = height + np.cumsum(d - 1)
        hit = np.nonzero(walk == 0)[0]
        if hit.size:
            k = int(hit[0]) + 1
            parts.append(d[:k])
            total += k
            return np.concatenate(parts) if total <= size_cap else None
        parts.append(d)
        total += chunk
        height = int(walk[-1])
        if total > size_cap:
            return None
        chunk = min(2 * chunk, 1 << 16)


def sample_unconditioned(
    model: OffspringModel, rng: RngStream | np.random.Generator, size_cap: int,
    law: Optional[TiltedLaw] = None,
) -> Optional[OrderedTree]:
    """An unconditioned critical Galton-Watson tree, or ``None`` if it exceeds ``size_cap``."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if law is None:
        law = tilted_law(model, critical=True)
    degs = _walk_unconditioned(law, gen, size_cap)
    if degs is None:
        return None
    return OrderedTree(tuple(degs.tolist()))


def sample_unconditioned_sizes(model: OffspringModel, rng: RngStream, count: int, size_cap: int) -> np.ndarray:
    """Sizes of ``count`` unconditioned trees (``size_cap + 1`` marks censored)."""
    gen = rng.generator()
    law = tilted_law(model, critical=True)
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        degs = _walk_unconditioned(law, gen, size_cap)
        out[i] = size_cap + 1 if degs is None else len(degs)
    return out

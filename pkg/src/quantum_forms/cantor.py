"""Cantorian dimension arithmetic and a random Cantor set with box counting."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DegenerateInterval

PHI = (np.sqrt(5.0) - 1.0) / 2.0
MIN_DEPTH, MAX_DEPTH = 8, 20
_MAX_RESAMPLE = 100
# pieces narrower than this are left unsplit; they lie far below any box size used
FROZEN_WIDTH = 1e-12


@dataclass(frozen=True)
class CantorBackbone:
    d0: float

    def __post_init__(self):
        if not 0.5 <= self.d0 < 1.0:
            raise ValueError("backbone dimension must lie in [1/2, 1)")


def _d0(b) -> float:
    return b.d0 if isinstance(b, CantorBackbone) else CantorBackbone(float(b)).d0


def cantor_dimension(b, n: int) -> float:
    """d_c^(n) = 1 / d0^(n-1); n may be any integer."""
    return float(_d0(b) ** (1 - int(n)))


@dataclass(frozen=True)
class Averages:
    n_avg: float
    d_avg: float
    n_avg_gamma: float  # -2 / log d0


def averages(b) -> Averages:
    """n_avg = (1 + d0)/(1 - d0) and d_avg = 1/(d0 (1 - d0))."""
    d = _d0(b)
    return Averages((1 + d) / (1 - d), 1 / (d * (1 - d)), -2 / np.log(d))


def average_gap(d0) -> np.ndarray:
    """n_avg - d_avg = (d0^2 + d0 - 1) / (d0 (1 - d0)), vectorized over d0."""
    d = np.asarray(d0, dtype=float)
    return (d ** 2 + d - 1) / (d * (1 - d))


@dataclass(frozen=True)
class GoldenReport:
    quadratic: float         # phi^2 + phi - 1
    reciprocal: float        # (1 + phi) - 1/phi
    d_avg_vs_cube: float     # 1/(phi(1-phi)) - (4 + phi^3)
    cube_vs_inverse: float   # 1/phi^3 - (4 + phi^3)
    value: float             # 4 + phi^3

    def holds(self, tol: float = 1e-14) -> bool:
        return all(abs(v) <= tol * max(1.0, self.value) for v in
                   (self.quadratic, self.reciprocal, self.d_avg_vs_cube, self.cube_vs_inverse))


def golden_identities() -> GoldenReport:
    p = PHI
    target = 4 + p ** 3
    return GoldenReport(p * p + p - 1, (1 + p) - 1 / p, 1 / (p * (1 - p)) - target,
                        1 / p ** 3 - target, target)


# ------------------------------------------------------------- random Cantor sets

@dataclass(frozen=True, eq=False)
class IntervalSet:
    intervals: np.ndarray  # (k, 2) sorted, disjoint
    depth: int
    seed: int = -1
    resampled: int = 0

    def __post_init__(self):
        iv = np.array(self.intervals, dtype=float, copy=True).reshape(-1, 2)
        if np.any(iv[:, 1] <= iv[:, 0]):
            raise DegenerateInterval("interval with right <= left")
        if iv.shape[0] > 1 and np.any(iv[1:, 0] <= iv[:-1, 1]):
            raise ValueError("intervals must be sorted and pairwise disjoint")
        iv.flags.writeable = False
        object.__setattr__(self, "intervals", iv)

    def __len__(self):
        return self.intervals.shape[0]

    @property
    def measure(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))


def _check_depth(depth: int) -> None:
    if not MIN_DEPTH <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must lie in [{MIN_DEPTH}, {MAX_DEPTH}]")


def _refine(iv: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    a, w = iv[:, 0], iv[:, 1] - iv[:, 0]
    left = np.stack([a, a + x * w], axis=1)
    right = np.stack([a + y * w, a + w], axis=1)
    return np.stack([left, right], axis=1).reshape(-1, 2)


def _degenerate(iv: np.ndarray) -> np.ndarray:
    """Pieces too narrow to be distinguished from their endpoints in float64."""
    width = iv[:, 1] - iv[:, 0]
    return width <= 4 * np.spacing(np.maximum(np.abs(iv[:, 0]), np.abs(iv[:, 1])))


def random_cantor(seed: int, depth: int) -> IntervalSet:
    """Keep [0, x] and [y, 1] (rescaled) of every interval, x ~ U(0,1), y ~ U(x,1).

    Draws that would leave a kept piece below float resolution, or that
    touch (x = y), are redrawn; the number of redraws is recorded.  Pieces
    narrower than ``FROZEN_WIDTH`` are carried to the next level unsplit.
    """
    _check_depth(depth)
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    iv = np.array([[0.0, 1.0]])
    redraws = 0
    for _ in range(depth):
        active = (iv[:, 1] - iv[:, 0]) > FROZEN_WIDTH
        parents = iv[active]
        k = parents.shape[0]
        x = gen.random(k)
        y = x + (1 - x) * gen.random(k)
        for _attempt in range(_MAX_RESAMPLE):
            pieces = _refine(parents, x, y)
            bad = _degenerate(pieces).reshape(k, 2).any(axis=1)
            bad |= pieces[1::2, 0] <= pieces[0::2, 1]
            if not bad.any():
                break
            nb = int(bad.sum())
            redraws += nb
            x[bad] = gen.random(nb)
            y[bad] = x[bad] + (1 - x[bad]) * gen.random(nb)
        else:
            raise DegenerateInterval("could not draw a non-degenerate split")
        iv = np.concatenate([pieces, iv[~active]])
        iv = iv[np.argsort(iv[:, 0], kind="stable")]
    return IntervalSet(iv, depth, seed, redraws)


def middle_third_cantor(depth: int) -> IntervalSet:
    _check_depth(depth)
    iv = np.array([[0.0, 1.0]])
    for _ in range(depth):
        k = iv.shape[0]
        iv = _refine(iv, np.full(k, 1 / 3), np.full(k, 2 / 3))
    return IntervalSet(iv, depth)


def full_interval(depth: int) -> IntervalSet:
    """Control set with nothing deleted: the unit interval itself."""
    _check_depth(depth)
    return IntervalSet(np.array([[0.0, 1.0]]), depth)


# ------------------------------------------------------------------ box counting

def box_count(s: IntervalSet, eps: float) -> int:
    """Number of boxes [j eps, (j+1) eps) meeting the set."""
    iv = s.intervals
    start = np.floor(iv[:, 0] / eps).astype(np.int64)
    end = np.floor(np.nextafter(iv[:, 1], -np.inf) / eps).astype(np.int64)
    prev = np.concatenate([[-1], np.maximum.accumulate(end)[:-1]])
    first = np.maximum(start, prev + 1)
    return int(np.sum(np.clip(end - first + 1, 0, None)))


@dataclass(frozen=True, eq=False)
class BoxDimension:
    slope: float
    stderr: float
    eps: np.ndarray
    counts: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epsilon", "count"])
            for e, c in zip(self.eps, self.counts):
                w.writerow([repr(float(e)), int(c)])


def default_octaves(s: IntervalSet) -> Tuple[int, int]:
    """Dyadic exponents (j_min, j_max) for the fit.

    Coarse end: 2^-2.  Fine end: the largest j whose box count stays below a
    quarter of 2^depth (the number of pieces the construction produces), so
    the finite depth does not saturate the count.
    """
    limit = 2.0 ** s.depth / 4
    j = 2
    while j < 60 and box_count(s, 2.0 ** -(j + 1)) <= limit:
        j += 1
    return 2, max(j, 6)


def box_dimension(s: IntervalSet, j_min: int = None, j_max: int = None) -> BoxDimension:
    """Least-squares slope of log N(eps) against log(1/eps), eps = 2^-j.

    The fit must span at least 4 octaves.  ``stderr`` is the ordinary
    least-squares standard error of the slope.
    """
    lo, hi = default_octaves(s)
    j_min = lo if j_min is None else j_min
    j_max = hi if j_max is None else j_max
    if j_max - j_min < 4:
        raise ValueError("box counting needs at least 4 octaves")
    js = np.arange(j_min, j_max + 1)
    eps = 2.0 ** -js
    counts = np.array([box_count(s, e) for e in eps])
    X = np.log(1 / eps)
    Y = np.log(counts)
    A = np.vstack([X, np.ones_like(X)]).T
    coef, res, _, _ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    dof = max(len(X) - 2, 1)
    se = np.sqrt(np.sum(resid ** 2) / dof / np.sum((X - X.mean()) ** 2))
    return BoxDimension(float(coef[0]), float(se), eps, counts)

"""The catalog of measurable maps and exact orbit iteration.

All arithmetic is plain IEEE double precision.  The numpy path (:func:`apply`,
:func:`apply_many`) and the compiled path used for long orbits perform the same
operations in the same order, so orbits agree bit for bit with repeated
application of :func:`apply`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ergodec.measure import ONE, as_points

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

ROTATION, DOUBLING, SKEW, CAT, SQUARING = range(5)
_CODES = {"rotation": ROTATION, "doubling": DOUBLING, "skew": SKEW, "cat": CAT, "squaring": SQUARING}
_DIMS = {ROTATION: 1, DOUBLING: 1, SKEW: 2, CAT: 2, SQUARING: 1}

CATALOG = {
    "rotation": "x -> x + alpha mod 1 on the circle (default alpha: golden mean)",
    "doubling": "x -> 2x mod 1 on the circle",
    "skew": "(x, y) -> (x, y + alpha*x mod 1) on the torus, alpha a positive integer",
    "cat": "(x, y) -> (2x + y, x + y) mod 1 on the torus",
    "squaring": "x -> x^2 on [0,1) together with the fixed point ONE",
}


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in _CODES:
            raise ValueError(f"unknown system {self.kind!r}; choose from {sorted(_CODES)}")
        if self.kind == "rotation" and not 0.0 < self.alpha < 1.0:
            raise ValueError("rotation angle must lie in (0, 1)")
        if self.kind == "skew" and (self.alpha < 1 or self.alpha != int(self.alpha)):
            raise ValueError("skew product parameter must be a positive integer")

    @classmethod
    def rotation(cls, alpha: float = GOLDEN) -> SystemSpec:
        return cls("rotation", alpha)

    @classmethod
    def doubling(cls) -> SystemSpec:
        return cls("doubling")

    @classmethod
    def skew_product(cls, alpha: int = 1) -> SystemSpec:
        return cls("skew", float(alpha))

    @classmethod
    def cat_map(cls) -> SystemSpec:
        return cls("cat")

    @classmethod
    def squaring(cls) -> SystemSpec:
        return cls("squaring")

    @property
    def code(self) -> int:
        return _CODES[self.kind]

    @property
    def dim(self) -> int:
        return _DIMS[self.code]

    def __call__(self, x):
        return apply(self, x)


def _wrap(y: np.ndarray) -> np.ndarray:
    r = y - np.floor(y)
    r[r >= 1.0] = 0.0
    return r


def apply_many(sys: SystemSpec, points) -> np.ndarray:
    """Apply the map to every row of an ``(n, d)`` array."""
    pts = as_points(points, sys.dim)
    code, a = sys.code, sys.alpha
    if code == ROTATION:
        return _wrap(pts + a)
    if code == DOUBLING:
        return _wrap(2.0 * pts)
    if code == SQUARING:
        return pts * pts
    x, y = pts[:, 0], pts[:, 1]
    if code == SKEW:
        return np.stack([x.copy(), _wrap(y + a * x)], axis=1)
    return np.stack([_wrap(2.0 * x + y), _wrap(x + y)], axis=1)


def apply(sys: SystemSpec, x) -> np.ndarray:
    """Image of a single point, as a length-d array."""
    return apply_many(sys, as_points(x, sys.dim)[:1])[0]


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _wrap1(y):
    r = y - math.floor(y)
    if r >= 1.0:
        r = 0.0
    return r


@numba.njit(cache=True)
def _step(code, a, x, out):
    if code == ROTATION:
        out[0] = _wrap1(x[0] + a)
    elif code == DOUBLING:
        out[0] = _wrap1(2.0 * x[0])
    elif code == SQUARING:
        out[0] = x[0] * x[0]
    elif code == SKEW:
        out[0] = x[0]
        out[1] = _wrap1(x[1] + a * x[0])
    else:
        u = _wrap1(2.0 * x[0] + x[1])
        out[1] = _wrap1(x[0] + x[1])
        out[0] = u


@numba.njit(cache=True)
def _orbit_kernel(code, a, x0, n, out):
    out[0, :] = x0
    for i in range(1, n):
        _step(code, a, out[i - 1], out[i])


@numba.njit(cache=True)
def _visit_kernel(code, a, starts, n, lo, hi, owner, n_sets, one_sets, tail_from):
    """Visit counts of every orbit to every set, with tail frequency brackets.

    Sets are unions of disjoint boxes ``lo[m] <= x < hi[m]`` tagged by ``owner``;
    ``one_sets[k]`` marks sets that contain ONE.  Frequencies at prefix lengths
    ``>= tail_from`` feed the min/max brackets.
    """
    n_starts, dim = starts.shape
    n_boxes = lo.shape[0]
    counts = np.zeros((n_starts, n_sets), dtype=np.int64)
    tmin = np.full((n_starts, n_sets), np.inf)
    tmax = np.full((n_starts, n_sets), -np.inf)
    cur = np.empty(dim)
    nxt = np.empty(dim)
    hit = np.zeros(n_sets, dtype=np.bool_)
    for s in range(n_starts):
        cur[:] = starts[s]
        for i in range(n):
            hit[:] = False
            is_one = dim == 1 and cur[0] == 1.0
            for m in range(n_boxes):
                inside = True
                for ax in range(dim):
                    if not (lo[m, ax] <= cur[ax] < hi[m, ax]):
                        inside = False
                        break
                if inside:
                    hit[owner[m]] = True
            for k in range(n_sets):
                if hit[k] or (is_one and one_sets[k]):
                    counts[s, k] += 1
            if i + 1 >= tail_from:
                for k in range(n_sets):
                    f = counts[s, k] / (i + 1)
                    if f < tmin[s, k]:
                        tmin[s, k] = f
                    if f > tmax[s, k]:
                        tmax[s, k] = f
            if i + 1 < n:
                _step(code, a, cur, nxt)
                cur[:] = nxt
    return counts, tmin, tmax


def orbit(sys: SystemSpec, x, n: int) -> np.ndarray:
    """The first ``n`` orbit points x, f(x), ..., f^{n-1}(x) as an ``(n, d)`` array."""
    if n < 1:
        raise ValueError("orbit length must be at least 1")
    x0 = as_points(x, sys.dim)[0]
    out = np.empty((n, sys.dim))
    _orbit_kernel(sys.code, float(sys.alpha), x0, n, out)
    return out


def visit_counts(sys: SystemSpec, starts, sets, n: int, tail_from: int | None = None):
    """Count visits of the length-``n`` orbits of ``starts`` to each set.

    Returns ``(counts, tail_min, tail_max)``, arrays of shape (n_starts, n_sets).
    ``sets`` is a sequence of :class:`~ergodec.measure.MeasurableSet`.
    """
    if n < 1:
        raise ValueError("orbit length must be at least 1")
    pts = np.ascontiguousarray(as_points(starts, sys.dim))
    lo, hi, owner = [], [], []
    for k, e in enumerate(sets):
        if e.dim != sys.dim:
            raise ValueError("set dimension does not match the system")
        for box in e.boxes:
            lo.append([b[0] for b in box])
            hi.append([b[1] for b in box])
            owner.append(k)
    lo_a = np.array(lo, dtype=float).reshape(-1, sys.dim)
    hi_a = np.array(hi, dtype=float).reshape(-1, sys.dim)
    one_sets = np.array([e.include_one for e in sets], dtype=np.bool_)
    tail = n - n // 2 if tail_from is None else tail_from
    return _visit_kernel(
        sys.code, float(sys.alpha), pts, n, lo_a, hi_a,
        np.array(owner, dtype=np.int64), len(sets), one_sets, max(1, tail),
    )


__all__ = [
    "GOLDEN", "ONE", "CATALOG", "SystemSpec", "apply", "apply_many", "orbit", "visit_counts",
]

"""Atomic probability measures on [0,1)^d and a finite box algebra of sets.

Points are rows of a float array of shape ``(n, d)`` with every coordinate in
``[0, 1)``.  In dimension one the state space additionally carries the
distinguished point ``ONE`` (stored as the float ``1.0``), which is what the
squaring map needs to keep the fixed point 1 exactly.  ``ONE`` never lies in a
half-open box, so it sits in its own cell of every dyadic partition.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from ergodec.systems import SystemSpec

ONE = 1.0
MASS_TOL = 1e-12

Box = tuple[tuple[float, float], ...]


class DimensionMismatch(ValueError):
    pass


class ZeroMassElement(ValueError):
    """Raised when conditioning on a set of measure zero."""


def as_points(x, dim: int | None = None) -> np.ndarray:
    """Coerce a point or an array of points to a float array of shape (n, d)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if dim is None or dim == arr.size else arr.reshape(-1, 1)
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"expected points of dimension {dim}, got {arr.shape[1]}")
    return arr


def _is_one(points: np.ndarray) -> np.ndarray:
    if points.shape[1] != 1:
        return np.zeros(points.shape[0], dtype=bool)
    return points[:, 0] == ONE


# ---------------------------------------------------------------------------
# Sets
# ---------------------------------------------------------------------------

def _grid_edges(dim: int, box_lists: Iterable[Sequence[Box]]) -> list[np.ndarray]:
    edges = [{0.0, 1.0} for _ in range(dim)]
    for boxes in box_lists:
        for box in boxes:
            for ax, (lo, hi) in enumerate(box):
                edges[ax].update((lo, hi))
    return [np.array(sorted(e)) for e in edges]


def _coverage(boxes: Sequence[Box], edges: list[np.ndarray]) -> np.ndarray:
    cov = np.zeros([len(e) - 1 for e in edges], dtype=bool)
    for box in boxes:
        sl = tuple(
            slice(int(np.searchsorted(e, lo)), int(np.searchsorted(e, hi)))
            for e, (lo, hi) in zip(edges, box)
        )
        cov[sl] = True
    return cov


def _boxes_from_grid(edges: list[np.ndarray], cov: np.ndarray) -> list[Box]:
    # Slabs along the first axis with identical cross-sections are merged, so the
    # output depends only on the covered point set, not on the grid used.
    first, rest = edges[0], edges[1:]
    out: list[Box] = []
    run_start = None
    run_sub: list[Box] | None = None
    for i in range(len(first) - 1):
        if rest:
            sub = _boxes_from_grid(rest, cov[i]) if cov[i].any() else []
        else:
            sub = [()] if cov[i] else []
        if run_sub is not None and sub == run_sub:
            continue
        if run_sub:
            out.extend(((first[run_start], first[i]),) + s for s in run_sub)
        run_start, run_sub = i, sub
    if run_sub:
        out.extend(((first[run_start], first[-1]),) + s for s in run_sub)
    return [tuple((float(lo), float(hi)) for lo, hi in b) for b in out]


@dataclass(frozen=True)
class MeasurableSet:
    """A finite union of half-open boxes in [0,1)^d, plus optionally ``ONE``.

    The box list is canonicalized on construction (disjoint, merged, sorted), so
    two instances describing the same subset compare equal.
    """

    dim: int
    boxes: tuple[Box, ...] = ()
    include_one: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.include_one and self.dim != 1:
            raise ValueError("ONE only exists in the one-dimensional state space")
        clean = []
        for box in self.boxes:
            box = tuple((float(lo), float(hi)) for lo, hi in box)
            if len(box) != self.dim:
                raise DimensionMismatch(f"box {box} is not {self.dim}-dimensional")
            for lo, hi in box:
                if not 0.0 <= lo <= hi <= 1.0:
                    raise ValueError(f"box edge out of range: {box}")
            if all(lo < hi for lo, hi in box):
                clean.append(box)
        if clean:
            edges = _grid_edges(self.dim, [clean])
            clean = _boxes_from_grid(edges, _coverage(clean, edges))
        object.__setattr__(self, "boxes", tuple(clean))
        object.__setattr__(self, "include_one", bool(self.include_one))

    # constructors
    @classmethod
    def empty(cls, dim: int = 1) -> MeasurableSet:
        return cls(dim)

    @classmethod
    def universe(cls, dim: int = 1) -> MeasurableSet:
        """The whole state space: [0,1)^d, together with ONE when d = 1."""
        return cls(dim, (((0.0, 1.0),) * dim,), include_one=dim == 1)

    @classmethod
    def box(cls, *intervals: tuple[float, float]) -> MeasurableSet:
        return cls(len(intervals), (tuple(intervals),))

    @classmethod
    def interval(cls, lo: float, hi: float) -> MeasurableSet:
        return cls(1, (((lo, hi),),))

    @classmethod
    def one(cls) -> MeasurableSet:
        return cls(1, (), include_one=True)

    # predicates
    def contains(self, points) -> np.ndarray:
        pts = as_points(points, self.dim)
        mask = np.zeros(pts.shape[0], dtype=bool)
        for box in self.boxes:
            inside = np.ones(pts.shape[0], dtype=bool)
            for ax, (lo, hi) in enumerate(box):
                inside &= (pts[:, ax] >= lo) & (pts[:, ax] < hi)
            mask |= inside
        if self.include_one:
            mask |= _is_one(pts)
        return mask

    def __contains__(self, point) -> bool:
        return bool(self.contains(point)[0])

    def is_empty(self) -> bool:
        return not self.boxes and not self.include_one

    def issubset(self, other: MeasurableSet) -> bool:
        return (self - other).is_empty()

    @property
    def volume(self) -> float:
        """Lebesgue measure of the box part."""
        return float(sum(np.prod([hi - lo for lo, hi in b]) for b in self.boxes))

    @property
    def diameter(self) -> float:
        """Euclidean diameter of the bounding box (0 for the empty set)."""
        if self.is_empty():
            return 0.0
        lo = np.full(self.dim, np.inf)
        hi = np.full(self.dim, -np.inf)
        for box in self.boxes:
            lo = np.minimum(lo, [b[0] for b in box])
            hi = np.maximum(hi, [b[1] for b in box])
        if self.include_one:
            lo = np.minimum(lo, ONE)
            hi = np.maximum(hi, ONE)
        return float(np.linalg.norm(hi - lo))

    def closure_within(self, other: MeasurableSet) -> bool:
        """Whether the closure of this set (in [0,1)^d) lies inside ``other``.

        Each box [a, b) is pushed slightly past its upper faces, by less than any
        gap between edges of either set; its closure is inside ``other`` iff the
        pushed box is.  Upper faces at 1 are not pushed since 1 is not a point of
        [0,1)^d.
        """
        if self.include_one and not other.include_one:
            return False
        edges = _grid_edges(self.dim, [self.boxes, other.boxes])
        gaps = [np.diff(e).min() for e in edges]
        pushed = []
        for box in self.boxes:
            pushed.append(tuple(
                (lo, hi if hi == 1.0 else min(1.0, hi + gaps[ax] / 2))
                for ax, (lo, hi) in enumerate(box)
            ))
        return MeasurableSet(self.dim, tuple(pushed)).issubset(other)

    # algebra
    def _combine(self, other: MeasurableSet, op) -> MeasurableSet:
        if other.dim != self.dim:
            raise DimensionMismatch("sets live in different dimensions")
        edges = _grid_edges(self.dim, [self.boxes, other.boxes])
        cov = op(_coverage(self.boxes, edges), _coverage(other.boxes, edges))
        one = bool(op(np.bool_(self.include_one), np.bool_(other.include_one)))
        return MeasurableSet(self.dim, tuple(_boxes_from_grid(edges, cov)), include_one=one)

    def __or__(self, other):
        return self._combine(other, np.logical_or)

    def __and__(self, other):
        return self._combine(other, np.logical_and)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a & ~b)

    def complement(self) -> MeasurableSet:
        return MeasurableSet.universe(self.dim) - self

    def __str__(self) -> str:
        parts = ["x".join(f"[{lo:.17g},{hi:.17g})" for lo, hi in b) for b in self.boxes]
        if self.include_one:
            parts.append("{ONE}")
        return " U ".join(parts) if parts else "{}"


@dataclass(frozen=True)
class PointSet:
    """A finite set of points; used as the carrier of sample-defined classes."""

    points: tuple[tuple[float, ...], ...]

    @classmethod
    def of(cls, points) -> PointSet:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return cls(tuple(sorted({tuple(map(float, p)) for p in pts})))

    @property
    def dim(self) -> int:
        return len(self.points[0]) if self.points else 1

    def contains(self, points) -> np.ndarray:
        pts = as_points(points, self.dim)
        members = set(self.points)
        return np.fromiter((tuple(p) in members for p in pts.tolist()), bool, len(pts))

    def __contains__(self, point) -> bool:
        return bool(self.contains(point)[0])


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

def _validate_points(points: np.ndarray) -> None:
    inside = (points >= 0.0) & (points < 1.0)
    ok = inside.all(axis=1) | _is_one(points)
    if not ok.all():
        bad = points[~ok][0]
        raise ValueError(f"point {bad} is outside the state space")


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """A probability measure given by finitely many weighted atoms.

    Atoms are not merged: repeated points are allowed and behave additively.
    Use :meth:`compact` to merge them.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights must have matching lengths")
        if pts.shape[0] == 0:
            raise ValueError("a probability measure needs at least one atom")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be finite and non-negative")
        _validate_points(pts)
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {w.sum()!r} differs from 1")
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def _unchecked(cls, points: np.ndarray, weights: np.ndarray) -> AtomicMeasure:
        # Bypasses validation; only for deliberately defective measures in checks.
        obj = object.__new__(cls)
        object.__setattr__(obj, "points", np.asarray(points, dtype=float))
        object.__setattr__(obj, "weights", np.asarray(weights, dtype=float))
        return obj

    @classmethod
    def normalized(cls, points, weights) -> AtomicMeasure:
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if total <= 0:
            raise ZeroMassElement("cannot normalize a measure of zero mass")
        return cls(points, w / total)

    @classmethod
    def dirac(cls, point) -> AtomicMeasure:
        return cls(as_points(point), np.ones(1))

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[object, float]]) -> AtomicMeasure:
        atoms = list(atoms)
        pts = np.vstack([as_points(p) for p, _ in atoms])
        return cls(pts, [w for _, w in atoms])

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return self.weights.shape[0]

    def compact(self) -> AtomicMeasure:
        """Merge repeated points, dropping zero-weight atoms; atoms come out sorted."""
        keep = self.weights > 0
        pts, inv = np.unique(self.points[keep], axis=0, return_inverse=True)
        w = np.bincount(inv.reshape(-1), weights=self.weights[keep], minlength=len(pts))
        return AtomicMeasure(pts, w)

    def integrate(self, phi) -> float:
        """Integral of a vectorized function ``phi((n, d) array) -> (n,)``."""
        return float(np.dot(self.weights, np.asarray(phi(self.points), dtype=float)))


def grid_measure(depth: int, dim: int = 1) -> AtomicMeasure:
    """Uniform measure with one atom at the center of each depth-``depth`` cell."""
    k = 2 ** depth
    centers = (2 * np.arange(k) + 1) / (2 * k)
    mesh = np.meshgrid(*([centers] * dim), indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return AtomicMeasure(pts, np.full(k ** dim, 1.0 / k ** dim))


def _check_dim(mu: AtomicMeasure, dim: int) -> None:
    if mu.dim != dim:
        raise DimensionMismatch(f"measure has dimension {mu.dim}, set has dimension {dim}")


def measure_of(mu: AtomicMeasure, e) -> float:
    """mu(e): total weight of the atoms lying in ``e``."""
    _check_dim(mu, e.dim)
    return float(min(1.0, mu.weights[e.contains(mu.points)].sum()))


def measure_of_many(mu: AtomicMeasure, sets: Sequence[MeasurableSet]) -> np.ndarray:
    """Vectorized :func:`measure_of` for many box sets.

    Atoms are binned once into the grid spanned by every edge of every set;
    each set is then a union of grid cells.
    """
    if not sets:
        return np.zeros(0)
    for e in sets:
        _check_dim(mu, e.dim)
    edges = _grid_edges(mu.dim, [e.boxes for e in sets])
    one = _is_one(mu.points)
    pts, w = mu.points[~one], mu.weights[~one]
    shape = [len(e) - 1 for e in edges]
    idx = [np.searchsorted(e, pts[:, ax], side="right") - 1 for ax, e in enumerate(edges)]
    flat = np.ravel_multi_index(idx, shape)
    hist = np.bincount(flat, weights=w, minlength=int(np.prod(shape)))
    one_mass = mu.weights[one].sum()
    out = np.empty(len(sets))
    for i, e in enumerate(sets):
        out[i] = hist[_coverage(e.boxes, edges).reshape(-1)].sum()
        if e.include_one:
            out[i] += one_mass
    return np.minimum(out, 1.0)


def condition_on(mu: AtomicMeasure, p) -> AtomicMeasure:
    """Normalized restriction of ``mu`` to ``p``: E -> mu(E & p) / mu(p)."""
    _check_dim(mu, p.dim)
    mask = p.contains(mu.points)
    mass = mu.weights[mask].sum()
    if mass <= 0:
        raise ZeroMassElement(f"set {p} has zero mass")
    return AtomicMeasure(mu.points[mask], mu.weights[mask] / mass)


def pushforward(sys: SystemSpec, mu: AtomicMeasure) -> AtomicMeasure:
    """Image measure A -> mu(f^{-1}(A)); every atom is moved, weights are kept."""
    from ergodec.systems import apply_many

    _check_dim(mu, sys.dim)
    return AtomicMeasure(apply_many(sys, mu.points), mu.weights)


def dyadic_cell_masses(mu: AtomicMeasure, depth: int) -> np.ndarray:
    """Masses of the depth-``depth`` dyadic cells of [0,1)^d (row-major order).

    In dimension one a final extra entry holds the mass of ``ONE``.
    """
    k = 2 ** depth
    one = _is_one(mu.points)
    pts = mu.points[~one]
    idx = np.minimum(np.floor(pts * k).astype(np.int64), k - 1)
    flat = np.ravel_multi_index(tuple(idx.T), (k,) * mu.dim)
    hist = np.bincount(flat, weights=mu.weights[~one], minlength=k ** mu.dim)
    if mu.dim == 1:
        hist = np.append(hist, mu.weights[one].sum())
    return hist


def tv_distance(mu: AtomicMeasure, nu: AtomicMeasure, resolution_depth: int) -> float:
    """Total variation distance between the cell-mass vectors at a dyadic depth."""
    if mu.dim != nu.dim:
        raise DimensionMismatch("measures live in different dimensions")
    diff = dyadic_cell_masses(mu, resolution_depth) - dyadic_cell_masses(nu, resolution_depth)
    return float(min(1.0, 0.5 * np.abs(diff).sum()))


def abs_continuity_check(nu: AtomicMeasure, mu: AtomicMeasure, resolution_depth: int) -> bool:
    """Cell-level proxy for nu << mu: every cell charged by nu is charged by mu."""
    if mu.dim != nu.dim:
        raise DimensionMismatch("measures live in different dimensions")
    cn = dyadic_cell_masses(nu, resolution_depth)
    cm = dyadic_cell_masses(mu, resolution_depth)
    return bool(np.all(cm[cn > 0] > 0))


def dyadic_boxes(dim: int, max_depth: int, *, mixed: bool = True) -> list[MeasurableSet]:
    """All dyadic boxes with per-axis depth <= ``max_depth``.

    With ``mixed=False`` only boxes whose axes share one depth are produced.
    """
    out = []
    depth_choices = (
        itertools.product(range(max_depth + 1), repeat=dim)
        if mixed else ((k,) * dim for k in range(max_depth + 1))
    )
    for depths in depth_choices:
        ranges = [range(2 ** k) for k in depths]
        for idx in itertools.product(*ranges):
            box = tuple((i / 2 ** k, (i + 1) / 2 ** k) for i, k in zip(idx, depths))
            out.append(MeasurableSet(dim, (box,)))
    return out

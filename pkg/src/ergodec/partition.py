"""Refining dyadic partitions, the projection onto cells, and the quotient measure."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ergodec.measure import AtomicMeasure, MeasurableSet, ONE, _is_one, as_points


@dataclass(frozen=True, order=True)
class CellId:
    """A depth-n cell, indexed 1..2^n along each refined axis.

    The cell holding ``ONE`` has index ``2^n + 1``; it exists at every depth.
    """

    depth: int
    index: tuple[int, ...]

    @property
    def is_one(self) -> bool:
        return self.index == (2 ** self.depth + 1,)

    def __str__(self) -> str:
        return "ONE" if self.is_one else ":".join(map(str, self.index))


@dataclass(frozen=True)
class DyadicPartition:
    """The partition of [0,1)^d into products of J(i, n) = [(i-1)/2^n, i/2^n)
    along the refined axes (unrefined axes are left whole)."""

    depth: int
    dim: int
    axis_mask: tuple[bool, ...]

    def cells(self) -> list[CellId]:
        k = 2 ** self.depth
        n_axes = sum(self.axis_mask)
        out = [CellId(self.depth, idx) for idx in itertools.product(range(1, k + 1), repeat=n_axes)]
        if self.dim == 1 and n_axes == 1:
            out.append(CellId(self.depth, (k + 1,)))
        return out


@dataclass(frozen=True)
class RefiningSequence:
    """Nested dyadic partitions P_0 <= P_1 <= ... <= P_max_depth.

    ``axis_mask`` selects which coordinates are refined; on the torus
    ``(True, False)`` produces the vertical fibers {x} x S^1 in the limit.
    """

    dim: int
    max_depth: int
    axis_mask: tuple[bool, ...] | None = None

    def __post_init__(self):
        mask = (True,) * self.dim if self.axis_mask is None else tuple(map(bool, self.axis_mask))
        if len(mask) != self.dim or not any(mask):
            raise ValueError("axis_mask must select at least one of the dim coordinates")
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        object.__setattr__(self, "axis_mask", mask)

    @property
    def base(self) -> DyadicPartition:
        return self.level(0)

    @property
    def axes(self) -> list[int]:
        return [ax for ax, m in enumerate(self.axis_mask) if m]

    def level(self, n: int) -> DyadicPartition:
        self._check_depth(n)
        return DyadicPartition(n, self.dim, self.axis_mask)

    def _check_depth(self, n: int) -> None:
        if not 0 <= n <= self.max_depth:
            raise ValueError(f"depth {n} outside 0..{self.max_depth}")

    def cell_indices(self, n: int, points) -> np.ndarray:
        """1-based cell indices of many points, shape (n_points, n_refined_axes)."""
        self._check_depth(n)
        pts = as_points(points, self.dim)
        k = 2 ** n
        idx = np.minimum(np.floor(pts[:, self.axes] * k).astype(np.int64), k - 1) + 1
        one = _is_one(pts)
        idx[one] = k + 1
        return idx

    def cell_keys(self, n: int, points) -> np.ndarray:
        """Integer keys ordered like the cells; convenient for grouping atoms."""
        idx = self.cell_indices(n, points) - 1
        base = 2 ** n + 1
        keys = np.zeros(idx.shape[0], dtype=np.int64)
        for j in range(idx.shape[1]):
            keys = keys * base + idx[:, j]
        return keys

    def cell_set(self, cell: CellId) -> MeasurableSet:
        """The cell as a subset of the state space."""
        if cell.is_one:
            return MeasurableSet.one()
        k = 2 ** cell.depth
        it = iter(cell.index)
        box = []
        for m in self.axis_mask:
            if m:
                i = next(it)
                box.append(((i - 1) / k, i / k))
            else:
                box.append((0.0, 1.0))
        return MeasurableSet(self.dim, (tuple(box),))

    def representative(self, cell: CellId) -> np.ndarray:
        """A point of the cell: centers along refined axes, 1/2 elsewhere."""
        if cell.is_one:
            return np.array([ONE])
        k = 2 ** cell.depth
        it = iter(cell.index)
        return np.array([(2 * next(it) - 1) / (2 * k) if m else 0.5 for m in self.axis_mask])


def cell_of(seq: RefiningSequence, n: int, x) -> CellId:
    """The depth-n cell containing x."""
    return CellId(n, tuple(int(i) for i in seq.cell_indices(n, x)[0]))


def quotient_map(seq: RefiningSequence, n: int, x) -> CellId:
    """Canonical projection of a point onto its partition element (same as :func:`cell_of`)."""
    return cell_of(seq, n, x)


def group_by_cell(mu: AtomicMeasure, seq: RefiningSequence, n: int):
    """Yield ``(cell, atom_mask_indices)`` for every cell charged by an atom of mu, in cell order."""
    keys = seq.cell_keys(n, mu.points)
    idx = seq.cell_indices(n, mu.points)
    order = np.argsort(keys, kind="stable")
    uniq, starts = np.unique(keys[order], return_index=True)
    bounds = list(starts) + [len(order)]
    for j in range(len(uniq)):
        members = order[bounds[j]:bounds[j + 1]]
        yield CellId(n, tuple(int(i) for i in idx[members[0]])), members


def quotient_masses(mu: AtomicMeasure, seq: RefiningSequence, n: int) -> dict[CellId, float]:
    """Mass of every depth-n cell that carries positive mass."""
    out = {}
    for cell, members in group_by_cell(mu, seq, n):
        mass = float(mu.weights[members].sum())
        if mass > 0:
            out[cell] = mass
    return out


def quotient_measure(mu: AtomicMeasure, seq: RefiningSequence, n: int) -> AtomicMeasure:
    """The cell masses as an atomic measure, one atom per charged cell at its representative."""
    masses = quotient_masses(mu, seq, n)
    pts = np.vstack([seq.representative(c) for c in masses])
    return AtomicMeasure(pts, np.fromiter(masses.values(), float))

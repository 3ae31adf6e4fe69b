"""Conditional measures over a refining partition and checks of the defining identities.

A partition element is a depth-n cell of a :class:`RefiningSequence`.  The
conditional measure on a cell is the normalized restriction of the measure to
that cell.  The conditional average of a function at x is its mean over the
depth-n cell holding x; as n grows these averages converge to integrals against
the conditional measures.  Cells of zero mass are dropped since they are null
for the quotient measure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from ergodec.measure import (
    AtomicMeasure,
    MeasurableSet,
    ZeroMassElement,
    dyadic_boxes,
    measure_of,
    measure_of_many,
    tv_distance,
)
from ergodec.partition import CellId, RefiningSequence, group_by_cell

Phi = Callable[[np.ndarray], np.ndarray]


class PartitionMismatch(ValueError):
    """Two families are defined over different partitions."""


@dataclass(frozen=True, eq=False)
class ConditionalFamily:
    """One conditional probability measure per partition element, plus the element weights.

    ``carriers`` maps every key to the partition element itself (anything with
    a ``contains(points)`` method).  ``seq`` and ``depth`` are set when the
    elements are cells of a refining sequence.
    """

    elements: Mapping[Hashable, AtomicMeasure]
    quotient: Mapping[Hashable, float]
    carriers: Mapping[Hashable, object]
    seq: RefiningSequence | None = None
    depth: int | None = None

    def __post_init__(self):
        if set(self.elements) != set(self.quotient) or set(self.elements) != set(self.carriers):
            raise ValueError("elements, quotient and carriers must share their keys")

    def keys(self):
        return self.elements.keys()

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, key) -> AtomicMeasure:
        return self.elements[key]

    def mixture(self, e: MeasurableSet) -> float:
        """Sum over elements of (conditional mass of e) times (element weight)."""
        return float(sum(measure_of(m, e) * self.quotient[k] for k, m in self.elements.items()))

    def relabel(self, key_fn: Callable[[Hashable], Hashable], seq=None, depth=None) -> ConditionalFamily:
        new = {key_fn(k): k for k in self.elements}
        if len(new) != len(self.elements):
            raise ValueError("relabelling must be injective")
        return ConditionalFamily(
            {n: self.elements[o] for n, o in new.items()},
            {n: self.quotient[o] for n, o in new.items()},
            {n: self.carriers[o] for n, o in new.items()},
            seq=seq, depth=depth,
        )


@dataclass
class ConvergenceReport:
    values: list[float]
    gap: float
    converged: bool
    depth: int


@dataclass
class DisintegrationReport:
    carrier_mass: dict
    residuals: np.ndarray
    tests: list[MeasurableSet]
    tol: float
    max_residual: float = field(init=False)
    carriers_ok: bool = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.max_residual = float(self.residuals.max()) if len(self.residuals) else 0.0
        self.carriers_ok = all(abs(m - 1.0) <= self.tol for m in self.carrier_mass.values())
        self.passed = self.carriers_ok and self.max_residual <= self.tol


# ---------------------------------------------------------------------------
# conditional averages
# ---------------------------------------------------------------------------

def conditional_averages(phi: Phi, mu: AtomicMeasure, seq: RefiningSequence, n: int, at=None) -> np.ndarray:
    """Depth-n conditional averages of phi at the atoms of mu, or at the points ``at``."""
    keys = seq.cell_keys(n, mu.points)
    vals = np.asarray(phi(mu.points), dtype=float)
    uniq, inv = np.unique(keys, return_inverse=True)
    inv = inv.reshape(-1)
    mass = np.bincount(inv, weights=mu.weights, minlength=len(uniq))
    integral = np.bincount(inv, weights=mu.weights * vals, minlength=len(uniq))
    avg = np.divide(integral, mass, out=np.zeros_like(mass), where=mass > 0)
    if at is None:
        return avg[inv]
    qkeys = seq.cell_keys(n, at)
    pos = np.searchsorted(uniq, qkeys)
    pos = np.minimum(pos, len(uniq) - 1)
    found = uniq[pos] == qkeys
    return np.where(found, avg[pos], 0.0)


def conditional_average(phi: Phi, x, mu: AtomicMeasure, seq: RefiningSequence, n: int) -> float:
    """Mean of phi over the depth-n cell of x under mu; 0 when that cell is null."""
    return float(conditional_averages(phi, mu, seq, n, at=x)[0])


def martingale_limit(phi: Phi, x, mu: AtomicMeasure, seq: RefiningSequence,
                     tol: float, max_depth: int | None = None) -> tuple[float, ConvergenceReport]:
    """Refine until two successive conditional averages at x differ by at most ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    max_depth = seq.max_depth if max_depth is None else min(max_depth, seq.max_depth)
    values = [conditional_average(phi, x, mu, seq, 0)]
    gap = np.inf
    for n in range(1, max_depth + 1):
        values.append(conditional_average(phi, x, mu, seq, n))
        gap = abs(values[-1] - values[-2])
        if gap <= tol:
            return values[-1], ConvergenceReport(values, gap, True, n)
    return values[-1], ConvergenceReport(values, float(gap), False, len(values) - 1)


def conditional_probability(a: MeasurableSet, p: CellId, mu: AtomicMeasure, seq: RefiningSequence) -> float:
    """mu(A & P) / mu(P) for a cell P."""
    cell = seq.cell_set(p)
    mass = measure_of(mu, cell)
    if mass <= 0:
        raise ZeroMassElement(f"cell {p} has zero mass")
    return measure_of(mu, a & cell) / mass


def conditional_probability_table(sets: Sequence[MeasurableSet], p: CellId, mu: AtomicMeasure,
                                  seq: RefiningSequence) -> np.ndarray:
    """:func:`conditional_probability` for many sets and one cell."""
    cell = seq.cell_set(p)
    mass = measure_of(mu, cell)
    if mass <= 0:
        raise ZeroMassElement(f"cell {p} has zero mass")
    return measure_of_many(mu, [a & cell for a in sets]) / mass


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

def disintegrate(mu: AtomicMeasure, seq: RefiningSequence, depth: int) -> ConditionalFamily:
    """Condition mu on every depth-``depth`` cell of positive mass."""
    seq.level(depth)
    elements, quotient, carriers = {}, {}, {}
    for cell, members in group_by_cell(mu, seq, depth):
        w = mu.weights[members]
        mass = w.sum()
        if mass <= 0:
            continue
        elements[cell] = AtomicMeasure(mu.points[members], w / mass)
        quotient[cell] = float(mass)
        carriers[cell] = seq.cell_set(cell)
    return ConditionalFamily(elements, quotient, carriers, seq=seq, depth=depth)


def disintegrate_finite(mu: AtomicMeasure, parts: Sequence) -> ConditionalFamily:
    """Disintegration over an explicit finite partition given as a list of sets.

    Keys are the positions in ``parts``; null parts are dropped.
    """
    covered = np.zeros(len(mu), dtype=int)
    elements, quotient, carriers = {}, {}, {}
    for i, p in enumerate(parts):
        mask = p.contains(mu.points)
        covered += mask
        mass = mu.weights[mask].sum()
        if mass > 0:
            elements[i] = AtomicMeasure(mu.points[mask], mu.weights[mask] / mass)
            quotient[i] = float(mass)
            carriers[i] = p
    if (covered != 1).any():
        raise ValueError("parts must be disjoint and cover every atom")
    return ConditionalFamily(elements, quotient, carriers)


def family_from_conditional_probabilities(mu: AtomicMeasure, seq: RefiningSequence, depth: int,
                                          resolution_depth: int) -> ConditionalFamily:
    """Build each conditional from the table of probabilities mu(C & P) / mu(P) over dyadic cells C.

    The conditional on P gets one atom per resolution cell C meeting P, placed
    inside C & P and carrying the conditional probability of C.  This construction shares
    nothing with :func:`disintegrate` beyond the measure itself.
    """
    fine = RefiningSequence(seq.dim, resolution_depth)
    fine_cells = [fine.cell_set(c) for c in fine.level(resolution_depth).cells()]
    elements, quotient, carriers = {}, {}, {}
    for cell in seq.level(depth).cells():
        pset = seq.cell_set(cell)
        if measure_of(mu, pset) <= 0:
            continue
        pieces = [(c, c & pset) for c in fine_cells]
        pieces = [(c, piece) for c, piece in pieces if not piece.is_empty()]
        probs = conditional_probability_table([c for c, _ in pieces], cell, mu, seq)
        keep = probs > 0
        pts = np.vstack([_inner_point(piece) for (_, piece), k in zip(pieces, keep) if k])
        elements[cell] = AtomicMeasure.normalized(pts, probs[keep])
        quotient[cell] = measure_of(mu, pset)
        carriers[cell] = pset
    return ConditionalFamily(elements, quotient, carriers, seq=seq, depth=depth)


def _inner_point(s: MeasurableSet) -> np.ndarray:
    if not s.boxes:
        return np.array([1.0])
    return np.array([(lo + hi) / 2 for lo, hi in s.boxes[0]])


def corrupt(fam: ConditionalFamily, key, factor: float) -> ConditionalFamily:
    """Copy of ``fam`` with one conditional measure rescaled (no longer a probability)."""
    elements = dict(fam.elements)
    m = elements[key]
    elements[key] = AtomicMeasure._unchecked(m.points, m.weights * factor)
    return ConditionalFamily(elements, dict(fam.quotient), dict(fam.carriers), fam.seq, fam.depth)


def default_tests(dim: int, depth: int) -> list[MeasurableSet]:
    """Dyadic boxes with per-axis depth up to min(depth, 6), plus {ONE} in dimension one."""
    tests = dyadic_boxes(dim, min(depth, 6))
    if dim == 1:
        tests += [MeasurableSet.one(), MeasurableSet.universe(1)]
    return tests


def verify_disintegration(fam: ConditionalFamily, mu: AtomicMeasure,
                          tests: Sequence[MeasurableSet] | None = None,
                          tol: float = 1e-9) -> DisintegrationReport:
    """Check that each conditional gives its element mass 1, and measure how far the
    weighted mixture of conditionals is from mu on every test set."""
    if tests is None:
        tests = default_tests(mu.dim, fam.depth if fam.depth is not None else 6)
    tests = list(tests)
    carrier_mass = {k: float(m.weights[fam.carriers[k].contains(m.points)].sum())
                    for k, m in fam.elements.items()}
    if not tests:
        return DisintegrationReport(carrier_mass, np.zeros(0), tests, tol)
    mixed = np.zeros(len(tests))
    for k, m in fam.elements.items():
        mixed += _raw_masses(m, tests) * fam.quotient[k]
    residuals = np.abs(mixed - _raw_masses(mu, tests))
    return DisintegrationReport(carrier_mass, residuals, tests, tol)


def _raw_masses(m: AtomicMeasure, tests) -> np.ndarray:
    if all(isinstance(t, MeasurableSet) for t in tests):
        if abs(m.weights.sum() - 1.0) <= 1e-12:
            return measure_of_many(m, tests)
    return np.array([m.weights[t.contains(m.points)].sum() for t in tests])


def uniqueness_check(f1: ConditionalFamily, f2: ConditionalFamily, resolution_depth: int) -> float:
    """Weighted mean total variation distance between matching conditionals."""
    if f1.seq is not None and f2.seq is not None:
        if f1.seq.axis_mask != f2.seq.axis_mask or f1.seq.dim != f2.seq.dim or f1.depth != f2.depth:
            raise PartitionMismatch("families live on different partitions")
    if set(f1.keys()) != set(f2.keys()):
        raise PartitionMismatch("families have different partition elements")
    return float(sum(
        f1.quotient[k] * tv_distance(f1[k], f2[k], resolution_depth) for k in f1.keys()
    ))

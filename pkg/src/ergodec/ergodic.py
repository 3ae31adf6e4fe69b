"""Visit frequencies, the dynamical partition, and inheritance checks for conditionals.

Points are classified by their visit frequencies to a list of generator sets.
Each frequency is binned into the intervals [j/2^m, (j+1)/2^m) (the last one
closed at 1); points whose bin vectors coincide form one class.  Conditioning
the measure on each class yields the decomposition whose elements are then
tested for frequency constancy, invariance, and non-singularity.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ergodec.disintegration import ConditionalFamily
from ergodec.measure import (
    AtomicMeasure,
    MeasurableSet,
    PointSet,
    abs_continuity_check,
    as_points,
    pushforward,
    tv_distance,
)
from ergodec.symbolic import GeneratorBasis
from ergodec.systems import SystemSpec, visit_counts


class DegenerateClass(UserWarning):
    """A frequency class carries zero weight and is dropped from the decomposition."""


@dataclass
class FrequencyProfile:
    values: np.ndarray
    orbit_length: int
    tail_min: np.ndarray
    tail_max: np.ndarray
    counts: np.ndarray


@dataclass
class FrequencyClass:
    signature: tuple[int, ...]
    members: np.ndarray
    indices: tuple[int, ...]


@dataclass
class DynamicalPartitionResult:
    classes: list[FrequencyClass]
    cuts: np.ndarray
    generators: GeneratorBasis
    quotient_weights: dict[tuple[int, ...], float]
    profiles: np.ndarray
    near_cut: np.ndarray

    def labels(self) -> np.ndarray:
        """Class position of every sample."""
        out = np.empty(self.profiles.shape[0], dtype=int)
        for c, cls in enumerate(self.classes):
            out[list(cls.indices)] = c
        return out


@dataclass
class ErgodicityReport:
    spread: np.ndarray
    tol: float
    max_spread: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.max_spread = float(self.spread.max()) if self.spread.size else 0.0
        self.passed = self.max_spread <= self.tol


@dataclass
class InvarianceReport:
    tv: float
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.tv <= self.tol

    def __bool__(self) -> bool:
        return self.passed


def visit_frequency(sys: SystemSpec, x, a: MeasurableSet, n: int) -> float:
    """(1/n) #{0 <= i < n : f^i(x) in a}."""
    counts, _, _ = visit_counts(sys, as_points(x, sys.dim)[:1], [a], n)
    return counts[0, 0] / n


def frequency_profiles(sys: SystemSpec, points, basis: GeneratorBasis, n: int):
    """Frequencies of many points at once: (values, tail_min, tail_max, counts), each (n_points, K)."""
    if n < 2:
        raise ValueError("orbit length must be at least 2")
    counts, tmin, tmax = visit_counts(sys, points, basis.sets, n)
    return counts / n, tmin, tmax, counts


def frequency_profile(sys: SystemSpec, x, basis: GeneratorBasis, n: int) -> FrequencyProfile:
    values, tmin, tmax, counts = frequency_profiles(sys, as_points(x, sys.dim)[:1], basis, n)
    return FrequencyProfile(values[0], n, tmin[0], tmax[0], counts[0])


def cut_points(cuts_depth: int) -> np.ndarray:
    return np.arange(2 ** cuts_depth + 1) / 2 ** cuts_depth


def bin_frequencies(values: np.ndarray, cuts_depth: int) -> np.ndarray:
    """Index j of the interval [j/2^m, (j+1)/2^m) holding each value; 1 goes to the last one."""
    k = 2 ** cuts_depth
    return np.minimum(np.floor(np.asarray(values) * k).astype(np.int64), k - 1)


def dynamical_partition(sys: SystemSpec, samples, basis: GeneratorBasis, cuts_depth: int, n: int,
                        weights=None) -> DynamicalPartitionResult:
    """Group sample points by the binned vector of their visit frequencies.

    Classes are ordered by signature.  Entries closer to an interior cut than ten
    times their estimation error (at least 1/n, or half the tail bracket) are
    flagged in ``near_cut``.
    """
    pts = as_points(samples, sys.dim)
    if pts.shape[0] == 0:
        raise ValueError("no samples")
    w = np.full(len(pts), 1.0 / len(pts)) if weights is None else np.asarray(weights, dtype=float)
    values, tmin, tmax, _ = frequency_profiles(sys, pts, basis, n)
    sig = bin_frequencies(values, cuts_depth)

    cuts = cut_points(cuts_depth)
    err = np.maximum(1.0 / n, (tmax - tmin) / 2)
    interior = cuts[1:-1]
    if interior.size:
        dist = np.abs(values[..., None] - interior).min(axis=-1)
        near_cut = dist < 10 * err
    else:
        near_cut = np.zeros_like(values, dtype=bool)

    groups: dict[tuple[int, ...], list[int]] = {}
    for i, row in enumerate(sig):
        groups.setdefault(tuple(int(v) for v in row), []).append(i)
    classes, qw = [], {}
    for s in sorted(groups):
        idx = groups[s]
        classes.append(FrequencyClass(s, pts[idx], tuple(idx)))
        qw[s] = float(w[idx].sum())
    total = sum(qw.values())
    if total > 0:
        qw = {s: v / total for s, v in qw.items()}
    return DynamicalPartitionResult(classes, cuts, basis, qw, values, near_cut)


def ergodic_decomposition(sys: SystemSpec, mu: AtomicMeasure, basis: GeneratorBasis, cuts_depth: int,
                          n: int, depth: int | None = None) -> ConditionalFamily:
    """Condition mu on each class of the dynamical partition of its atoms.

    Keys of the returned family are class signatures; the carrier of a class is
    the finite set of its member atoms.  Zero-weight classes are dropped with a
    :class:`DegenerateClass` warning.
    """
    # Atoms sharing a point share an orbit, so run each distinct point once.
    uniq, inv = np.unique(mu.points, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    weights = np.bincount(inv, weights=mu.weights, minlength=len(uniq))
    part = dynamical_partition(sys, uniq, basis, cuts_depth, n, weights=weights)
    elements, quotient, carriers = {}, {}, {}
    for cls in part.classes:
        carrier = PointSet.of(cls.members)
        mask = carrier.contains(mu.points)
        mass = mu.weights[mask].sum()
        if mass <= 0:
            warnings.warn(f"class {cls.signature} has zero weight", DegenerateClass, stacklevel=2)
            continue
        elements[cls.signature] = AtomicMeasure(mu.points[mask], mu.weights[mask] / mass)
        quotient[cls.signature] = float(mass)
        carriers[cls.signature] = carrier
    return ConditionalFamily(elements, quotient, carriers, depth=depth)


def _trimmed_spread(values: np.ndarray, weights: np.ndarray, outlier_weight: float) -> float:
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order] / weights.sum()
    cum = np.cumsum(w)
    half = outlier_weight / 2
    # drop atoms from each end while the dropped weight stays within half the budget
    lo = int(np.searchsorted(cum, half, side="right"))
    hi = int(np.searchsorted(cum, 1.0 - half, side="left"))
    lo = min(lo, len(v) - 1)
    hi = min(max(hi, lo), len(v) - 1)
    return float(v[hi] - v[lo])


def test_ergodicity(sys: SystemSpec, mu_p: AtomicMeasure, basis: GeneratorBasis, n: int, tol: float,
                    outlier_weight: float = 0.01) -> ErgodicityReport:
    """Spread (max - min over the atoms, ignoring ``outlier_weight`` of mass) of
    the visit frequency to each generator; passes iff every spread <= tol."""
    uniq, inv = np.unique(mu_p.points, axis=0, return_inverse=True)
    weights = np.bincount(inv.reshape(-1), weights=mu_p.weights, minlength=len(uniq))
    keep = weights > 0
    values, *_ = frequency_profiles(sys, uniq[keep], basis, n)
    spread = np.array([_trimmed_spread(values[:, k], weights[keep], outlier_weight)
                       for k in range(values.shape[1])])
    return ErgodicityReport(spread, tol)


def test_invariance(sys: SystemSpec, mu_p: AtomicMeasure, resolution_depth: int, tol: float) -> InvarianceReport:
    """Total variation between the pushforward of ``mu_p`` and ``mu_p`` itself, at a dyadic resolution."""
    return InvarianceReport(tv_distance(pushforward(sys, mu_p), mu_p, resolution_depth), tol)


def test_nonsingularity(sys: SystemSpec, mu_p: AtomicMeasure, resolution_depth: int) -> bool:
    """Cell-level check that the pushforward of ``mu_p`` is absolutely continuous with respect to ``mu_p``."""
    return abs_continuity_check(pushforward(sys, mu_p), mu_p, resolution_depth)


for _f in (test_ergodicity, test_invariance, test_nonsingularity):
    _f.__test__ = False

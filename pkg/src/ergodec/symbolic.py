"""Binary coding of points against a finite list of generator sets.

A point x is sent to the bit vector (1_{S_1}(x), ..., 1_{S_K}(x)).  A cylinder
is a prefix of such a vector; its preimage is an intersection of generators
and their complements, and the induced cylinder measure is the original
measure of that preimage.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ergodec.measure import AtomicMeasure, MeasurableSet, as_points, measure_of


@dataclass(frozen=True)
class GeneratorBasis:
    """An ordered, duplicate-free list of generator sets."""

    sets: tuple[MeasurableSet, ...]

    def __post_init__(self):
        seen, uniq = set(), []
        for s in self.sets:
            if s not in seen:
                seen.add(s)
                uniq.append(s)
        if uniq and len({s.dim for s in uniq}) != 1:
            raise ValueError("generator sets must share one dimension")
        object.__setattr__(self, "sets", tuple(uniq))

    @classmethod
    def dyadic(cls, dim: int, depth: int, axis_mask=None, min_depth: int = 0) -> GeneratorBasis:
        """Dyadic boxes of depths ``min_depth..depth``, breadth first.

        Along axes excluded by ``axis_mask`` the boxes span the whole circle, so
        ``axis_mask=(True, False)`` gives the vertical bands J(i, n) x S^1.
        Depth 0 is the whole space (including ONE in dimension one).
        """
        mask = (True,) * dim if axis_mask is None else tuple(axis_mask)
        sets = []
        for n in range(min_depth, depth + 1):
            if n == 0:
                sets.append(MeasurableSet.universe(dim))
                continue
            k = 2 ** n
            for idx in itertools.product(range(k), repeat=sum(mask)):
                it = iter(idx)
                box = []
                for m in mask:
                    if m:
                        i = next(it)
                        box.append((i / k, (i + 1) / k))
                    else:
                        box.append((0.0, 1.0))
                sets.append(MeasurableSet(dim, (tuple(box),)))
        return cls(tuple(sets))

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    def __len__(self) -> int:
        return len(self.sets)

    def __getitem__(self, k):
        return self.sets[k]

    def __iter__(self):
        return iter(self.sets)

    def permuted(self, order: Sequence[int]) -> GeneratorBasis:
        return GeneratorBasis(tuple(self.sets[i] for i in order))


@dataclass(frozen=True)
class Cylinder:
    prefix: tuple[int, ...] = ()

    def __post_init__(self):
        prefix = tuple(int(b) for b in self.prefix)
        if any(b not in (0, 1) for b in prefix):
            raise ValueError("cylinder prefixes are binary")
        object.__setattr__(self, "prefix", prefix)

    def __len__(self) -> int:
        return len(self.prefix)

    def extend(self, bit: int) -> Cylinder:
        return Cylinder(self.prefix + (bit,))


def _prefix(c) -> tuple[int, ...]:
    return c.prefix if isinstance(c, Cylinder) else tuple(int(b) for b in c)


def encode_many(points, basis: GeneratorBasis) -> np.ndarray:
    """Codes of many points, a uint8 array of shape (n_points, K)."""
    pts = as_points(points, basis.dim)
    return np.stack([s.contains(pts) for s in basis], axis=1).astype(np.uint8)


def encode(x, basis: GeneratorBasis) -> np.ndarray:
    """bits[k] = 1 iff x lies in the k-th generator."""
    return encode_many(as_points(x, basis.dim)[:1], basis)[0]


def cylinder_preimage(c, basis: GeneratorBasis) -> MeasurableSet:
    """The set of points whose code starts with the prefix of ``c``."""
    prefix = _prefix(c)
    if len(prefix) > len(basis):
        raise ValueError("prefix is longer than the basis")
    out = MeasurableSet.universe(basis.dim)
    for bit, s in zip(prefix, basis):
        out = out & (s if bit else s.complement())
    return out


def cylinder_measure(mu: AtomicMeasure, c, basis: GeneratorBasis) -> float:
    return measure_of(mu, cylinder_preimage(c, basis))


class ImageProperties(NamedTuple):
    """Finite-depth verdicts on whether a code looks like the code of a point.

    ``nested`` is True when every 1-bit has a nested half-size witness in the
    basis and None when some witness is missing; a finite basis can never
    refute the existence of a witness, so it is never False.
    """

    nonempty: bool
    small_set: bool
    nested: bool | None


def check_image_properties(code, basis: GeneratorBasis) -> ImageProperties:
    bits = [int(b) for b in code]
    if len(bits) > len(basis):
        raise ValueError("code is longer than the basis")
    sets = basis.sets[: len(bits)]

    running = MeasurableSet.universe(basis.dim)
    nonempty = True
    for bit, s in zip(bits, sets):
        running = running & (s if bit else s.complement())
        if running.is_empty():
            nonempty = False
            break

    small_set = any(bit and s.diameter <= 1.0 for bit, s in zip(bits, sets))

    nested: bool | None = True
    for j, (bit, s) in enumerate(zip(bits, sets)):
        if not bit:
            continue
        half = s.diameter / 2
        if not any(t.diameter <= half and t.closure_within(s) for t in sets[j + 1:]):
            nested = None
            break
    return ImageProperties(nonempty, small_set, nested)

"""Reproduce the small worked examples and print what each construction returns."""
import argparse

import numpy as np

from ergodec import ergodic
from ergodec.disintegration import disintegrate, disintegrate_finite, verify_disintegration
from ergodec.measure import ONE, AtomicMeasure, MeasurableSet, grid_measure
from ergodec.partition import RefiningSequence
from ergodec.symbolic import GeneratorBasis
from ergodec.systems import SystemSpec


def singleton_partition(depth):
    mu = grid_measure(depth)
    fam = disintegrate(mu, RefiningSequence(1, depth), depth)
    sizes = {len(m) for m in fam.elements.values()}
    rep = verify_disintegration(fam, mu)
    print(f"singletons     : {len(fam)} elements, atoms per element {sizes}, residual {rep.max_residual:.2e}")


def mirror_pairs(depth):
    k = 2 ** depth
    mu = grid_measure(depth)
    parts = [MeasurableSet(1, (((i / k, (i + 1) / k),), (((k - 1 - i) / k, (k - i) / k),)))
             for i in range(k // 2)] + [MeasurableSet.one()]
    fam = disintegrate_finite(mu, parts)
    rep = verify_disintegration(fam, mu)
    first = fam[0]
    print(f"mirror pairs   : {len(fam)} elements, first = {first.points[:, 0].tolist()} "
          f"with weights {first.weights.tolist()}, residual {rep.max_residual:.2e}")


def torus_fibers(depth, bands):
    mu = grid_measure(depth, 2)
    fam = disintegrate(mu, RefiningSequence(2, depth, (True, False)), bands)
    rep = verify_disintegration(fam, mu)
    ys = {len(np.unique(m.points[:, 1])) for m in fam.elements.values()}
    print(f"torus fibers   : {len(fam)} bands, distinct heights per band {ys}, residual {rep.max_residual:.2e}")


def skew_classes(n):
    samples = grid_measure(3, 2)
    basis = GeneratorBasis.dyadic(2, 3, (True, False), min_depth=3)
    part = ergodic.dynamical_partition(SystemSpec.skew_product(1), samples.points, basis, 2, n)
    print(f"skew classes   : {len(part.classes)} classes over {len(samples)} samples")
    for cls in part.classes:
        xs = sorted(set(np.round(cls.members[:, 0], 4).tolist()))
        print(f"    signature {''.join(map(str, cls.signature))}  first coordinates {xs}")


def squaring(weights):
    mu = AtomicMeasure([[0.0], [ONE]], weights)
    fam = ergodic.ergodic_decomposition(SystemSpec.squaring(), mu, GeneratorBasis.dyadic(1, 2), 2, 1000)
    parts = ", ".join(f"{'ONE' if m.points[0, 0] == ONE else m.points[0, 0]}: {fam.quotient[k]}"
                      for k, m in fam.elements.items())
    print(f"squaring {weights}: {parts}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=6)
    ap.add_argument("--orbit", type=int, default=20_000)
    args = ap.parse_args()
    singleton_partition(args.depth)
    mirror_pairs(args.depth)
    torus_fibers(args.depth, 3)
    skew_classes(args.orbit)
    squaring([0.5, 0.5])
    squaring([0.3, 0.7])


if __name__ == "__main__":
    main()

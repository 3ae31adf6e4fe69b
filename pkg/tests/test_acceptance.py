"""Acceptance criteria, one test per criterion.

Each test is tagged with ``@pytest.mark.criterion``; the conftest prints a
PASS/FAIL line per criterion in the terminal summary.
"""
import itertools
import time

import numpy as np
import pytest

from ergodec import ergodic
from ergodec.disintegration import (
    ConditionalFamily,
    conditional_averages,
    disintegrate,
    family_from_conditional_probabilities,
    uniqueness_check,
    verify_disintegration,
)
from ergodec.measure import ONE, AtomicMeasure, MeasurableSet, dyadic_boxes, grid_measure
from ergodec.partition import CellId, RefiningSequence
from ergodec.symbolic import GeneratorBasis, check_image_properties, cylinder_measure, encode_many
from ergodec.systems import GOLDEN, SystemSpec

FIBERS = (True, False)
SKEW = SystemSpec.skew_product(1)
SQ = SystemSpec.squaring()


@pytest.fixture(scope="module")
def torus():
    mu = grid_measure(10, 2)
    seq = RefiningSequence(2, 10, FIBERS)
    return mu, seq


@pytest.fixture(scope="module")
def torus_fibers(torus):
    mu, seq = torus
    return disintegrate(mu, seq, 5)


@pytest.fixture(scope="module")
def skew_decomposition():
    samples = grid_measure(4, 2)
    basis = GeneratorBasis.dyadic(2, 4, FIBERS, min_depth=4)
    return ergodic.ergodic_decomposition(SKEW, samples, basis, 2, 100_000)


@pytest.fixture(scope="module")
def rotation_decomposition():
    samples = grid_measure(6)
    rot = SystemSpec.rotation(GOLDEN)
    # depth-4 intervals have frequency 1/16, strictly inside one depth-3 cut interval
    basis = GeneratorBasis.dyadic(1, 4, min_depth=4)
    fam = ergodic.ergodic_decomposition(rot, samples, basis, 3, 1_000_000)
    return rot, basis, fam


@pytest.fixture(scope="module")
def squaring_decompositions():
    basis = GeneratorBasis.dyadic(1, 2)
    out = {}
    for a, b in ((0.5, 0.5), (0.3, 0.7)):
        mu = AtomicMeasure([[0.0], [ONE]], [a, b])
        out[(a, b)] = ergodic.ergodic_decomposition(SQ, mu, basis, 2, 1000)
    return out


@pytest.mark.criterion(1, "disintegration identity on the torus grid, fibers at depth 5")
def test_disintegration_identity(torus, record_property):
    mu, seq = torus
    start = time.perf_counter()
    fam = disintegrate(mu, seq, 5)
    rep = verify_disintegration(fam, mu, tests=dyadic_boxes(2, 5), tol=1e-12)
    elapsed = time.perf_counter() - start
    record_property("max_residual", f"{rep.max_residual:.3g}")
    record_property("tests", len(rep.tests))
    record_property("seconds", f"{elapsed:.2f}")
    assert rep.carriers_ok
    assert rep.max_residual <= 1e-12
    assert elapsed < 5.0


@pytest.mark.criterion(2, "per-band uniform family agrees with the disintegration")
def test_product_family_cross_check(torus_fibers, record_property):
    g, k = 2 ** 10, 2 ** 5
    centers = (np.arange(g) + 0.5) / g
    per_band = g // k
    direct = {}
    for i in range(k):
        xs, ys = np.meshgrid(centers[i * per_band:(i + 1) * per_band], centers, indexing="ij")
        pts = np.column_stack([xs.ravel(), ys.ravel()])
        direct[CellId(5, (i + 1,))] = AtomicMeasure(pts, np.full(len(pts), 1.0 / len(pts)))
    fam = torus_fibers
    built = ConditionalFamily(direct, {c: 1.0 / k for c in direct},
                              {c: fam.seq.cell_set(c) for c in direct}, seq=fam.seq, depth=5)
    gap = uniqueness_check(fam, built, 10)
    record_property("weighted_tv", f"{gap:.3g}")
    assert gap <= 1e-12


@pytest.mark.criterion(3, "two independent constructions give the same family")
def test_uniqueness(record_property):
    gaps = []
    mu2 = grid_measure(8, 2)
    seq2 = RefiningSequence(2, 8, FIBERS)
    gaps.append(uniqueness_check(disintegrate(mu2, seq2, 5),
                                 family_from_conditional_probabilities(mu2, seq2, 5, 6), 6))
    rng = np.random.default_rng(11)
    counts = rng.multinomial(1024, np.full(40, 1 / 40))
    pts = np.append(rng.random(39), ONE).reshape(-1, 1)
    mu1 = AtomicMeasure(pts[counts > 0], counts[counts > 0] / 1024)
    seq1 = RefiningSequence(1, 8)
    gaps.append(uniqueness_check(disintegrate(mu1, seq1, 3),
                                 family_from_conditional_probabilities(mu1, seq1, 3, 8), 8))
    record_property("gaps", ",".join(f"{g:.3g}" for g in gaps))
    assert max(gaps) <= 1e-12


@pytest.mark.criterion(4, "martingale bound and mean identity")
def test_martingale_suite(record_property):
    mu = grid_measure(12)
    seq = RefiningSequence(1, 12)
    rng = np.random.default_rng(4)
    xs = rng.random((200, 1))
    worst_bound = 0.0
    for n in range(11):
        alpha = conditional_averages(lambda p: p[:, 0], mu, seq, n, at=xs)
        worst_bound = max(worst_bound, float(np.max(np.abs(alpha - xs[:, 0]) * 2.0 ** n)))
    worst_mean = 0.0
    for _ in range(20):
        amp = rng.normal(size=4)
        freq = rng.integers(1, 30, size=4)
        phase = rng.random(4) * 2 * np.pi
        phi = lambda p, amp=amp, freq=freq, phase=phase: (
            amp[None, :] * np.sin(freq[None, :] * p[:, :1] * 2 * np.pi + phase[None, :])).sum(axis=1)
        total = float(np.dot(mu.weights, phi(mu.points)))
        for n in range(11):
            worst_mean = max(worst_mean, abs(float(np.dot(mu.weights, conditional_averages(phi, mu, seq, n)))
                                             - total))
    record_property("max_scaled_error", f"{worst_bound:.3g}")
    record_property("max_mean_gap", f"{worst_mean:.3g}")
    assert worst_bound <= 1.0
    assert worst_mean <= 1e-10


@pytest.mark.criterion(5, "skew product classes are the depth-4 vertical bands")
def test_skew_dynamical_partition(record_property):
    start = time.perf_counter()
    samples = grid_measure(4, 2)
    basis = GeneratorBasis.dyadic(2, 4, FIBERS, min_depth=4)
    part = ergodic.dynamical_partition(SKEW, samples.points, basis, 2, 100_000)
    elapsed = time.perf_counter() - start
    bands = np.minimum(np.floor(samples.points[:, 0] * 16).astype(int), 15)
    expected = sorted(tuple(np.flatnonzero(bands == b)) for b in range(16))
    got = sorted(tuple(c.indices) for c in part.classes)
    record_property("classes", len(part.classes))
    record_property("seconds", f"{elapsed:.2f}")
    assert got == expected
    assert elapsed < 30.0


@pytest.mark.criterion(6, "golden rotation has a single frequency class")
def test_rotation_trivial_decomposition(rotation_decomposition, record_property):
    rot, basis, fam = rotation_decomposition
    assert len(fam) == 1
    (m,) = fam.elements.values()
    rep = ergodic.test_ergodicity(rot, m, basis, 1_000_000, 5e-3)
    record_property("classes", len(fam))
    record_property("spread", f"{rep.max_spread:.3g}")
    assert len(m) == 64
    assert rep.passed


@pytest.mark.criterion(7, "squaring map splits into point masses at 0 and ONE")
def test_squaring_decomposition(squaring_decompositions):
    for (a, b), fam in squaring_decompositions.items():
        got = {tuple(m.points[:, 0]): (fam.quotient[k], m.weights.tolist()) for k, m in fam.elements.items()}
        assert got == {(0.0,): (a, [1.0]), (ONE,): (b, [1.0])}
        for m in fam.elements.values():
            rep = ergodic.test_invariance(SQ, m, 8, 0.0)
            assert rep.tv == 0.0 and rep.passed


@pytest.mark.criterion(8, "conditionals inherit non-singularity and fiber invariance")
def test_inheritance(skew_decomposition, rotation_decomposition, squaring_decompositions, torus_fibers,
                     record_property):
    skew_fam = skew_decomposition
    rot, _, rot_fam = rotation_decomposition
    families = [(SKEW, skew_fam, 4), (rot, rot_fam, 6)]
    families += [(SQ, fam, 8) for fam in squaring_decompositions.values()]
    checked = 0
    for sys, fam, res in families:
        for m in fam.elements.values():
            assert ergodic.test_nonsingularity(sys, m, res)
            checked += 1
    worst = 0.0
    for m in torus_fibers.elements.values():
        rep = ergodic.test_invariance(SKEW, m, 10, 2 * 2.0 ** -10)
        worst = max(worst, rep.tv)
        assert rep.passed
    record_property("nonsingular_checked", checked)
    record_property("max_fiber_tv", f"{worst:.3g}")


def _dyadic_weight_measure(rng, n_atoms, dim):
    counts = rng.multinomial(4096, np.full(n_atoms, 1 / n_atoms))
    keep = counts > 0
    return AtomicMeasure(rng.random((n_atoms, dim))[keep], counts[keep] / 4096)


@pytest.mark.criterion(9, "cylinder additivity, separation and nonempty codes")
def test_symbolic_suite(record_property):
    rng = np.random.default_rng(9)
    measures = [
        ("grid", grid_measure(8), GeneratorBasis.dyadic(1, 3)),
        ("atoms_with_one", AtomicMeasure([[0.0], [0.3], [ONE]], [0.25, 0.25, 0.5]), GeneratorBasis.dyadic(1, 3)),
        ("random_torus", _dyadic_weight_measure(rng, 50, 2), GeneratorBasis.dyadic(2, 2)),
    ]
    checked = 0
    for _, mu, basis in measures:
        for n in range(9):
            for prefix in itertools.product((0, 1), repeat=n):
                whole = cylinder_measure(mu, prefix, basis)
                assert whole == cylinder_measure(mu, prefix + (0,), basis) + cylinder_measure(mu, prefix + (1,), basis)
                checked += 1
    for depth in (8, 9):
        basis = GeneratorBasis.dyadic(1, depth)
        codes = encode_many(grid_measure(8).points, basis)
        assert len({c.tobytes() for c in codes}) == 256
    basis = GeneratorBasis.dyadic(1, 8)
    for code in encode_many(grid_measure(8).points, basis):
        assert check_image_properties(code, basis).nonempty
    for _, mu, basis in measures[1:]:
        for code in encode_many(mu.points, basis):
            assert check_image_properties(code, basis).nonempty
    record_property("prefixes_checked", checked)


@pytest.mark.criterion(10, "visit frequencies are additive over disjoint sets")
def test_frequency_additivity(record_property):
    rng = np.random.default_rng(10)
    builders = [
        lambda: SystemSpec.rotation(GOLDEN),
        SystemSpec.doubling,
        lambda: SystemSpec.skew_product(int(rng.integers(1, 4))),
        SystemSpec.cat_map,
        SystemSpec.squaring,
    ]
    for _ in range(100):
        sys = builders[rng.integers(len(builders))]()
        x = rng.random(sys.dim)
        boxes = dyadic_boxes(sys.dim, 3)
        a = MeasurableSet.empty(sys.dim)
        for i in rng.choice(len(boxes), size=3, replace=False):
            a = a | boxes[i]
        b = MeasurableSet.empty(sys.dim)
        for i in rng.choice(len(boxes), size=3, replace=False):
            b = b | boxes[i]
        b = b - a
        n = int(2 ** rng.integers(8, 15))
        fa, fb, fab = (ergodic.visit_frequency(sys, x, s, n) for s in (a, b, a | b))
        assert fab == fa + fb
    record_property("triples", 100)

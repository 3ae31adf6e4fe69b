import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergodec.disintegration import (
    ConditionalFamily,
    PartitionMismatch,
    conditional_average,
    conditional_averages,
    conditional_probability,
    corrupt,
    disintegrate,
    disintegrate_finite,
    family_from_conditional_probabilities,
    martingale_limit,
    uniqueness_check,
    verify_disintegration,
)
from ergodec.measure import (
    ONE,
    AtomicMeasure,
    MeasurableSet,
    ZeroMassElement,
    dyadic_boxes,
    grid_measure,
    measure_of,
)
from ergodec.partition import CellId, RefiningSequence

FIBERS = (True, False)


def per_band_uniform_family(grid_depth, band_depth):
    """Per-fiber uniform measures built straight from the product grid, without conditioning."""
    k, g = 2 ** band_depth, 2 ** grid_depth
    centers = (np.arange(g) + 0.5) / g
    per_band = g // k
    elements = {}
    for i in range(k):
        xs = centers[i * per_band:(i + 1) * per_band]
        pts = np.array([[x, y] for x in xs for y in centers])
        elements[CellId(band_depth, (i + 1,))] = AtomicMeasure(pts, np.full(len(pts), 1.0 / len(pts)))
    return elements


# --- conditional averages ------------------------------------------------------

def test_constant_function_average():
    mu, seq = grid_measure(6), RefiningSequence(1, 6)
    for n in range(7):
        assert conditional_average(lambda p: np.ones(len(p)), [0.4], mu, seq, n) == 1.0


def test_indicator_average_on_half():
    mu, seq = grid_measure(8), RefiningSequence(1, 8)
    phi = lambda p: (p[:, 0] < 0.5).astype(float)
    assert conditional_average(phi, [0.3], mu, seq, 1) == 1.0


def test_null_cell_average_is_zero():
    mu = AtomicMeasure.dirac(0.1)
    seq = RefiningSequence(1, 4)
    assert conditional_average(lambda p: np.ones(len(p)), [0.9], mu, seq, 2) == 0.0


def test_martingale_constant_converges_at_depth_one():
    mu, seq = grid_measure(6), RefiningSequence(1, 6)
    value, rep = martingale_limit(lambda p: np.full(len(p), 0.7), [0.4], mu, seq, tol=1e-12)
    assert value == pytest.approx(0.7, abs=1e-15) and rep.converged and rep.depth == 1


@pytest.mark.parametrize("k", [2, 3, 4])
def test_martingale_indicator_stabilizes_at_its_depth(k):
    mu, seq = grid_measure(8), RefiningSequence(1, 8)
    cells = [0, 2 ** k - 1]  # 0-based depth-k cells making up A
    a = MeasurableSet(1, tuple((((c / 2 ** k, (c + 1) / 2 ** k),)) for c in cells))
    phi = lambda p: a.contains(p).astype(float)
    x_in = (cells[0] + 0.5) / 2 ** k
    x_out = (cells[0] + 1.5) / 2 ** k
    for x, expected in ((x_in, 1.0), (x_out, 0.0)):
        values = [conditional_average(phi, [x], mu, seq, n) for n in range(9)]
        assert all(v == expected for v in values[k:])
        assert values[0] not in (0.0, 1.0)


def test_martingale_identity_function():
    mu, seq = grid_measure(12), RefiningSequence(1, 12)
    value, rep = martingale_limit(lambda p: p[:, 0], [0.3], mu, seq, tol=1e-9, max_depth=12)
    gaps = np.abs(np.diff(rep.values))
    for n, v in enumerate(rep.values):
        # the cell midpoint
        assert v == pytest.approx((np.floor(0.3 * 2 ** n) + 0.5) / 2 ** n, abs=1e-12)
    assert abs(value - 0.3) <= 2.0 ** -12
    # successive midpoints differ by a quarter of the coarser cell
    assert gaps == pytest.approx(2.0 ** -(np.arange(len(gaps)) + 2), abs=1e-15)
    assert all(abs(v) <= 1.0 for v in rep.values)
    with pytest.raises(ValueError):
        martingale_limit(lambda p: p[:, 0], [0.3], mu, seq, tol=0.0)


@settings(max_examples=40)
@given(st.integers(0, 8), st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_martingale_mean_and_bound(n, coeffs):
    mu, seq = grid_measure(8), RefiningSequence(1, 8)
    a, b, c, d = coeffs
    phi = lambda p: a * np.sin(7 * p[:, 0] + b) + c * np.cos(3 * p[:, 0]) * d
    vals = phi(mu.points)
    avg = conditional_averages(phi, mu, seq, n)
    assert abs(np.dot(mu.weights, avg) - np.dot(mu.weights, vals)) <= 1e-10
    assert np.all(np.abs(avg) <= np.abs(vals).max() + 1e-12)


# --- conditional probabilities -----------------------------------------------

def test_conditional_probability_on_fiber_band():
    mu = grid_measure(6, 2)
    seq = RefiningSequence(2, 5, FIBERS)
    band = CellId(3, (3,))
    assert seq.cell_set(band) == MeasurableSet.box((0.25, 0.375), (0.0, 1.0))
    lower = MeasurableSet.box((0.0, 1.0), (0.0, 0.5))
    assert conditional_probability(lower, band, mu, seq) == 0.5
    assert conditional_probability(MeasurableSet.universe(2), band, mu, seq) == 1.0
    assert conditional_probability(seq.cell_set(band), band, mu, seq) == 1.0


def test_conditional_probability_null_cell():
    seq = RefiningSequence(1, 3)
    with pytest.raises(ZeroMassElement):
        conditional_probability(MeasurableSet.universe(1), CellId(1, (2,)), AtomicMeasure.dirac(0.1), seq)


dyadic = st.integers(0, 8).map(lambda i: i / 8)


@given(st.lists(st.tuples(dyadic, dyadic), min_size=2, max_size=6), st.integers(1, 8))
def test_conditional_probability_finitely_additive(cuts, cell):
    mu, seq = grid_measure(8), RefiningSequence(1, 3)
    pieces = [MeasurableSet.interval(*sorted(c)) for c in cuts]
    a, b = pieces[0], MeasurableSet.empty(1)
    for piece in pieces[1:]:
        b = b | piece
    b = b - a
    p = CellId(3, (cell,))
    ab = conditional_probability(a | b, p, mu, seq)
    assert ab == conditional_probability(a, p, mu, seq) + conditional_probability(b, p, mu, seq)


# --- families ---------------------------------------------------------------------

def test_singleton_partition_gives_point_masses():
    mu = grid_measure(6)
    fam = disintegrate(mu, RefiningSequence(1, 6), 6)
    assert len(fam) == 64
    for cell, m in fam.elements.items():
        assert len(m) == 1 and m.weights[0] == 1.0
        assert seq_center(cell) == m.points[0, 0]
    assert verify_disintegration(fam, mu, tol=1e-12).passed


def seq_center(cell):
    return (2 * cell.index[0] - 1) / 2 ** (cell.depth + 1)


def test_mirror_pairing_partition():
    # [-1, 1] rescaled onto [0, 1): the pair {x, -x} becomes J(i, n) u J(2^n + 1 - i, n)
    n = 5
    k = 2 ** n
    mu = grid_measure(n)
    parts = [MeasurableSet(1, (((i / k, (i + 1) / k),), (((k - 1 - i) / k, (k - i) / k),)))
             for i in range(k // 2)]
    parts.append(MeasurableSet.one())
    fam = disintegrate_finite(mu, parts)
    assert len(fam) == k // 2
    for key, m in fam.elements.items():
        assert m.weights.tolist() == [0.5, 0.5]
        assert m.points[0, 0] + m.points[1, 0] == 1.0
        assert fam.quotient[key] == 2 / k
    assert verify_disintegration(fam, mu, tol=1e-12).passed
    with pytest.raises(ValueError):
        disintegrate_finite(mu, parts[:-2])


def test_fiber_conditionals_are_uniform_per_band():
    mu = grid_measure(6, 2)
    seq = RefiningSequence(2, 6, FIBERS)
    fam = disintegrate(mu, seq, 3)
    direct = per_band_uniform_family(6, 3)
    assert set(direct) == set(fam.keys())
    for key, m in fam.elements.items():
        assert len(m) == len(direct[key])
        assert np.allclose(m.weights, 1 / len(m))
        assert np.array_equal(np.unique(m.points[:, 1]), (np.arange(64) + 0.5) / 64)
    built = ConditionalFamily(direct, dict(fam.quotient), dict(fam.carriers), seq=seq, depth=3)
    assert uniqueness_check(fam, built, 6) <= 1e-12
    table = family_from_conditional_probabilities(mu, seq, 3, 6)
    assert uniqueness_check(fam, table, 6) <= 1e-12


def test_squaring_two_point_partition():
    mu = AtomicMeasure([[0.0], [ONE]], [0.5, 0.5])
    fam = disintegrate(mu, RefiningSequence(1, 0), 0)
    assert fam[CellId(0, (1,))].points.tolist() == [[0.0]]
    assert fam[CellId(0, (2,))].points.tolist() == [[ONE]]
    assert set(fam.quotient.values()) == {0.5}
    assert verify_disintegration(fam, mu, tol=0.0).passed


def test_corrupted_family_residual():
    mu = grid_measure(8, 2)
    seq = RefiningSequence(2, 5, FIBERS)
    fam = disintegrate(mu, seq, 5)
    key = CellId(5, (7,))
    bad = corrupt(fam, key, 0.9)
    cell = seq.cell_set(key)
    rep = verify_disintegration(bad, mu, tests=[cell, MeasurableSet.empty(2)], tol=1e-12)
    assert rep.residuals[0] == pytest.approx(0.1 * fam.quotient[key], rel=1e-12)
    assert rep.residuals[1] == 0.0
    assert not rep.passed
    assert rep.carrier_mass[key] == pytest.approx(0.9)


def test_empty_test_family():
    mu = grid_measure(4)
    fam = disintegrate(mu, RefiningSequence(1, 4), 2)
    rep = verify_disintegration(fam, mu, tests=[MeasurableSet.empty(1)], tol=1e-12)
    assert rep.max_residual == 0.0 and rep.passed


@settings(max_examples=30)
@given(st.lists(st.tuples(st.floats(0, 1, exclude_max=True), st.integers(1, 9)), min_size=1, max_size=20),
       st.integers(0, 5))
def test_identity_for_random_measures(atoms, depth):
    mu = AtomicMeasure.normalized([[a] for a, _ in atoms], [w for _, w in atoms])
    fam = disintegrate(mu, RefiningSequence(1, 5), depth)
    assert sum(fam.quotient.values()) == pytest.approx(1.0, abs=1e-12)
    rep = verify_disintegration(fam, mu, tol=1e-12)
    assert rep.passed, rep.max_residual


def test_monotone_chain():
    mu = grid_measure(8)
    fam = disintegrate(mu, RefiningSequence(1, 8), 3)
    chain = [MeasurableSet.interval(0.0, 1 - 2.0 ** -k) for k in range(1, 11)]
    values = [fam.mixture(e) for e in chain]
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert values[-1] == fam.mixture(MeasurableSet.interval(0.0, 1.0)) == 1.0


def test_uniqueness_identical_and_mismatched():
    mu = grid_measure(6, 2)
    fibers = disintegrate(mu, RefiningSequence(2, 4, FIBERS), 3)
    assert uniqueness_check(fibers, fibers, 6) == 0.0
    horizontal = disintegrate(mu, RefiningSequence(2, 4, (False, True)), 3)
    with pytest.raises(PartitionMismatch):
        uniqueness_check(fibers, horizontal, 6)


def test_default_tests_cover_boxes():
    mu = grid_measure(5, 2)
    fam = disintegrate(mu, RefiningSequence(2, 5), 2)
    rep = verify_disintegration(fam, mu)
    assert len(rep.tests) == len(dyadic_boxes(2, 2))
    assert rep.passed
    assert measure_of(mu, rep.tests[0]) == 1.0

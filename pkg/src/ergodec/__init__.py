"""Disintegration of atomic measures over measurable partitions and ergodic decomposition
via visit-frequency classes."""
from ergodec.disintegration import (
    ConditionalFamily,
    conditional_average,
    conditional_probability,
    disintegrate,
    martingale_limit,
    uniqueness_check,
    verify_disintegration,
)
from ergodec.ergodic import dynamical_partition, ergodic_decomposition, visit_frequency
from ergodec.measure import (
    ONE,
    AtomicMeasure,
    MeasurableSet,
    PointSet,
    condition_on,
    grid_measure,
    measure_of,
    pushforward,
    tv_distance,
)
from ergodec.partition import CellId, RefiningSequence, cell_of, quotient_measure
from ergodec.symbolic import GeneratorBasis, cylinder_measure, cylinder_preimage, encode
from ergodec.systems import GOLDEN, SystemSpec, apply, orbit

__version__ = "0.1.0"

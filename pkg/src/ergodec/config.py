"""Experiment configuration: YAML in, dataclasses inside, YAML out."""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ergodec.measure import ONE, AtomicMeasure, grid_measure
from ergodec.partition import RefiningSequence
from ergodec.symbolic import GeneratorBasis
from ergodec.systems import GOLDEN, SystemSpec


class ConfigError(ValueError):
    pass


@dataclass
class SystemConfig:
    kind: str = "rotation"
    alpha: float | None = None


@dataclass
class MeasureConfig:
    """Exactly one of ``grid_depth``, ``atoms_file``, ``atoms`` or ``random`` is used,
    checked in that order.  ``atoms`` rows are ``[coords..., weight]`` and the
    string ``ONE`` may stand for the coordinate 1."""

    grid_depth: int | None = None
    atoms_file: str | None = None
    atoms: list | None = None
    random: int | None = None


@dataclass
class PartitionConfig:
    depth: int = 5
    axis_mask: list[bool] | None = None


@dataclass
class GeneratorConfig:
    depth: int = 3
    min_depth: int = 0
    axis_mask: list[bool] | None = None


@dataclass
class Tolerances:
    tol_disint: float = 1e-9
    tol_freq: float = 5e-3
    tol_inv: float = 1e-9


@dataclass
class TestSwitches:
    __test__ = False

    ergodicity: bool = True
    invariance: bool = True
    nonsingularity: bool = True


@dataclass
class OutputConfig:
    path: str | None = None
    format: str = "csv"


@dataclass
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    measure: MeasureConfig = field(default_factory=MeasureConfig)
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    generators: GeneratorConfig = field(default_factory=GeneratorConfig)
    orbit_length: int = 100_000
    cuts_depth: int = 2
    resolution_depth: int = 4
    tolerances: Tolerances = field(default_factory=Tolerances)
    tests: TestSwitches = field(default_factory=TestSwitches)
    seed: int = 0
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> ExperimentConfig:
        try:
            self.system_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        depths = [self.partition.depth, self.generators.depth, self.generators.min_depth,
                  self.cuts_depth, self.resolution_depth]
        if self.measure.grid_depth is not None:
            depths.append(self.measure.grid_depth)
        if any(d < 0 for d in depths):
            raise ConfigError("depths must be non-negative")
        if self.generators.min_depth > self.generators.depth:
            raise ConfigError("generators.min_depth exceeds generators.depth")
        if self.orbit_length < 1:
            raise ConfigError("orbit_length must be at least 1")
        if any(v <= 0 for v in dataclasses.astuple(self.tolerances)):
            raise ConfigError("tolerances must be positive")
        if self.output.format not in ("csv", "json-lines"):
            raise ConfigError("output.format must be csv or json-lines")
        return self

    # builders
    def system_spec(self) -> SystemSpec:
        kind, alpha = self.system.kind, self.system.alpha
        if kind == "rotation":
            return SystemSpec.rotation(GOLDEN if alpha is None else alpha)
        if kind == "skew":
            return SystemSpec.skew_product(1 if alpha is None else int(alpha))
        return SystemSpec(kind)

    def build_measure(self, base_dir: Path | None = None) -> AtomicMeasure:
        dim = self.system_spec().dim
        m = self.measure
        if m.grid_depth is not None:
            return grid_measure(m.grid_depth, dim)
        if m.atoms_file is not None:
            path = Path(m.atoms_file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return read_atoms(path)
        if m.atoms is not None:
            return _atoms_from_rows(m.atoms)
        if m.random is not None:
            rng = np.random.default_rng(self.seed)
            return AtomicMeasure(rng.random((m.random, dim)), np.full(m.random, 1.0 / m.random))
        raise ConfigError("measure needs grid_depth, atoms_file, atoms or random")

    def refining_sequence(self) -> RefiningSequence:
        return RefiningSequence(self.system_spec().dim, self.partition.depth, self.partition.axis_mask)

    def generator_basis(self) -> GeneratorBasis:
        g = self.generators
        return GeneratorBasis.dyadic(self.system_spec().dim, g.depth, g.axis_mask, g.min_depth)

    # serialization
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        return _build(cls, data or {}).validate()

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_dict(data)


def _build(cls, data):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping for {cls.__name__}")
    hints = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(hints)
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        f = hints[name]
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value)
        else:
            kwargs[name] = _coerce(name, f.type, value)
    return cls(**kwargs)


def _coerce(name: str, type_str, value):
    # Annotations are strings under postponed evaluation.
    t = str(type_str)
    if value is None:
        return None
    try:
        if t.startswith("float"):
            return float(value)
        if t.startswith("int"):
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError
            return int(value)
        if t == "bool":
            if not isinstance(value, bool):
                raise ValueError
            return value
        if t.startswith("str"):
            return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc
    return value


def _atoms_from_rows(rows) -> AtomicMeasure:
    try:
        pts = [[ONE if str(c).strip().upper() == "ONE" else float(c) for c in row[:-1]] for row in rows]
        ws = [float(row[-1]) for row in rows]
        return AtomicMeasure(np.array(pts), np.array(ws))
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad atom list: {exc}") from exc


def read_atoms(path) -> AtomicMeasure:
    """Read an atom list CSV with a header and the weight in the last column."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read atoms file {path}: {exc}") from exc
    return _atoms_from_rows([r for r in rows[1:] if r])

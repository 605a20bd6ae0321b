import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np

from conjlab.config import settings
from conjlab.errors import (
    EmptyEffectiveDomain,
    InvalidCoefficients,
    InvalidGrid,
    InvalidMeasure,
    InvalidSchedule,
    InvalidSimplexPoint,
    InvalidSystem,
)
from conjlab.utils import dumps_report

# Extended-real sentinels. Only explicit branches produce them.
POS_INF = math.inf
NEG_INF = -math.inf


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


class Command(str, enum.Enum):
    SERIES = "series"
    ENTROPY = "entropy"
    CONJUGATE = "conjugate"
    DYNSYS = "dynsys"
    VERIFY = "verify"


class OutputFormat(str, enum.Enum):
    JSON = "json"
    CSV = "csv"


class DivergenceGenerator(str, enum.Enum):
    INVERSE_SQUARE = "inverse_square"
    INVERSE_N_LOG_SQ = "inverse_n_log_sq"


@dataclass(frozen=True, eq=False)
class CoefficientSeq:
    """Truncated representative c_0..c_N of a bounded coefficient sequence"""
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidCoefficients("coefficients must be a nonempty 1-D sequence")
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise InvalidCoefficients(f"coefficient {int(bad[0])} is not finite")
        object.__setattr__(self, "coeffs", _frozen_array(arr))

    @property
    def trunc_N(self) -> int:
        return self.coeffs.size - 1

    @property
    def sup(self) -> float:
        return float(self.coeffs.max())

    def head(self, N: int) -> np.ndarray:
        return self.coeffs[: N + 1]

    def shifted(self, s: float) -> "CoefficientSeq":
        return CoefficientSeq(self.coeffs + s)

    @classmethod
    def zeros(cls, N: int) -> "CoefficientSeq":
        return cls(np.zeros(N + 1))


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    """Probability weights t_0..t_N; truncation makes the mean index finite"""
    weights: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.weights, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidSimplexPoint("weights must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise InvalidSimplexPoint("weights must be finite")
        negative = np.flatnonzero(arr < 0)
        if negative.size:
            raise InvalidSimplexPoint(f"weight {int(negative[0])} is negative")
        total = math.fsum(arr)
        if abs(total - 1.0) > settings.SIMPLEX_TOL:
            raise InvalidSimplexPoint(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "weights", _frozen_array(arr))

    @property
    def trunc_N(self) -> int:
        return self.weights.size - 1

    def is_point_mass(self, index: int = 0) -> bool:
        return bool(abs(1.0 - self.weights[index]) <= settings.SIMPLEX_TOL)

    @classmethod
    def normalized(cls, raw: Iterable[float]) -> "SimplexWeights":
        arr = np.asarray(list(raw), dtype=float)
        total = arr.sum()
        if not np.isfinite(total) or total <= 0:
            raise InvalidSimplexPoint("cannot normalize weights with nonpositive total")
        return cls(arr / total)

    @classmethod
    def point_mass(cls, index: int, N: int) -> "SimplexWeights":
        arr = np.zeros(N + 1)
        arr[index] = 1.0
        return cls(arr)

    @classmethod
    def uniform(cls, N: int) -> "SimplexWeights":
        return cls(np.full(N + 1, 1.0 / (N + 1)))


@dataclass(frozen=True)
class PartialSumTrace:
    """Partial sums of a series recorded at increasing truncation points"""
    checkpoints: Tuple[Tuple[int, float], ...]
    tail_bound: float | None = None

    def __post_init__(self):
        if not self.checkpoints:
            raise InvalidSchedule("a trace needs at least one checkpoint")
        Ns = [n for n, _ in self.checkpoints]
        if any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise InvalidSchedule("checkpoint indices must be strictly increasing")

    @property
    def final(self) -> float:
        return self.checkpoints[-1][1]

    def value_at(self, N: int) -> float:
        for n, value in self.checkpoints:
            if n == N:
                return value
        raise KeyError(N)


@dataclass(frozen=True)
class Axis:
    """Uniform grid lo..hi with count nodes (endpoints included)"""
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise InvalidGrid(f"axis needs at least 2 nodes, got {self.count}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo >= self.hi:
            raise InvalidGrid(f"axis bounds must satisfy lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack


def grid_points(axes: Sequence[Axis]) -> np.ndarray:
    """Nodes of the product grid as an (M, d) array in C order"""
    mesh = np.meshgrid(*[a.nodes for a in axes], indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True, eq=False)
class GriddedFunction:
    """Extended-real function sampled on a rectangular grid; +inf marks off-domain nodes"""
    axes: Tuple[Axis, ...]
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        if not axes:
            raise InvalidGrid("a gridded function needs at least one axis")
        vals = np.array(self.values, dtype=float).reshape(tuple(a.count for a in axes))
        if np.isnan(vals).any():
            raise InvalidGrid("values may not contain NaN")
        if (vals == -np.inf).any():
            raise InvalidGrid("values may not contain -inf")
        if not np.isfinite(vals).any():
            raise EmptyEffectiveDomain("function has no finite value on the grid")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", _frozen_array(vals))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(a.count for a in self.axes)

    @property
    def domain(self) -> np.ndarray:
        return np.isfinite(self.values)

    def points(self) -> np.ndarray:
        return grid_points(self.axes)

    def finite_nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """(points, values) restricted to the effective domain"""
        mask = self.domain.ravel()
        return self.points()[mask], self.values.ravel()[mask]

    @classmethod
    def sample(cls, axes: Sequence[Axis], fn: Callable[[np.ndarray], np.ndarray]) -> "GriddedFunction":
        axes = tuple(axes)
        vals = np.asarray(fn(grid_points(axes)), dtype=float)
        return cls(axes, vals.reshape(tuple(a.count for a in axes)))


@dataclass(frozen=True)
class FiniteDynSystem:
    """Finite state set {0..m-1}, self-map alpha and the L^p exponent p"""
    m: int
    alpha: Tuple[int, ...]
    p: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise InvalidSystem("state count must be positive")
        alpha = tuple(int(a) for a in self.alpha)
        if len(alpha) != self.m:
            raise InvalidSystem(f"map has {len(alpha)} entries for {self.m} states")
        for i, image in enumerate(alpha):
            if not 0 <= image < self.m:
                raise InvalidSystem(f"map image {image} is not a state", index=i)
        if not self.p >= 1:
            raise InvalidSystem(f"L^p exponent must be >= 1, got {self.p}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def is_bijective(self) -> bool:
        return len(set(self.alpha)) == self.m

    @classmethod
    def from_json(cls, data: dict) -> "FiniteDynSystem":
        from conjlab.schemas import SystemSpec
        return SystemSpec.from_payload(data)

    @classmethod
    def identity(cls, m: int, p: float = 1.0) -> "FiniteDynSystem":
        return cls(m, tuple(range(m)), p)

    @classmethod
    def cycle(cls, m: int, p: float = 1.0) -> "FiniteDynSystem":
        return cls(m, tuple((i + 1) % m for i in range(m)), p)


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Nonnegative masses on {0..m-1}; total mass may be any nonnegative number"""
    mass: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mass, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidMeasure("mass must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise InvalidMeasure("mass must be finite")
        negative = np.flatnonzero(arr < 0)
        if negative.size:
            raise InvalidMeasure(f"mass {int(negative[0])} is negative")
        object.__setattr__(self, "mass", _frozen_array(arr))

    @property
    def m(self) -> int:
        return self.mass.size

    @property
    def total(self) -> float:
        return math.fsum(self.mass)

    def normalized(self) -> "FiniteMeasure":
        total = self.total
        if total <= 0:
            raise InvalidMeasure("cannot normalize the zero measure")
        return FiniteMeasure(self.mass / total)

    def scaled(self, factor: float) -> "FiniteMeasure":
        return FiniteMeasure(self.mass * factor)

    @classmethod
    def zero(cls, m: int) -> "FiniteMeasure":
        return cls(np.zeros(m))

    @classmethod
    def uniform_on(cls, states: Iterable[int], m: int) -> "FiniteMeasure":
        states = list(states)
        arr = np.zeros(m)
        arr[states] = 1.0 / len(states)
        return cls(arr)


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """phi = ln a on the finite state set"""
    phi: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.phi, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidSystem("phi must be a nonempty 1-D sequence")
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise InvalidSystem("phi value is not finite", index=int(bad[0]))
        object.__setattr__(self, "phi", _frozen_array(arr))

    @property
    def m(self) -> int:
        return self.phi.size

    @classmethod
    def from_json(cls, data: dict) -> "WeightFunction":
        from conjlab.schemas import WeightSpec
        return WeightSpec.from_payload(data)

    @classmethod
    def constant(cls, value: float, m: int) -> "WeightFunction":
        return cls(np.full(m, float(value)))


@dataclass(frozen=True)
class TildePoint:
    """Dual point (t, a) of the log-partition functional in (c, ln r)"""
    t: SimplexWeights
    a: float


@dataclass(frozen=True)
class HatDualPoint:
    """Dual point (t, mu_bar) of the composite spectral functional"""
    t: SimplexWeights
    mu_bar: FiniteMeasure


@dataclass(frozen=True)
class TiltedSolution:
    weights: SimplexWeights
    tilt: float
    value: float


@dataclass(frozen=True)
class LambdaStarEstimate:
    """Grid estimate of lambda* with the box radius it was computed on"""
    value: float
    box_radius: float
    infinite: bool = field(default=False)

    @property
    def extended_value(self) -> float:
        return POS_INF if self.infinite else self.value


@dataclass(frozen=True)
class SeriesRadiusPair:
    via_matrix: float
    via_scalar: float
    tail_bound: float

    @property
    def discrepancy(self) -> float:
        return abs(self.via_matrix - self.via_scalar)


@dataclass(frozen=True)
class ConvexityRecord:
    """Outcome of a random-segment midpoint probe"""
    max_violation: float
    trials: int
    admissible: int
    max_mixing_error: float = 0.0
    inadmissible_midpoints: int = 0
    violations: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class BruteForceGrids:
    """Per-coordinate axes of the (c, phi) grid used for brute-force joint conjugation"""
    c_axis: Axis
    phi_axis: Axis
    probes: int = 20


@dataclass
class VerificationReport:
    fenchel_young_min_gap: float
    attainment_residual: float
    bruteforce_max_discrepancy: float | None
    hat_lambda: float
    spectral_exponent: float
    probes: List[dict] = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        ok = (self.fenchel_young_min_gap >= -self.tolerances.get("fenchel_young_gap", 0.0)
              and self.attainment_residual <= self.tolerances.get("attainment", math.inf))
        if self.bruteforce_max_discrepancy is not None:
            ok = ok and self.bruteforce_max_discrepancy <= self.tolerances.get("bruteforce", math.inf)
        return ok

    def as_dict(self) -> dict:
        return {
            "fenchel_young_min_gap": self.fenchel_young_min_gap,
            "attainment_residual": self.attainment_residual,
            "bruteforce_max_discrepancy": self.bruteforce_max_discrepancy,
            "hat_lambda": self.hat_lambda,
            "spectral_exponent": self.spectral_exponent,
            "passed": self.passed,
            "probes": self.probes,
            "tolerances": self.tolerances,
        }

    def to_json(self) -> str:
        return dumps_report(self.as_dict())


@dataclass
class CommandResult:
    """What a command handler hands back to the cli: report payload, a plot-ready table, extra grids"""
    payload: dict
    header: List[str]
    rows: List[list]
    tolerances: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)

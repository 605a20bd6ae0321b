from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from conjlab.errors import ConjLabError, InvalidSystem
from conjlab.models import (
    Axis,
    BruteForceGrids,
    CoefficientSeq,
    Command,
    DivergenceGenerator,
    FiniteDynSystem,
    FiniteMeasure,
    OutputFormat,
    WeightFunction,
)


def _domain_cause(exc: ValidationError) -> Optional[ConjLabError]:
    for err in exc.errors():
        cause = (err.get("ctx") or {}).get("error")
        if isinstance(cause, ConjLabError):
            return cause
    return None


# Scenario config
class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Command
    params: Dict[str, Any] = Field(default_factory=dict)
    output_path: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON
    seed: int = 0
    threads: int = Field(default=1, ge=1)


# Shared pieces
class AxisSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lo: float
    hi: float
    count: int = Field(ge=2)

    @model_validator(mode="after")
    def check_bounds(self):
        if not self.lo < self.hi:
            raise ValueError(f"axis bounds must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        return self

    def to_model(self) -> Axis:
        return Axis(self.lo, self.hi, self.count)


class SystemSpec(BaseModel):
    """{"states": m, "map": [images], "p": real}"""
    model_config = ConfigDict(extra="forbid")

    states: int = Field(ge=1)
    map: List[int]
    p: float = 1.0

    @model_validator(mode="after")
    def check_map(self):
        self.to_model()
        return self

    def to_model(self) -> FiniteDynSystem:
        return FiniteDynSystem(self.states, tuple(self.map), self.p)

    @classmethod
    def from_payload(cls, data: dict) -> FiniteDynSystem:
        try:
            return cls.model_validate(data).to_model()
        except ValidationError as exc:
            raise _domain_cause(exc) or InvalidSystem(str(exc)) from exc


class WeightSpec(BaseModel):
    """{"phi": [reals]}"""
    model_config = ConfigDict(extra="forbid")

    phi: List[float] = Field(min_length=1)

    @model_validator(mode="after")
    def check_phi(self):
        self.to_model()
        return self

    def to_model(self) -> WeightFunction:
        return WeightFunction(self.phi)

    @classmethod
    def from_payload(cls, data: dict) -> WeightFunction:
        try:
            return cls.model_validate(data).to_model()
        except ValidationError as exc:
            raise _domain_cause(exc) or InvalidSystem(str(exc)) from exc


class CoefficientParams(BaseModel):
    """Coefficients as an explicit list or "zeros" of length K (or N + 1)"""
    c: Union[Literal["zeros"], List[float]] = "zeros"
    K: Optional[int] = Field(default=None, ge=1)
    N: Optional[int] = Field(default=None, ge=0)

    def coefficients(self, N: int) -> CoefficientSeq:
        if self.c == "zeros":
            return CoefficientSeq.zeros(max(N, (self.K or 0) - 1))
        return CoefficientSeq(self.c)


# Per-command params
class SeriesParams(CoefficientParams):
    model_config = ConfigDict(extra="forbid")

    rho: float
    eps: Optional[float] = Field(default=None, gt=0)
    head: int = Field(default=10, ge=1)

    @field_validator("rho")
    @classmethod
    def rho_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"NonPositiveRho: rho must be positive, got {v}")
        return v


class EntropyParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: Literal["geometric", "divergence", "tilted", "mean_bound", "h_r"] = "geometric"
    r: float = Field(default=0.5, gt=0, lt=1)
    N: Optional[int] = Field(default=None, ge=0)
    generator: DivergenceGenerator = DivergenceGenerator.INVERSE_SQUARE
    schedule: List[int] = Field(default_factory=list)
    a_log: Union[Literal["zeros"], List[float]] = "zeros"
    target_mean: Optional[float] = Field(default=None, ge=0)
    trials: int = Field(default=200, ge=1)

    @model_validator(mode="after")
    def check_task(self):
        if self.task == "divergence" and not self.schedule:
            raise ValueError("divergence needs a nonempty schedule")
        if self.task == "tilted" and self.target_mean is None:
            raise ValueError("tilted needs target_mean")
        if self.task in ("mean_bound", "h_r") and self.N is None:
            raise ValueError(f"{self.task} needs N")
        if self.task == "tilted" and self.N is None and self.a_log == "zeros":
            raise ValueError("tilted needs N or an explicit a_log")
        return self


class ConjugateParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    function: Literal["logsumexp", "quadratic", "abs", "double_well", "grid"] = "logsumexp"
    primal: List[AxisSpec] = Field(default_factory=list)
    dual: List[AxisSpec] = Field(default_factory=list)
    grid_path: Optional[str] = None
    dual_points: List[List[float]] = Field(default_factory=list)
    compare: Literal["none", "neg_entropy", "quadratic"] = "none"
    biconjugate: bool = False
    fast_1d: bool = False
    convexity_trials: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_function(self):
        if self.function == "grid" and not self.grid_path:
            raise ValueError("function 'grid' needs grid_path")
        if self.function != "grid" and not self.primal:
            raise ValueError(f"function {self.function!r} needs primal axes")
        return self


class MeasureSpec(BaseModel):
    mass: List[float] = Field(min_length=1)

    def to_model(self) -> FiniteMeasure:
        return FiniteMeasure(self.mass)


class DynsysParams(CoefficientParams):
    model_config = ConfigDict(extra="forbid")

    system: SystemSpec
    phi: List[float] = Field(min_length=1)
    measures: List[MeasureSpec] = Field(default_factory=list)
    phi_box: Optional[AxisSpec] = None
    a_log: Optional[List[float]] = None
    series: bool = True


class VerifyParams(CoefficientParams):
    model_config = ConfigDict(extra="forbid")

    system: SystemSpec
    phi: List[float] = Field(min_length=1)
    oracle: Literal["numeric", "indicator"] = "numeric"
    probes: int = Field(default=100, ge=1)
    c_axis: Optional[AxisSpec] = None
    phi_axis: Optional[AxisSpec] = None
    grid_probes: int = Field(default=20, ge=1)
    convexity_trials: int = Field(default=200, ge=0)

    @model_validator(mode="after")
    def check_grids(self):
        if (self.c_axis is None) != (self.phi_axis is None):
            raise ValueError("brute-force check needs both c_axis and phi_axis")
        return self

    def grids(self) -> Optional[BruteForceGrids]:
        if self.c_axis is None:
            return None
        return BruteForceGrids(self.c_axis.to_model(), self.phi_axis.to_model(), self.grid_probes)


PARAMS_BY_COMMAND = {
    Command.SERIES: SeriesParams,
    Command.ENTROPY: EntropyParams,
    Command.CONJUGATE: ConjugateParams,
    Command.DYNSYS: DynsysParams,
    Command.VERIFY: VerifyParams,
}


# Exit report
class ExitReport(BaseModel):
    command: str
    status: int
    message: str = "ok"
    artifacts: List[str] = Field(default_factory=list)
    tolerances: Dict[str, float] = Field(default_factory=dict)

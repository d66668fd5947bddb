"""Request and response models for the service and the CLI.

The run/audit request mirrors the experiment-config JSON: {strategy,
params, N, seed, regime, settings, diagnosis_mode}, where each setting
is either an xz-plane angle in degrees or an explicit 3-vector.  Unknown
keys are rejected so a malformed config fails before any computation.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..lhv import MemoryMode
from ..protocol import ExperimentSpec, Settings
from ..qmoracle import UnitVector3

SettingValue = Union[float, List[float]]

DEFAULT_ANGLES = [float(a) for a in range(0, 181, 15)]


def _to_unit_vector(value: SettingValue) -> UnitVector3:
    if isinstance(value, (int, float)):
        return UnitVector3.from_xz_degrees(float(value))
    return UnitVector3(*value)


class SettingsModel(BaseModel):
    """Four directions; degrees in the xz-plane or [x, y, z] components."""

    model_config = ConfigDict(extra="forbid")

    a1: SettingValue = 0.0
    a2: SettingValue = 90.0
    b1: SettingValue = 45.0
    b2: SettingValue = -45.0

    @field_validator("a1", "a2", "b1", "b2")
    @classmethod
    def _vector_shape(cls, v):
        if isinstance(v, list) and len(v) != 3:
            raise ValueError("a setting vector needs exactly 3 components")
        return v

    def to_settings(self) -> Settings:
        return Settings(
            a1=_to_unit_vector(self.a1),
            a2=_to_unit_vector(self.a2),
            b1=_to_unit_vector(self.b1),
            b2=_to_unit_vector(self.b2),
        )


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    strategy: str
    params: dict = Field(default_factory=dict)
    N: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    regime: Literal["memoryless", "memory"] = "memoryless"
    settings: SettingsModel = Field(default_factory=SettingsModel)
    diagnosis_mode: bool = False

    def to_spec(self) -> ExperimentSpec:
        return ExperimentSpec(
            strategy=self.strategy,
            n_trials=self.N,
            seed=self.seed,
            settings=self.settings.to_settings(),
            regime=MemoryMode(self.regime),
            diagnosis_mode=self.diagnosis_mode,
            params=dict(self.params),
        )


class AuditRequest(RunRequest):
    pass


class BellReport(BaseModel):
    applicable: bool
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    satisfied: Optional[bool] = None


class ReportedBlock(BaseModel):
    r_ij: Dict[str, float]
    bivector_residual: Dict[str, float]
    S: float
    method: str


class RunResponse(BaseModel):
    schema_version: str
    strategy: str
    seed: int
    N: int
    engine: str
    n_ij: Dict[str, int]
    r_ij: Dict[str, float]
    S: float
    epsilon: float
    bound_constant: float
    tail_bound: float
    bell_1964: BellReport
    reported: Optional[ReportedBlock] = None


class CertifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    i: List[int]
    j: List[int]
    x: List[int]
    y: List[int]
    seed: int = Field(ge=0, lt=2**64)
    strategy: str = "unspecified"


class CertificateModel(BaseModel):
    schema_version: str
    strategy: str
    seed: int
    N: int
    n_ij: Dict[str, int]
    r_ij: Dict[str, float]
    S: float
    epsilon: float
    bound_constant: float
    tail_bound: float


class AssignmentRow(BaseModel):
    a1: int
    a2: int
    b1: int
    b2: int
    s: int


class EnumerateResponse(BaseModel):
    schema_version: str
    rows: List[AssignmentRow]
    max_abs_s: int
    s_values: List[int]


class AssociativityBlock(BaseModel):
    basis_max_residual: float
    random_max_relative_residual: float
    samples: int
    seed: int


class WitnessBlock(BaseModel):
    m_minus_one: List[int]
    m_plus_one: List[int]
    product: List[int]
    product_is_zero: bool
    norm_m_minus_one: float
    norm_m_plus_one: float


class AlgebraCheckResponse(BaseModel):
    schema_version: str
    basis_names: List[str]
    table: List[List[str]]
    m_squared: List[int]
    m_squared_is_one: bool
    witness: WitnessBlock
    norm_multiplicativity_residual: float
    associativity: AssociativityBlock
    passed: bool


class QmCurveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    angles_deg: List[float] = Field(default_factory=lambda: list(DEFAULT_ANGLES))


class QmCurveRow(BaseModel):
    angle_degrees: float
    qm_correlation: float


class QmCurveResponse(BaseModel):
    schema_version: str
    rows: List[QmCurveRow]


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    strategy: str = "sign"
    params: dict = Field(default_factory=dict)
    angles_deg: List[float] = Field(default_factory=lambda: list(DEFAULT_ANGLES))
    n_per_point: int = Field(default=20000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    regime: Literal["memoryless", "memory"] = "memoryless"
    diagnosis_mode: bool = False


class SweepRowModel(BaseModel):
    angle_degrees: float
    lhv_correlation: float
    qm_correlation: float
    reported_correlation: Optional[float] = None


class SweepResponse(BaseModel):
    schema_version: str
    strategy: str
    seed: int
    n_per_point: int
    rows: List[SweepRowModel]


class ViolationModel(BaseModel):
    n: int
    station: str
    recorded: int
    replayed: int


class LocalityBlock(BaseModel):
    n_trials: int
    violation_count: int
    violations: List[ViolationModel]
    truncated: bool
    passed: bool


class ShuffleBlock(BaseModel):
    n_trials: int
    mismatches: int
    passed: bool


class AuditResponse(BaseModel):
    schema_version: str
    strategy: str
    seed: int
    N: int
    locality: LocalityBlock
    shuffle: Optional[ShuffleBlock] = None
    passed: bool

"""Type-safe data records for weights, verification results and runs.

Result records hold plain Python numbers (never numpy arrays) so every report
serializes to JSON without custom encoders.
"""

from __future__ import annotations

from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

SCHEMA_VERSION = "1.0"

Rational = Union[int, float, str, Fraction]


def to_fraction(value: Rational) -> Fraction:
    """Exact rational from an int, a decimal/rational string, or a float."""
    if isinstance(value, bool):
        raise ValueError("booleans are not weight values")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"non-finite weight value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {value!r}") from exc
    raise ValueError(f"unsupported weight value type {type(value).__name__}")


# ==============================================================================
# Weights
# ==============================================================================


class Weight(BaseModel):
    """A nonnegative symbol on Z_n stored as exact rationals."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(..., description="Group order", ge=1)
    values: Tuple[Fraction, ...] = Field(..., description="gamma(0), ..., gamma(n-1)")
    label: str = Field(default="custom", description="Free-form name")

    @field_validator("values", mode="before")
    @classmethod
    def coerce_values(cls, v: Any) -> Tuple[Fraction, ...]:
        """Accept numbers and 'p/q' strings, reject negatives."""
        if isinstance(v, (str, bytes)) or not hasattr(v, "__iter__"):
            raise ValueError("values must be a sequence")
        out = tuple(to_fraction(item) for item in v)
        if not out:
            raise ValueError("values cannot be empty")
        negative = [k for k, item in enumerate(out) if item < 0]
        if negative:
            raise ValueError(f"weight values must be nonnegative, negative at k={negative}")
        return out

    @model_validator(mode="after")
    def check_length(self) -> "Weight":
        if len(self.values) != self.n:
            raise ValueError(f"expected {self.n} values, got {len(self.values)}")
        return self

    @field_serializer("values")
    def serialize_values(self, values: Tuple[Fraction, ...]) -> List[Union[int, str]]:
        return [int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}" for v in values]

    def __getitem__(self, k: int) -> Fraction:
        return self.values[k % self.n]

    def as_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=float)

    def is_symmetric(self) -> bool:
        """gamma(k) == gamma(n-k) for 1 <= k <= n-1."""
        return all(self.values[k] == self.values[self.n - k] for k in range(1, self.n))

    def dominated_by(self, other: "Weight") -> bool:
        """Entrywise self <= other on the same group."""
        return self.n == other.n and all(a <= b for a, b in zip(self.values, other.values))

    def scaled(self, factor: Rational, label: Optional[str] = None) -> "Weight":
        c = to_fraction(factor)
        return Weight(n=self.n, values=tuple(c * v for v in self.values), label=label or f"{c}*{self.label}")


class PointVector(BaseModel):
    """lambda in R_+^n."""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[float, ...] = Field(..., min_length=1)

    @field_validator("entries")
    @classmethod
    def check_nonnegative(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(x < 0 or not np.isfinite(x) for x in v):
            raise ValueError("entries must be finite and nonnegative")
        return v

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)


# ==============================================================================
# Verdict records
# ==============================================================================


class Witness(BaseModel):
    """Inputs that reproduce a failed check."""

    kind: str = Field(..., description="Which inequality or clause failed")
    value: float = Field(..., description="Offending value (negative slack, residual, ...)")
    inputs: Dict[str, Any] = Field(default_factory=dict, description="Everything needed to re-evaluate")


class QuadraticScan(BaseModel):
    """Grid scan of the scalar quadratic inequality for a weight pair."""

    pair: Tuple[Weight, Weight]
    parity: Literal["even", "odd"]
    grid_x: Tuple[float, float, int] = Field(..., description="(x_min, x_max, points), log-spaced plus 0")
    grid_r: Tuple[float, float, int] = Field(..., description="(r_min, r_max, points per axis)")
    min_value: float
    min_location: Tuple[float, float, float] = Field(..., description="(x, r_a, r_b)")
    unbounded: bool = Field(default=False, description="Leading coefficient <= 0 somewhere: no finite minimum")
    analytic_kind: Optional[str] = Field(default=None, description="Closed-form minimum used for cross-check")
    analytic_gap: Optional[float] = Field(default=None, description="max |grid minimum - closed form| over r cells")
    verdict: bool
    witness: Optional[Witness] = None


class PairReport(BaseModel):
    """Pair condition clauses plus (optionally) the quadratic scan."""

    n: int = Field(..., description="Lower group order")
    lower: str
    upper: str
    clauses: Dict[str, bool]
    clause_details: Dict[str, str] = Field(default_factory=dict, description="First offending index per failed clause")
    condition_holds: bool
    quadratic: Optional[QuadraticScan] = None

    @property
    def failing_clauses(self) -> List[str]:
        return [name for name, ok in self.clauses.items() if not ok]

    @property
    def holds(self) -> bool:
        return self.condition_holds and (self.quadratic is None or self.quadratic.verdict)


class DirichletComparison(BaseModel):
    lhs: float
    rhs: float
    holds: bool


class InductionReport(BaseModel):
    """Monte-Carlo check of the chain H_2n <= intermediate <= 2<lam, Gamma(2n) lam>."""

    n: int
    lower: str
    upper: str
    samples: int
    seed: int
    entropy_slack_min: float = Field(..., description="min(intermediate - H_2n)")
    comparison_slack_min: float = Field(..., description="min(2<lam,Gamma lam> - intermediate)")
    verdict: bool
    witnesses: List[Witness] = Field(default_factory=list)


class EntropySplitReport(BaseModel):
    n: int
    samples: int
    seed: int
    max_abs_error: float = Field(..., description="max |inner_a + inner_b + outer - H_2n|")
    max_outer_error: float = Field(..., description="max |outer - H_2[(|a|,|b|)]/n|")
    verdict: bool


# ==============================================================================
# Optimization records
# ==============================================================================


class KKTState(BaseModel):
    """A candidate (lambda, nu) of the absorbed stationary system."""

    model_config = ConfigDict(populate_by_name=True)

    lam: Tuple[float, ...] = Field(..., alias="lambda")
    nu: Tuple[float, ...]
    residual_stationarity: Tuple[float, ...]
    residual_complementarity: Tuple[float, ...]
    norm_constraint_value: float = Field(..., description="||lambda||_2^2")
    feasible: bool

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(np.concatenate([self.residual_stationarity, self.residual_complementarity])))

    @property
    def has_zero_coordinate(self) -> bool:
        return any(x == 0.0 for x in self.lam)


class KKTSearchReport(BaseModel):
    label: str
    n: int
    starts: int
    seed: int
    solutions: List[KKTState] = Field(default_factory=list)
    converged_starts: int = Field(..., description="Starts whose optimizer reported success")
    window_terminations: int = Field(..., description="Starts that ended on the norm-window boundary")
    discarded_starts: int = Field(default=0, description="Starts whose terminal point left the norm window")
    min_residual: float
    residual_histogram: Dict[str, int] = Field(..., description="Terminal residual counts per log10 decade")

    @property
    def verdict(self) -> bool:
        return not self.solutions


class SphereMinimum(BaseModel):
    lam: Tuple[float, ...] = Field(..., alias="lambda")
    value: float
    distance_to_constant: float
    starts: int
    converged_starts: int

    model_config = ConfigDict(populate_by_name=True)


class LsiSamplingReport(BaseModel):
    label: str
    n: int
    samples: int
    seed: int
    sampled_min: float
    sampled_argmin: Tuple[float, ...]
    sphere: Optional[SphereMinimum] = None
    verdict: bool
    witness: Optional[Witness] = None


class RelationCheck(BaseModel):
    relation: str
    max_rel_error: float
    worst_x: float
    difference_error: float = Field(
        default=0.0, description="Max relative gap against mpmath numerical differentiation at spot points"
    )
    holds: bool
    precise_points: int = Field(default=0, description="Grid points re-evaluated with mpmath")


class CascadeReport(BaseModel):
    """Auxiliary chain verification for one base case."""

    case_id: Literal["Z6", "Z4"]
    grid: Tuple[float, float, int] = Field(..., description="(x_min, x_max, points); x - 1 log-spaced")
    x_max_requested: float
    values_at_one: Dict[str, float]
    expected_signs: Dict[str, str] = Field(default_factory=dict, description="'zero' or 'positive'")
    sign_table_ok: bool
    sign_verdicts: Dict[str, bool]
    relation_checks: List[RelationCheck]
    closed_form_checks: Dict[str, float] = Field(default_factory=dict, description="max relative error")
    monotone_chain_ok: bool
    notes: List[str] = Field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return (
            self.sign_table_ok
            and self.monotone_chain_ok
            and all(self.sign_verdicts.values())
            and all(check.holds for check in self.relation_checks)
        )


class RatioAtTime(BaseModel):
    t: float
    ratio: float
    contractive: bool
    uncertain: bool
    extremizer_levels: int = Field(..., description="Distinct values (to 1e-6) of the best f")


class HypTimeEstimate(BaseModel):
    n: int
    label: str
    p: float
    q: float
    t_star: float
    lower_bound: float
    bracket: Tuple[float, float]
    max_ratio_at_t: List[RatioAtTime] = Field(default_factory=list)
    uncertain: bool = False
    signed: bool = False


# ==============================================================================
# Runs
# ==============================================================================


class CommandName(str, Enum):
    VERIFY_LSI = "verify-lsi"
    KKT_SEARCH = "kkt-search"
    CASCADE = "cascade"
    PAIR_CHECK = "pair-check"
    INDUCTION = "induction"
    HYPER_TIME = "hyper-time"
    ENTROPY_SPLIT = "entropy-split"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class RunConfig(BaseModel):
    """Validated command-line configuration."""

    command: CommandName
    n: Optional[int] = Field(default=None, ge=1, le=4096)
    weight: Optional[str] = Field(default=None, description="Builtin name or JSON path")
    pair: Optional[str] = Field(default=None, description="'lower:upper' weight names")
    p: float = Field(default=2.0, gt=1)
    q: float = Field(default=4.0, gt=1)
    samples: Optional[int] = Field(default=None, ge=1)
    starts: Optional[int] = Field(default=None, ge=1)
    resolution: Optional[int] = Field(default=None, ge=50)
    seed: Optional[int] = Field(default=None, ge=0)
    threads: Optional[int] = Field(default=None, ge=1, le=256)
    tol: Optional[float] = Field(default=None, gt=0)
    x_max: Optional[float] = Field(default=None, gt=1)
    case: Literal["Z6", "Z4", "both"] = "both"
    signed: bool = False
    tower: bool = False
    out: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON

    @field_validator("samples", "starts", mode="before")
    @classmethod
    def accept_float_counts(cls, v: Any) -> Any:
        """Allow counts written as 1e6."""
        if isinstance(v, str):
            v = float(v)
        if isinstance(v, float):
            if not v.is_integer():
                raise ValueError(f"count must be integral, got {v}")
            return int(v)
        return v

    @model_validator(mode="after")
    def check_exponents(self) -> "RunConfig":
        if self.q < self.p:
            raise ValueError(f"need p <= q, got p={self.p} q={self.q}")
        return self


class RunReport(BaseModel):
    """Top-level report written by every command."""

    schema_version: str = SCHEMA_VERSION
    command: CommandName
    anchor: str = Field(..., description="Stable identifier of the result the claim belongs to")
    claim: str = Field(..., description="Plain statement of what was checked")
    verdict: bool
    exit_code: int
    config: Dict[str, Any]
    settings: Dict[str, Any]
    details: List[Dict[str, Any]] = Field(default_factory=list)
    witnesses: List[Witness] = Field(default_factory=list)
    table: List[Dict[str, Any]] = Field(default_factory=list, description="Plot-ready rows, the CSV payload")
    generated_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "schema_version": SCHEMA_VERSION,
                "command": "pair-check",
                "anchor": "induction.pair-condition",
                "claim": "pair condition and quadratic inequality for (psi4, psi8)",
                "verdict": False,
                "exit_code": 1,
                "config": {"pair": "psi4:psi8"},
                "settings": {"resolution": 201},
                "details": [],
                "witnesses": [{"kind": "quadratic", "value": -0.17, "inputs": {"x": 1.0, "r_a": 1.0, "r_b": 0.0}}],
                "generated_at": "2026-10-17T10:30:00+00:00",
            }
        }
    )

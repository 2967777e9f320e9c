# Native and installed modules
from dataclasses import dataclass, field
from typing import List, Optional

from marshmallow import Schema, fields


@dataclass
class MomentBoundReport:
    family: str
    t: float
    theta: float
    estimate: float
    se: float
    exact: float
    bound: float
    reps: int
    passed: bool


@dataclass
class SweepRow:
    n: int
    h2: float
    se: float
    theory_bound: float
    slope_fit: float
    radius: float
    m: int
    n_k_min: int
    n_k_max: int
    splitting_ok: bool
    product_bound: float
    product_se: float
    local_rate: float
    h2_local: float


@dataclass
class SweepResult:
    """Hellinger distances along n with the fitted log-log slope."""

    family: str
    beta: float
    rows: List[SweepRow]
    theory_exponent: float
    slope: float
    slope_ci: tuple
    leading_constant: float
    passed: bool
    null_model: bool = False
    rate: str = "global"

    def to_report(self):
        return Report(
            command="distance-sweep",
            family=self.family,
            passed=self.passed,
            summary={
                "beta": self.beta,
                "theory_exponent": self.theory_exponent,
                "slope": self.slope,
                "slope_ci_low": self.slope_ci[0],
                "slope_ci_high": self.slope_ci[1],
                "leading_constant": self.leading_constant,
                "null_model": self.null_model,
                "rate": self.rate,
            },
            rows=[SweepRowModel().dump(row) for row in self.rows],
        )


@dataclass
class Report:
    """Outcome of one workbench command: summary values and result rows."""

    command: str
    family: Optional[str]
    passed: bool
    summary: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    # objects written next to the rows, such as a simulated sample
    artifacts: dict = field(default_factory=dict)


class MomentBoundReportModel(Schema):
    class Meta:
        fields = (
            "family",
            "t",
            "theta",
            "estimate",
            "se",
            "exact",
            "bound",
            "reps",
            "passed",
        )
        ordered = True


class SweepRowModel(Schema):
    n = fields.Integer()
    h2 = fields.Float()
    se = fields.Float()
    theory_bound = fields.Float()
    slope_fit = fields.Float()
    radius = fields.Float()
    m = fields.Integer()
    n_k_min = fields.Integer()
    n_k_max = fields.Integer()
    splitting_ok = fields.Boolean()
    product_bound = fields.Float()
    product_se = fields.Float()
    local_rate = fields.Float()
    h2_local = fields.Float()

    class Meta:
        ordered = True


class ReportModel(Schema):
    command = fields.String()
    family = fields.String(allow_none=True)
    passed = fields.Boolean()
    summary = fields.Dict(keys=fields.String())
    rows = fields.List(fields.Dict(keys=fields.String()))

    class Meta:
        ordered = True

# Native and installed modules
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from marshmallow import Schema, fields

# Custom modules
from model.family import ExpFamilyModel
from utils.errors import InvariantError

PER_COORDINATE = "PerCoordinate"
DYADIC_BLOCKS = "DyadicBlocks"
SCHEMES = (PER_COORDINATE, DYADIC_BLOCKS)


def _frozen(values):
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class CouplingRun:
    """Observations and Gaussian partners built on one probability space.

    u_bar holds the centered statistics U(x_tilde) - b(theta), normals the
    N_i ~ N(0, I(theta_i)) they are coupled to.
    """

    family: ExpFamilyModel
    theta: np.ndarray
    x_tilde: np.ndarray
    normals: np.ndarray
    scheme: str
    seed: Optional[int]
    u_bar: np.ndarray

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvariantError(f"unknown coupling scheme {self.scheme!r}")
        for name in ("theta", "x_tilde", "normals", "u_bar"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        shapes = {self.theta.shape, self.x_tilde.shape, self.normals.shape, self.u_bar.shape}
        if len(shapes) != 1 or self.theta.ndim != 1:
            raise InvariantError(f"coupled arrays disagree in shape: {sorted(shapes)}")

    @property
    def n(self):
        return self.theta.size


@dataclass(frozen=True, eq=False)
class TailFit:
    """Empirical tail of max |S_n(f)| / log^2 n with its log-linear fit."""

    family: str
    theta: float
    n: int
    reps: int
    dict_size: int
    scheme: str
    x_grid: np.ndarray
    survival: np.ndarray
    c1_fit: Optional[float]
    c2_fit: Optional[float]
    r2: Optional[float]
    passed: bool
    refined: bool = False
    degenerate: bool = False
    stat_max: float = math.nan
    # positive survival values on the configured grid and the verdict there
    default_points: int = 0
    default_passed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x_grid", _frozen(self.x_grid))
        object.__setattr__(self, "survival", _frozen(self.survival))
        if self.x_grid.shape != self.survival.shape:
            raise InvariantError("x_grid and survival differ in length")
        if np.any(np.diff(self.survival) > 0):
            raise InvariantError("survival must be nonincreasing in x")

    def fitted(self):
        if self.c1_fit is None or self.c2_fit is None or np.isnan(self.c2_fit):
            return np.full(self.x_grid.shape, np.nan)
        return self.c1_fit * np.exp(-self.c2_fit * self.x_grid)

    def rows(self):
        return [
            {"x": float(x), "survival": float(s), "fitted": float(f)}
            for x, s, f in zip(self.x_grid, self.survival, self.fitted())
        ]


@dataclass(frozen=True)
class GrowthFit:
    """Growth of the median dictionary maximum of |S_n(f)| along n."""

    family: str
    theta: float
    coupled: bool
    n_list: List[int]
    medians: List[float]
    exponent: float
    r2: Optional[float]


class TailFitModel(Schema):
    family = fields.String()
    theta = fields.Float()
    n = fields.Integer()
    reps = fields.Integer()
    dict_size = fields.Integer()
    scheme = fields.String()
    c1_fit = fields.Float(allow_none=True)
    c2_fit = fields.Float(allow_none=True)
    r2 = fields.Float(allow_none=True)
    refined = fields.Boolean()
    degenerate = fields.Boolean()
    stat_max = fields.Float()
    default_points = fields.Integer()
    default_passed = fields.Boolean()
    passed = fields.Boolean()

    class Meta:
        ordered = True


class GrowthFitModel(Schema):
    class Meta:
        fields = ("family", "theta", "coupled", "n_list", "medians", "exponent", "r2")
        ordered = True

# Native and installed modules
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from marshmallow import Schema
from scipy import integrate

# Custom modules
from model.grid_function import GridFunction
from utils.errors import InvariantError

_MASS_TOL = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """Bounded smoothing kernel supported on [-tau, tau] with unit mass."""

    tau: float
    k_max: float
    evaluator: Callable = field(repr=False)
    holder_beta: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        if not self.tau > 0:
            raise InvariantError(f"kernel support tau={self.tau} must be positive")
        mass, _ = integrate.quad(lambda u: float(self(u)), -self.tau, self.tau)
        if abs(mass - 1) > _MASS_TOL:
            raise InvariantError(f"kernel {self.name} integrates to {mass}, not 1")
        grid = np.linspace(-2 * self.tau, 2 * self.tau, 801)
        values = self(grid)
        if np.any(values < 0) or np.any(values > self.k_max * (1 + 1e-12)):
            raise InvariantError(f"kernel {self.name} leaves [0, k_max]")
        if np.any(values[np.abs(grid) >= self.tau] != 0):
            raise InvariantError(f"kernel {self.name} does not vanish outside the support")

    def __call__(self, u):
        return np.asarray(self.evaluator(np.asarray(u, dtype=float)), dtype=float)


@dataclass(frozen=True, eq=False)
class EstimatorOutput:
    """Stages of the preliminary estimator on the design grid."""

    g_star: GridFunction
    rho: GridFunction
    bandwidth: float
    g_starstar: Optional[GridFunction] = None
    f_star: Optional[GridFunction] = None
    # |f* - f| <= lipschitz |g** - g| pointwise
    lipschitz: Optional[float] = None


class KernelSpecModel(Schema):
    class Meta:
        fields = ("name", "tau", "k_max", "holder_beta")
        ordered = True


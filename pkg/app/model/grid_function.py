"""Functions on the uniform design t_i = i/n and the rate constants."""

# Native and installed modules
import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

# Custom modules
from utils.errors import InvariantError


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray
    beta: float = 1.0
    holder_const: float = 1.0
    theta0: Optional[Tuple[float, float]] = None
    in_sigma: bool = False
    # set when the Hoelder generator had to return the constant midpoint
    degenerate: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise InvariantError("grid function values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.in_sigma and self.theta0 is not None:
            lo, hi = self.theta0
            if values.min() < lo or values.max() > hi:
                raise InvariantError(
                    f"values leave theta0 [{lo}, {hi}] of a member of Sigma"
                )

    @property
    def n(self):
        return self.values.size

    @property
    def t(self):
        return np.arange(1, self.n + 1) / self.n

    def with_values(self, values, **changes):
        changes.setdefault("in_sigma", False)
        return replace(self, values=values, **changes)

    def digest(self):
        return hashlib.sha256(self.values.tobytes()).hexdigest()[:16]

    def header(self):
        return {
            "n": self.n,
            "beta": self.beta,
            "L": self.holder_const,
            "theta0": list(self.theta0) if self.theta0 else None,
        }


@dataclass(frozen=True, eq=False)
class RateSet:
    """Shrinking rates and the doubly-local partition for one n.

    gamma_star_block is kappa0_star (n_k / log n_k)^(-1/2) at the smallest
    block count; the local rescaling needs gamma_n <= gamma_star_block.
    """

    n: int
    beta: float
    kappa0: float
    kappa0_star: float
    gamma_n: float
    delta_n: float
    gamma_star: float
    m: int
    n_k: np.ndarray = field(repr=False)
    gamma_star_block: float

    @property
    def m_ok(self):
        return 1 / (2 * self.delta_n) <= self.m <= 1 / self.delta_n

    @property
    def n_k_ok(self):
        low = self.n * self.delta_n
        return bool(np.all((self.n_k >= low - 1) & (self.n_k <= 2 * low + 1)))

    @property
    def splitting_ok(self):
        return bool(self.m_ok and self.n_k_ok)

# Native and installed modules
from dataclasses import dataclass
from typing import Optional

import numpy as np

# Custom modules
from model.family import ExpFamilyModel
from model.grid_function import GridFunction
from utils.errors import InvariantError

GLM = "Glm"
GAUSS_HETERO = "GaussHetero"
GAUSS_VST = "GaussVst"
KINDS = (GLM, GAUSS_HETERO, GAUSS_VST)


@dataclass(frozen=True, eq=False)
class ExperimentSample:
    """One observation vector with the parameters that generated it.

    For GaussHetero samples ``f0`` is the centre whose Fisher information
    sets the noise level.
    """

    kind: str
    family: ExpFamilyModel
    f: GridFunction
    n: int
    seed: Optional[int]
    data: np.ndarray
    f0: Optional[GridFunction] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvariantError(f"unknown experiment kind {self.kind!r}")
        data = np.array(self.data, dtype=float)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if data.shape != (self.n,):
            raise InvariantError(f"data has shape {data.shape}, expected ({self.n},)")
        if self.kind == GAUSS_HETERO and self.f0 is None:
            raise InvariantError("GaussHetero samples need the centre f0")

    def sidecar(self):
        return {
            "kind": self.kind,
            "family": self.family.name,
            "n": self.n,
            "seed": self.seed,
            "f": self.f.digest(),
            "f0": self.f0.digest() if self.f0 is not None else None,
        }


@dataclass(frozen=True, eq=False)
class LogLikelihoodRatio:
    """log dP_f/dP_f0 evaluated on one observation vector."""

    kind: str
    value: float
    f: GridFunction
    f0: GridFunction

    def __float__(self):
        return float(self.value)

# Native and installed modules
from dataclasses import dataclass
from typing import Optional

# Custom modules
from utils.errors import InvariantError

EXACT_GAUSSIAN = "ExactGaussian"
EXACT_WHITE_NOISE = "ExactWhiteNoise"
MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class HellingerEstimate:
    """Squared Hellinger distance, exact or Monte-Carlo.

    ``bound`` holds the linearized value (n/8) int (m1 - m2)^2 for the
    white-noise formula; ``raw`` holds the unclipped Monte-Carlo mean.
    """

    h2: float
    se: float
    reps: int
    method: str
    bound: Optional[float] = None
    raw: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.h2 <= 1.0:
            raise InvariantError(f"h2={self.h2} outside [0, 1]")
        if self.se < 0:
            raise InvariantError(f"se={self.se} is negative")
        if self.method != MONTE_CARLO and self.se != 0:
            raise InvariantError(f"{self.method} estimate must have se = 0")

# Native and installed modules
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

from marshmallow import Schema, fields

# Custom modules
from utils.utils import config_hash

# Options that only decide where and how results are written
OUTPUT_KEYS = ("out_dir", "format", "workers")

# Neighbourhood of the distance sweep
GLOBAL_RATE = "global"
ALMOST_PARAMETRIC = "almost-parametric"


@dataclass(frozen=True)
class RunConfig:
    """Validated options of one workbench command."""

    command: str
    family: Optional[str] = None
    beta: float = 0.75
    L: float = 1.0
    kappa0: float = 1.0
    kappa0_star: Optional[float] = None
    n_list: List[int] = field(default_factory=lambda: [256])
    reps: int = 20000
    pairs: int = 20
    seed: int = 0
    theta: Optional[float] = None
    theta0: Optional[Tuple[float, float]] = None
    eps0: Optional[float] = None
    dict_size: int = 32
    kind: str = "Glm"
    noise: bool = True
    rate: str = GLOBAL_RATE
    workers: int = 1
    out_dir: str = "results"
    format: str = "csv"

    @property
    def n(self):
        return self.n_list[-1]

    def payload(self):
        """Options that determine the numbers, in canonical form."""

        values = asdict(self)
        for key in OUTPUT_KEYS:
            values.pop(key)
        if values["theta0"] is not None:
            values["theta0"] = list(values["theta0"])
        return values

    @property
    def hash(self):
        return config_hash(self.payload())


class RunConfigModel(Schema):
    command = fields.String()
    family = fields.String(allow_none=True)
    beta = fields.Float()
    L = fields.Float()
    kappa0 = fields.Float()
    kappa0_star = fields.Float(allow_none=True)
    n_list = fields.List(fields.Integer())
    reps = fields.Integer()
    pairs = fields.Integer()
    seed = fields.Integer()
    theta = fields.Float(allow_none=True)
    theta0 = fields.List(fields.Float(), allow_none=True)
    eps0 = fields.Float(allow_none=True)
    dict_size = fields.Integer()
    kind = fields.String()
    noise = fields.Boolean()
    rate = fields.String()
    workers = fields.Integer()
    out_dir = fields.String()
    format = fields.String()

    class Meta:
        ordered = True

import math
from dataclasses import asdict, dataclass, field, fields

from ..errors import ParameterError

FAMILIES = ("convnetquake_ingv", "magnet", "mlstm_fcn", "tcn")
VARIANTS = ("base", "speech", "emg", "sp500")
TASKS = ("regression", "classification")


@dataclass
class TCNParams:
    """Defaults are the "adding problem" settings of the original TCN work."""
    kernel_size: int = 8
    filters: int = 24
    max_dilation: int = 8
    dropout: float = 0.0

    @property
    def dilations(self):
        out, d = [], 1
        while d <= self.max_dilation:
            out.append(d)
            d *= 2
        return out


@dataclass
class ArchitectureSpec:
    family: str
    input_channels: int = 3
    input_length: int = 64
    task: str = "regression"
    num_classes: int = None
    stream_max: bool = False
    variant: str = "base"
    scale: float = 1.0
    tcn: TCNParams = field(default_factory=TCNParams)
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.tcn, dict):
            self.tcn = TCNParams(**self.tcn)
        self.validate()

    def validate(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unsupported family {self.family!r}")
        if self.task not in TASKS:
            raise ParameterError(f"unknown task kind {self.task!r}")
        if self.task == "classification":
            if self.num_classes is None or self.num_classes < 2:
                raise ParameterError("classification head needs num_classes >= 2")
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}")
        if self.variant != "base" and self.family != "convnetquake_ingv":
            raise ParameterError("variants other than 'base' exist only for convnetquake_ingv")
        if self.scale <= 0:
            raise ParameterError("scale must be positive")
        if self.input_channels < 1 or self.input_length < 1:
            raise ParameterError("input_channels and input_length must be positive")

    @property
    def outputs(self):
        return 1 if self.task == "regression" else self.num_classes

    @property
    def warnings(self):
        out = []
        if self.input_channels not in (1, 3):
            out.append(f"input_channels={self.input_channels} is outside the 1/3-channel setting")
        return out

    def width(self, n):
        """Scaled filter / unit count: floor(n * scale), at least 1."""
        return max(1, int(math.floor(n * self.scale)))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown architecture fields: {sorted(unknown)}")
        return cls(**d)

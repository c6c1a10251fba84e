"""Run configuration and its flat ``key = value`` text format.

Nested settings use dotted keys (``dataset.noise_ratio = 0.4``). Lines starting
with ``#`` are comments. Unknown keys are an error.
"""
import dataclasses
from dataclasses import dataclass, field, fields, replace

from .curriculum import CurriculumSchedule, LingualWeightSchedule
from .errors import ConfigError
from .objective import LossConfig
from .synthdata import SyntheticDatasetSpec
from .transport import SinkhornConfig

MODES = ("dcot", "baseline_unweighted", "single_view_m", "single_view_l")
SECTIONS = {
    "dataset": SyntheticDatasetSpec,
    "loss": LossConfig,
    "curriculum": CurriculumSchedule,
    "lingual": LingualWeightSchedule,
    "sinkhorn": SinkhornConfig,
}


@dataclass(frozen=True)
class RunConfig:
    dataset: SyntheticDatasetSpec = field(default_factory=SyntheticDatasetSpec)
    batch_size: int = 128
    epochs: int = 60
    lr: float = 0.05
    loss: LossConfig = field(default_factory=LossConfig)
    curriculum: CurriculumSchedule = field(default_factory=CurriculumSchedule)
    lingual: LingualWeightSchedule = field(default_factory=LingualWeightSchedule)
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)
    confidence_policy: str = "scale_by_M"
    mode: str = "dcot"
    distance: str = "cosine"
    out_dim: int = 32
    encoder_kind: str = "linear_normalized"
    share_text: bool = True
    test_fraction: float = 0.2
    eval_every: int = 10
    out_dir: str = "runs/default"
    run_seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.confidence_policy not in ("raw", "scale_by_M"):
            raise ConfigError(f"unknown confidence_policy {self.confidence_policy!r}")
        if self.distance not in ("cosine", "euclidean"):
            raise ConfigError(f"unknown distance {self.distance!r}")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")

    def with_overrides(self, **kw):
        """``replace`` that also accepts dotted keys for nested sections."""
        return from_items(dict(to_items(self), **{k: _format(v) for k, v in kw.items()}))


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ",".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(text, default, key):
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            kind = type(default[0]) if default else float
            return tuple(kind(x.strip()) for x in text.split(",") if x.strip())
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def to_items(cfg):
    items = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            for sub in fields(value):
                items[f"{f.name}.{sub.name}"] = _format(getattr(value, sub.name))
        else:
            items[f.name] = _format(value)
    return items


def from_items(items):
    base = RunConfig()
    top, nested = {}, {name: {} for name in SECTIONS}
    for key, text in items.items():
        if "." in key:
            section, name = key.split(".", 1)
            if section not in SECTIONS:
                raise ConfigError(f"unknown config key {key!r}")
            default_obj = getattr(base, section)
            if name not in {f.name for f in fields(default_obj)}:
                raise ConfigError(f"unknown config key {key!r}")
            nested[section][name] = _parse(text, getattr(default_obj, name), key)
        else:
            if key not in {f.name for f in fields(base)} or key in SECTIONS:
                raise ConfigError(f"unknown config key {key!r}")
            top[key] = _parse(text, getattr(base, key), key)
    try:
        for section, cls in SECTIONS.items():
            if nested[section]:
                top[section] = replace(getattr(base, section), **nested[section])
        return replace(base, **top)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def to_text(cfg):
    return "".join(f"{k} = {v}\n" for k, v in to_items(cfg).items())


def parse_config(text):
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in items:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        items[key] = value
    return from_items(items)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())

"""
Meta Config Model - Every knob of a meta-training and evaluation run
"""
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any, Dict, Tuple

from exceptions.sbmcl_exceptions import ConfigException

from .stream import Domain, StreamSpec


class HeadKind(Enum):
    """Special cases of the framework."""
    GENERIC = "generic"
    GEMCL = "gemcl"
    PN = "pn"
    ALPACA = "alpaca"


class PredictMode(Enum):
    """How the posterior over z is used at prediction time."""
    MC = "mc"
    MAP = "map"


# head -> domains it can serve
HEAD_DOMAINS = {
    HeadKind.GENERIC: (Domain.SINE, Domain.CLASSIFY, Domain.DENSITY),
    HeadKind.GEMCL: (Domain.CLASSIFY,),
    HeadKind.PN: (Domain.CLASSIFY,),
    HeadKind.ALPACA: (Domain.SINE,),
}


@dataclass
class MetaConfig:
    """
    Configuration of one run. Defaults are the desk-scale sine setting.
    """
    head: HeadKind = HeadKind.ALPACA
    stream: StreamSpec = field(default_factory=StreamSpec)
    z_dim: int = 32
    hidden_sizes: Tuple[int, ...] = (64, 64, 64)
    feature_dim: int = 64
    n_z: int = 5
    meta_batch: int = 8
    lr: float = 1e-3
    steps: int = 20000
    meta_train_episodes: int = 100000
    eval_episodes: int = 512
    seed: int = 0
    noise_var: float = 0.1
    mixture_components: int = 16
    max_classes: int = 64
    online_lr: float = 1e-2
    offline_lr: float = 1e-3
    offline_steps: int = 2000
    offline_batch: int = 10
    offline_eval_every: int = 50
    log_every: int = 100

    def __post_init__(self):
        """Coerce enum/tuple fields and validate ranges."""
        if isinstance(self.head, str):
            try:
                self.head = HeadKind(self.head)
            except ValueError:
                raise ConfigException(f"unknown head {self.head!r}", key="head") from None
        if isinstance(self.stream, dict):
            self.stream = StreamSpec.from_dict(self.stream)
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)

        positive = ("z_dim", "feature_dim", "n_z", "meta_batch", "eval_episodes", "meta_train_episodes",
                    "mixture_components", "max_classes", "offline_batch",
                    "offline_eval_every", "log_every")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigException("must be a positive integer", key=name)
        for name in ("steps", "offline_steps"):
            if getattr(self, name) < 0:
                raise ConfigException("must be non-negative", key=name)
        for name in ("lr", "offline_lr", "online_lr"):
            if getattr(self, name) < 0:
                raise ConfigException("must be non-negative", key=name)
        if not self.noise_var > 0:
            raise ConfigException("must be positive", key="noise_var")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigException("needs at least one positive layer width", key="hidden_sizes")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigException("must be an unsigned 64-bit integer", key="seed")
        if self.stream.domain not in HEAD_DOMAINS[self.head]:
            raise ConfigException(
                f"head {self.head.value!r} does not support domain {self.stream.domain.value!r}",
                key="head",
            )
        if self.stream.domain is Domain.CLASSIFY and self.stream.num_tasks > self.max_classes:
            raise ConfigException("more tasks than max_classes", key="stream.num_tasks")

    def to_dict(self) -> Dict[str, Any]:
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Enum):
                value = value.value
            elif isinstance(value, StreamSpec):
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetaConfig":
        """
        Build a config from a parsed document, rejecting unknown keys.

        Raises:
            ConfigException: naming the first unknown or invalid key
        """
        if not isinstance(data, dict):
            raise ConfigException("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigException("unknown key", key=key)

        data = dict(data)
        stream = data.get("stream")
        if stream is not None:
            if not isinstance(stream, dict):
                raise ConfigException("must be an object", key="stream")
            stream_known = {f.name for f in fields(StreamSpec)}
            for key in stream:
                if key not in stream_known:
                    raise ConfigException("unknown key", key=f"stream.{key}")
            try:
                data["stream"] = StreamSpec.from_dict(stream)
            except (TypeError, ValueError) as e:
                raise ConfigException(str(e), key="stream") from e
        try:
            return cls(**data)
        except ConfigException:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigException(str(e)) from e

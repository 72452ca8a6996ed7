"""
Run Config File - JSON documents mirroring MetaConfig

    {
      "head": "alpaca",
      "stream": {"domain": "sine", "num_tasks": 10, "shots": 10},
      "steps": 20000
    }

Omitted keys take the MetaConfig defaults; unknown keys are rejected.
"""
import json

from exceptions.sbmcl_exceptions import ConfigException
from models.config import MetaConfig


def parse_config(text: str) -> MetaConfig:
    """
    Raises:
        ConfigException: If the text is not JSON or names an unknown or invalid key
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigException(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    return MetaConfig.from_dict(document)


def load_config(path: str) -> MetaConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigException(f"cannot read config {path!r}: {e.strerror}") from e
    return parse_config(text)


def dump_config(config: MetaConfig) -> str:
    """Full config with every key, sorted, as parsed back by `parse_config`."""
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def save_config(config: MetaConfig, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dump_config(config))

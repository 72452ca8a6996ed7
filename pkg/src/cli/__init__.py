"""Command-line entry point and artifact I/O"""

from .config_file import parse_config, load_config, dump_config, save_config
from .checkpoint_io import (
    MAGIC,
    checkpoint_to_bytes,
    checkpoint_from_bytes,
    save_checkpoint,
    load_checkpoint,
    payload_digest,
)

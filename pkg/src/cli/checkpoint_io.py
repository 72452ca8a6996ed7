"""
Checkpoint Container - self-describing binary checkpoint format

    SBMCL-CKPT 1
    config <compact JSON of the MetaConfig, sorted keys>
    param <name> <d1>x<d2>... float64      (one line per parameter, "-" for scalars)
    end
    <payload: little-endian float64 values of every parameter, header order>
    <8 bytes: BLAKE2b-64 digest of the payload>
"""
import hashlib
import json
from typing import List, Tuple

import numpy as np

from exceptions.sbmcl_exceptions import CheckpointException, SBMCLException
from models.checkpoint import Checkpoint
from models.config import MetaConfig

MAGIC = "SBMCL-CKPT 1"
DIGEST_SIZE = 8
DTYPE = "float64"


def payload_digest(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=DIGEST_SIZE).digest()


def _shape_text(shape: Tuple[int, ...]) -> str:
    return "x".join(str(d) for d in shape) if shape else "-"


def _parse_shape(text: str) -> Tuple[int, ...]:
    if text == "-":
        return ()
    try:
        shape = tuple(int(d) for d in text.split("x"))
    except ValueError:
        raise CheckpointException(f"bad shape {text!r}") from None
    if any(d < 0 for d in shape):
        raise CheckpointException(f"bad shape {text!r}")
    return shape


def checkpoint_to_bytes(checkpoint: Checkpoint) -> bytes:
    config = json.dumps(checkpoint.config.to_dict(), sort_keys=True, separators=(",", ":"))
    lines = [MAGIC, f"config {config}"]
    chunks = []
    for name, array in checkpoint.params.items():
        if not name or any(c.isspace() for c in name):
            raise CheckpointException(f"parameter name {name!r} cannot be stored")
        lines.append(f"param {name} {_shape_text(array.shape)} {DTYPE}")
        chunks.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    lines.append("end")
    payload = b"".join(chunks)
    return ("\n".join(lines) + "\n").encode("utf-8") + payload + payload_digest(payload)


def _read_header(data: bytes) -> Tuple[List[str], int]:
    lines, pos = [], 0
    while True:
        end = data.find(b"\n", pos)
        if end < 0:
            raise CheckpointException("truncated header")
        line = data[pos:end].decode("utf-8", errors="replace")
        pos = end + 1
        if line == "end":
            return lines, pos
        lines.append(line)


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    """
    Parse and verify a checkpoint.

    Raises:
        CheckpointException: On a bad header, wrong length or checksum mismatch
    """
    lines, offset = _read_header(data)
    if not lines or lines[0] != MAGIC:
        raise CheckpointException("not an SB-MCL checkpoint (bad magic line)")
    if len(lines) < 2 or not lines[1].startswith("config "):
        raise CheckpointException("missing config line")
    try:
        config = MetaConfig.from_dict(json.loads(lines[1][len("config "):]))
    except (ValueError, SBMCLException) as e:
        raise CheckpointException(f"invalid config: {e}") from e

    entries = []
    for line in lines[2:]:
        parts = line.split(" ")
        if len(parts) != 4 or parts[0] != "param" or parts[3] != DTYPE:
            raise CheckpointException(f"bad parameter line {line!r}")
        entries.append((parts[1], _parse_shape(parts[2])))

    sizes = [int(np.prod(shape, dtype=np.int64)) for _, shape in entries]
    payload_len = 8 * sum(sizes)
    if len(data) != offset + payload_len + DIGEST_SIZE:
        raise CheckpointException(
            f"expected {payload_len} payload bytes plus checksum, found {len(data) - offset}")
    payload = data[offset:offset + payload_len]
    if payload_digest(payload) != data[offset + payload_len:]:
        raise CheckpointException("checksum mismatch")

    params, pos = {}, 0
    for (name, shape), size in zip(entries, sizes):
        if name in params:
            raise CheckpointException(f"duplicate parameter {name!r}")
        if size == 0:
            params[name] = np.zeros(shape)
            continue
        values = np.frombuffer(payload, dtype="<f8", count=size, offset=pos)
        params[name] = values.astype(np.float64).reshape(shape)
        pos += 8 * size
    return Checkpoint(config, params)


def save_checkpoint(checkpoint: Checkpoint, path: str) -> str:
    """Write the container and return the payload checksum as hex."""
    data = checkpoint_to_bytes(checkpoint)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as e:
        raise CheckpointException(f"cannot write {path!r}: {e.strerror}") from e
    return data[-DIGEST_SIZE:].hex()


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise CheckpointException(f"cannot read {path!r}: {e.strerror}") from e
    return checkpoint_from_bytes(data)

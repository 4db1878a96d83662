"""Bit-exact optimizer checkpoints.

Layout::

    b"RMOP" | version (1 byte) | header length (uint32, little-endian)
    | header (UTF-8 JSON) | payload (little-endian IEEE-754 arrays)

The header carries the optimizer config, per-binding step counters and a
slot table; each slot entry names its dtype, shape, byte offset and size
within the payload.
"""

from __future__ import annotations

import json
import struct
from collections.abc import Iterable
from typing import Any

import numpy as np
from pydantic import ValidationError

from manifold_sgd.errors import CorruptCheckpoint
from manifold_sgd.logging import get_logger
from manifold_sgd.models import OptimizerConfig
from manifold_sgd.optimizers import OptimizerState, ParameterBinding

logger = get_logger(__name__)

MAGIC = b"RMOP"
VERSION = 1
_PREFIX = struct.Struct("<4sBI")

# Slot key for a binding's parameter values
VALUES = "values"


def _little_endian(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=a.dtype.newbyteorder("<"))


def save(state: OptimizerState, bindings: Iterable[ParameterBinding]) -> bytes:
    """Serialize optimizer state and parameter values."""
    arrays: list[tuple[str, str, np.ndarray]] = []
    for binding in bindings:
        arrays.append((binding.name, VALUES, binding.values))
    for name, slots in state.slots.items():
        for slot, a in slots.items():
            arrays.append((name, slot, a))

    table = []
    chunks = []
    offset = 0
    for name, slot, a in arrays:
        data = _little_endian(np.asarray(a)).tobytes()
        table.append(
            {
                "binding": name,
                "slot": slot,
                "dtype": np.asarray(a).dtype.newbyteorder("<").str,
                "shape": list(np.shape(a)),
                "offset": offset,
                "nbytes": len(data),
            }
        )
        chunks.append(data)
        offset += len(data)

    header = json.dumps(
        {
            "config": state.config.model_dump(mode="json"),
            "steps": state.steps,
            "slots": table,
        },
        sort_keys=True,
    ).encode("utf-8")
    blob = _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(chunks)
    logger.debug("checkpoint: %d array(s), %d bytes", len(table), len(blob))
    return blob


def _parse_header(blob: bytes) -> tuple[dict[str, Any], memoryview]:
    if len(blob) < _PREFIX.size:
        raise CorruptCheckpoint("checkpoint truncated before the header")
    magic, version, length = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise CorruptCheckpoint(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CorruptCheckpoint(f"unsupported checkpoint version {version} (expected {VERSION})")
    start = _PREFIX.size
    if len(blob) < start + length:
        raise CorruptCheckpoint("checkpoint truncated inside the header")
    try:
        header = json.loads(bytes(blob[start : start + length]).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptCheckpoint(f"unreadable checkpoint header: {e}") from e
    if not isinstance(header, dict) or not {"config", "steps", "slots"} <= header.keys():
        raise CorruptCheckpoint("checkpoint header is missing required keys")
    return header, memoryview(blob)[start + length :]


def load(blob: bytes) -> tuple[OptimizerState, dict[str, np.ndarray]]:
    """
    Restore what ``save`` wrote.

    Returns:
        (state, values) where ``values`` maps binding name to parameter array

    Raises:
        CorruptCheckpoint: On bad magic, unknown version, malformed header or truncation
    """
    header, payload = _parse_header(blob)
    try:
        config = OptimizerConfig.model_validate(header["config"])
    except ValidationError as e:
        raise CorruptCheckpoint(f"checkpoint config is invalid: {e}") from e

    state = OptimizerState(config=config, steps={k: int(v) for k, v in header["steps"].items()})
    for name in state.steps:
        state.slots[name] = {}
    values: dict[str, np.ndarray] = {}
    end = 0
    for entry in header["slots"]:
        try:
            dtype = np.dtype(entry["dtype"])
            shape = tuple(entry["shape"])
            offset, nbytes = int(entry["offset"]), int(entry["nbytes"])
        except (KeyError, TypeError, ValueError) as e:
            raise CorruptCheckpoint(f"malformed slot entry {entry!r}") from e
        if offset + nbytes > len(payload):
            raise CorruptCheckpoint(
                f"payload truncated: slot {entry['binding']}/{entry['slot']} needs "
                f"{offset + nbytes} bytes, have {len(payload)}"
            )
        if nbytes != dtype.itemsize * int(np.prod(shape, dtype=np.int64)):
            raise CorruptCheckpoint(f"slot {entry['binding']}/{entry['slot']} size mismatch")
        a = np.frombuffer(payload[offset : offset + nbytes], dtype=dtype).reshape(shape)
        a = a.astype(dtype.newbyteorder("="))
        if entry["slot"] == VALUES:
            values[entry["binding"]] = a
        else:
            state.slots.setdefault(entry["binding"], {})[entry["slot"]] = a
        end = max(end, offset + nbytes)
    if end != len(payload):
        raise CorruptCheckpoint(f"{len(payload) - end} trailing byte(s) after the payload")
    return state, values

"""Bit-exact tensor container and JSON config handling.

File layout::

    magic "CTF1" (4 bytes)
    header length, unsigned 64-bit little-endian (8 bytes)
    UTF-8 JSON header: {name: {"dtype": "f32", "shape": [...],
                               "offset": ..., "length": ...}}
    zero padding to the next 8-byte boundary (omitted when there are
    no entries, so the empty container is exactly magic + length + "{}")
    raw little-endian float32 payload

Offsets are relative to the start of the payload region.  The header is
serialized with sorted names and fixed separators, and entries are laid
out contiguously in sorted-name order, so writing the same tensors twice
produces byte-identical files.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    CorruptHeader,
    DuplicateName,
    TruncatedPayload,
    UnknownDtype,
    ValidationError,
)

MAGIC = b"CTF1"
_ALIGN = 8


def _pad_len(header_bytes: int) -> int:
    return (-(len(MAGIC) + 8 + header_bytes)) % _ALIGN


@dataclass
class TensorFile:
    """In-memory view of a container: name -> float32 array."""

    arrays: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __contains__(self, name: str) -> bool:
        return name in self.arrays

    def names(self):
        return list(self.arrays.keys())


def _check_name(name):
    if not isinstance(name, str) or not name:
        raise ValidationError("tensor names must be nonempty strings")
    if not name.isascii():
        raise ValidationError(f"tensor name {name!r} is not ASCII")


def write_tensorfile(path, entries) -> None:
    """Write named arrays to a container file.

    entries is a mapping name -> array, or an iterable of (name, array)
    pairs.  Arrays are stored as little-endian float32 in C order.
    """
    if hasattr(entries, "items"):
        pairs = list(entries.items())
    else:
        pairs = list(entries)
    seen = set()
    arrays = []
    for name, arr in pairs:
        _check_name(name)
        if name in seen:
            raise DuplicateName(f"duplicate tensor name {name!r}")
        seen.add(name)
        arrays.append((name, np.ascontiguousarray(np.asarray(arr), dtype="<f4")))
    arrays.sort(key=lambda kv: kv[0])

    header = {}
    offset = 0
    for name, arr in arrays:
        length = arr.size * 4
        header[name] = {
            "dtype": "f32",
            "shape": list(arr.shape),
            "offset": offset,
            "length": length,
        }
        offset += length
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(header_bytes).to_bytes(8, "little"))
        f.write(header_bytes)
        if arrays:
            f.write(b"\x00" * _pad_len(len(header_bytes)))
            for _, arr in arrays:
                f.write(arr.tobytes())


def read_tensorfile(path) -> TensorFile:
    """Read and validate a container file written by write_tensorfile."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: not a CTF1 container")
    if len(raw) < len(MAGIC) + 8:
        raise CorruptHeader(f"{path}: truncated before header length")
    hlen = int.from_bytes(raw[4:12], "little")
    if len(raw) < 12 + hlen:
        raise CorruptHeader(f"{path}: header shorter than declared length {hlen}")
    try:
        header = json.loads(raw[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptHeader(f"{path}: header is not valid JSON ({exc})") from exc
    if not isinstance(header, dict):
        raise CorruptHeader(f"{path}: header must be a JSON object")

    payload_start = 12 + hlen + (_pad_len(hlen) if header else 0)
    payload = raw[payload_start:]

    arrays = {}
    expected_offset = 0
    for name in sorted(header):
        _check_name(name)
        meta = header[name]
        if not isinstance(meta, dict) or not {"dtype", "shape", "offset", "length"} <= set(meta):
            raise CorruptHeader(f"{path}: malformed entry for {name!r}")
        if meta["dtype"] != "f32":
            raise UnknownDtype(f"{path}: entry {name!r} has dtype {meta['dtype']!r}")
        shape = meta["shape"]
        if not isinstance(shape, list) or not all(isinstance(d, int) and d >= 0 for d in shape):
            raise CorruptHeader(f"{path}: entry {name!r} has malformed shape {shape!r}")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if meta["length"] != count * 4:
            raise CorruptHeader(
                f"{path}: entry {name!r} length {meta['length']} != shape product {count * 4}"
            )
        if meta["offset"] != expected_offset:
            raise CorruptHeader(
                f"{path}: entry {name!r} offset {meta['offset']} breaks contiguous layout"
            )
        end = meta["offset"] + meta["length"]
        if end > len(payload):
            raise TruncatedPayload(
                f"{path}: entry {name!r} needs {end} payload bytes, file has {len(payload)}"
            )
        flat = np.frombuffer(payload, dtype="<f4", count=count, offset=meta["offset"])
        arrays[name] = flat.reshape(shape).copy()
        expected_offset = end
    return TensorFile(arrays=arrays)


RANKINGS = ("activation", "magnitude")


@dataclass
class PruneConfig:
    """Pruning run configuration, mirrored 1:1 by the JSON config file.

    lambda_mlp / lambda_attn are relative ridge strengths: the absolute
    regularizer at each site is the multiplier times that site's mean
    channel energy, which keeps conditioning uniform across layers.
    """

    mlp_sparsity: float = 0.0
    attn_sparsity: float = 0.0
    lambda_mlp: float = 1e-2
    lambda_attn: float = 1e-2
    ranking: str = "activation"
    seed: int = 0
    calib_batch: int = 32

    def validate(self) -> "PruneConfig":
        if not (0.0 <= self.mlp_sparsity < 1.0):
            raise ValidationError(f"mlp_sparsity must be in [0, 1), got {self.mlp_sparsity}")
        if not (0.0 <= self.attn_sparsity < 1.0):
            raise ValidationError(f"attn_sparsity must be in [0, 1), got {self.attn_sparsity}")
        if not self.lambda_mlp > 0:
            raise ValidationError("lambda_mlp must be positive")
        if not self.lambda_attn > 0:
            raise ValidationError("lambda_attn must be positive")
        if self.ranking not in RANKINGS:
            raise ValidationError(f"ranking must be one of {RANKINGS}, got {self.ranking!r}")
        if int(self.calib_batch) < 1:
            raise ValidationError("calib_batch must be >= 1")
        return self

    def to_dict(self) -> dict:
        return {
            "mlp_sparsity": self.mlp_sparsity,
            "attn_sparsity": self.attn_sparsity,
            "lambda_mlp": self.lambda_mlp,
            "lambda_attn": self.lambda_attn,
            "ranking": self.ranking,
            "seed": self.seed,
            "calib_batch": self.calib_batch,
        }


def load_config(path) -> PruneConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid config JSON ({exc})") from exc
    known = set(PruneConfig().to_dict())
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"{path}: unknown config fields {sorted(unknown)}")
    return PruneConfig(**data).validate()


def save_config(path, config: PruneConfig) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def write_json(path, payload) -> None:
    """Deterministic JSON writer used for all reports."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)

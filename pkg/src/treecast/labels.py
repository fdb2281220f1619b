"""Per-level label arrays and their serialization.

A LabelArray holds one realization of a broadcast process: for each level l
in [0, d], an array of k^l label codes.  Codes are 8-bit for m <= 256 and
16-bit otherwise.  Two on-disk formats are supported: a JSON document with
levels as plain integer arrays, and a compact binary dump (magic "BCAST1",
then k, d, m as 32-bit little-endian, then the level arrays concatenated in
level order, little-endian).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .trees import TreeShape

_MAGIC = b"BCAST1"


def code_dtype(m: int):
    if m < 1:
        raise ValueError("label count m must be >= 1")
    if m <= 256:
        return np.uint8
    if m <= 65536:
        return np.uint16
    raise ValueError(f"label count {m} exceeds the 16-bit code limit")


@dataclass
class LabelArray:
    shape: TreeShape
    m: int
    levels: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.levels) != self.shape.d + 1:
            raise ValueError(
                f"expected {self.shape.d + 1} levels, got {len(self.levels)}"
            )
        dtype = code_dtype(self.m)
        for lvl, arr in enumerate(self.levels):
            if len(arr) != self.shape.nodes_at(lvl):
                raise ValueError(
                    f"level {lvl} has {len(arr)} codes, expected {self.shape.nodes_at(lvl)}"
                )
            if arr.dtype != dtype:
                self.levels[lvl] = arr.astype(dtype)
            if len(arr) and int(arr.max()) >= self.m:
                raise ValueError(f"level {lvl} contains a code >= m = {self.m}")

    @property
    def root(self) -> int:
        return int(self.levels[0][0])

    @property
    def leaves(self) -> np.ndarray:
        return self.levels[-1]

    def to_json(self) -> str:
        doc = {
            "k": self.shape.k,
            "d": self.shape.d,
            "m": self.m,
            "levels": [arr.tolist() for arr in self.levels],
        }
        return json.dumps(doc, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LabelArray":
        doc = json.loads(text)
        shape = TreeShape(k=int(doc["k"]), d=int(doc["d"]))
        m = int(doc["m"])
        dtype = code_dtype(m)
        levels = [np.asarray(lvl, dtype=dtype) for lvl in doc["levels"]]
        return cls(shape=shape, m=m, levels=levels)

    def to_bytes(self) -> bytes:
        head = _MAGIC + struct.pack("<III", self.shape.k, self.shape.d, self.m)
        body = b"".join(arr.astype(arr.dtype.newbyteorder("<")).tobytes() for arr in self.levels)
        return head + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LabelArray":
        if blob[: len(_MAGIC)] != _MAGIC:
            raise ValueError("not a BCAST1 dump (bad magic)")
        k, d, m = struct.unpack_from("<III", blob, len(_MAGIC))
        shape = TreeShape(k=k, d=d)
        dtype = np.dtype(code_dtype(m)).newbyteorder("<")
        offset = len(_MAGIC) + 12
        levels = []
        for lvl in range(d + 1):
            count = shape.nodes_at(lvl)
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=offset)
            offset += count * dtype.itemsize
            levels.append(arr.astype(code_dtype(m)))
        if offset != len(blob):
            raise ValueError(f"dump has {len(blob) - offset} trailing bytes")
        return cls(shape=shape, m=m, levels=levels)

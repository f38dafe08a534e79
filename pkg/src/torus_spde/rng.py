"""Counter-based standard normals.

Draw ``i`` of stream ``s`` under master seed ``seed`` depends only on
``(seed, s, i)``: draws are generated in fixed blocks of ``BLOCK`` rows, and
block ``b`` comes from ``SeedSequence(seed, spawn_key=(s, b))``. Any slice
of the sequence can therefore be produced independently, in any order and
on any worker, with bit-identical results.
"""

from __future__ import annotations

import zlib
from typing import Sequence

import numpy as np

__all__ = ["BLOCK", "standard_normals", "stream_id"]

BLOCK = 1024


def stream_id(*parts) -> tuple[int, ...]:
    """Stable integer key from names and integers (``crc32`` for strings)."""
    out = []
    for p in parts:
        if isinstance(p, str):
            out.append(zlib.crc32(p.encode()))
        else:
            out.append(int(p))
    return tuple(out)


def _block(seed: int, stream: Sequence[int], block: int, width: int, rows: int = BLOCK) -> np.ndarray:
    # the generator fills row-major and sequentially, so the first ``rows``
    # rows do not depend on how many rows are requested
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(stream) + (int(block),))
    return np.random.Generator(np.random.PCG64(ss)).standard_normal((rows, width))


def standard_normals(seed: int, stream: Sequence[int] | int, start: int, count: int,
                     width: int = 1) -> np.ndarray:
    """Rows ``start .. start+count-1`` of the ``(inf, width)`` normal array of ``stream``."""
    if count < 0 or start < 0:
        raise ValueError("start and count must be non-negative")
    stream = (stream,) if isinstance(stream, (int, np.integer)) else tuple(stream)
    out = np.empty((count, width))
    pos = start
    while pos < start + count:
        b, off = divmod(pos, BLOCK)
        take = min(BLOCK - off, start + count - pos)
        out[pos - start: pos - start + take] = _block(seed, stream, b, width, off + take)[off:]
        pos += take
    return out

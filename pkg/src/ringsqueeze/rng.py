"""Counter-based random substreams for reproducible Monte Carlo.

Every random draw in the package is addressed by ``(seed, stream, position)``:
``stream`` encodes the sampling stage and mode/arm index into the second
Philox key word, and ``position`` is the pulse (or pulse-sample) index mapped
onto the Philox counter. Because the counter is absolute, any slice of a
stream can be generated independently of the rest, so chunked or threaded
evaluation produces bit-identical results regardless of schedule.

Philox produces 4 outputs of 64 bits per counter block, and
``Generator.random(dtype=float64)`` consumes one output per double, so a
stream offset of ``off`` doubles corresponds to counter block ``off // 4``.
Offsets handed to :func:`uniform_block` must therefore be multiples of 4;
chunk sizes used elsewhere in the package keep this alignment.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

# Stage tags for the second key word. Mode/arm indices are added to the tag,
# so stages must be spaced farther apart than any realistic mode count.
STAGE_PAIR = 1 << 32
STAGE_THIN_SIGNAL = 2 << 32
STAGE_THIN_IDLER = 3 << 32
STAGE_NOISE_SIGNAL = 4 << 32
STAGE_NOISE_IDLER = 5 << 32
STAGE_TRACE_SIGNAL = 6 << 32
STAGE_TRACE_IDLER = 7 << 32

_BLOCK_OUTPUTS = 4  # 64-bit outputs per Philox counter increment


def substream(seed: int, stream: int, offset: int = 0) -> Generator:
    """Generator positioned at ``offset`` doubles into stream ``(seed, stream)``.

    ``offset`` must be a multiple of 4 (one Philox counter block).
    """
    if offset % _BLOCK_OUTPUTS:
        raise ValueError(f"offset must be a multiple of {_BLOCK_OUTPUTS}, got {offset}")
    bit_gen = Philox(key=[seed, stream], counter=[offset // _BLOCK_OUTPUTS, 0, 0, 0])
    return Generator(bit_gen)


def uniform_block(seed: int, stream: int, offset: int, size: int) -> np.ndarray:
    """Uniform [0, 1) doubles at absolute positions ``offset .. offset+size``."""
    return substream(seed, stream, offset).random(size)

"""Counter-based, splittable uniform streams.

Every draw is a pure function of ``(seed, stream_id, substream_id, position)``
computed with Philox4x32-10, so replications can be generated in any order,
in bulk or one at a time, and always agree bit for bit.

Layout of one Philox call:

    key     = (seed & 0xFFFFFFFF, seed >> 32)
    counter = (block, substream_id, stream_id & 0xFFFFFFFF, stream_id >> 32)

Each block yields two doubles, so ``block = position // 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
MASK32 = np.uint64(0xFFFFFFFF)
MASK64 = (1 << 64) - 1

LATENT = 0
OBSERVED = 1

_MAX_BLOCK = 1 << 32
_TWO_M53 = 2.0**-53
_CHUNK_CELLS = 1 << 20


def _to_double(hi_word: np.ndarray, lo_word: np.ndarray) -> np.ndarray:
    top = (hi_word >> np.uint64(5)).astype(np.float64)
    bottom = (lo_word >> np.uint64(6)).astype(np.float64)
    return (top * 67108864.0 + bottom) * _TWO_M53


def philox4x32(
    counter: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    key: tuple[int, int],
    rounds: int = 10,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized Philox4x32 bijection.

    ``counter`` words are uint64 arrays holding 32-bit values; they broadcast
    against each other.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in counter)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + PHILOX_W0) & 0xFFFFFFFF
            k1 = (k1 + PHILOX_W1) & 0xFFFFFFFF
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> np.uint64(32)) ^ c1 ^ np.uint64(k0),
            p1 & MASK32,
            (p0 >> np.uint64(32)) ^ c3 ^ np.uint64(k1),
            p0 & MASK32,
        )
    return c0, c1, c2, c3


def parse_seed(value: int | str) -> int:
    """Accept an int, a decimal string, or a 0x-prefixed hex string."""
    if isinstance(value, bool):
        raise ValueError(f"invalid seed {value!r}")
    if isinstance(value, str):
        text = value.strip().replace("_", "")
        try:
            seed = int(text, 16) if text.lower().startswith("0x") else int(text, 10)
        except ValueError:
            raise ValueError(f"invalid seed {value!r}") from None
    else:
        seed = int(value)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed {value!r} outside the unsigned 64-bit range")
    return seed


@dataclass(frozen=True)
class StreamKey:
    seed: int
    stream_id: int = 0
    substream_id: int = LATENT

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0 <= self.stream_id <= MASK64:
            raise ValueError("stream_id must be an unsigned 64-bit integer")
        if not 0 <= self.substream_id < (1 << 32):
            raise ValueError("substream_id must fit in 32 bits")

    def substream(self, substream_id: int) -> StreamKey:
        return StreamKey(self.seed, self.stream_id, substream_id)

    def stream(self) -> Stream:
        return Stream(self)


def uniform_matrix(
    seed: int,
    stream_ids,
    substream_id: int,
    count: int,
    start: int = 0,
) -> np.ndarray:
    """Uniforms in [0, 1) for many streams at once.

    Row ``r`` holds positions ``start .. start+count-1`` of stream
    ``(seed, stream_ids[r], substream_id)``.
    """
    ids = np.atleast_1d(np.asarray(stream_ids, dtype=np.uint64))
    if count < 0 or start < 0:
        raise ValueError("count and start must be non-negative")
    out = np.empty((ids.size, count), dtype=np.float64)
    if count == 0 or ids.size == 0:
        return out
    first_block = start // 2
    last_block = (start + count - 1) // 2
    if last_block >= _MAX_BLOCK:
        raise ValueError("stream exhausted (more than 2**33 draws)")
    ids_lo = (ids & MASK32)[:, None]
    ids_hi = (ids >> np.uint64(32))[:, None]
    key = (seed & 0xFFFFFFFF, seed >> 32)
    step = max(1, _CHUNK_CELLS // ids.size)
    for b0 in range(first_block, last_block + 1, step):
        b1 = min(b0 + step, last_block + 1)
        blocks = np.arange(b0, b1, dtype=np.uint64)
        x0, x1, x2, x3 = philox4x32((blocks[None, :], np.uint64(substream_id), ids_lo, ids_hi), key)
        pair = np.empty((ids.size, 2 * blocks.size), dtype=np.float64)
        # two 53-bit doubles per block, from words (0, 1) and (2, 3)
        pair[:, 0::2] = _to_double(x0, x1)
        pair[:, 1::2] = _to_double(x2, x3)
        lo = max(2 * b0, start)
        hi = min(2 * b1, start + count)
        out[:, lo - start : hi - start] = pair[:, lo - 2 * b0 : hi - 2 * b0]
    return out


class Stream:
    """A cursor over one keyed stream. Owned by a single caller at a time."""

    def __init__(self, key: StreamKey, position: int = 0):
        self.key = key
        self.position = position

    def uniforms(self, count: int) -> np.ndarray:
        u = uniform_matrix(
            self.key.seed, [self.key.stream_id], self.key.substream_id, count, self.position
        )[0]
        self.position += count
        return u

    def next_uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def __repr__(self):
        return f"Stream({self.key!r}, position={self.position})"


class ForcedStream(Stream):
    """Test hook: every draw returns ``value``.

    Used to exercise degenerate paths (all innovations at an endpoint or at
    the centre). ``value`` may be 1.0 even though real draws never are.
    """

    def __init__(self, value: float, key: StreamKey | None = None):
        super().__init__(key or StreamKey(0))
        self.value = float(value)

    def uniforms(self, count: int) -> np.ndarray:
        self.position += count
        return np.full(count, self.value)

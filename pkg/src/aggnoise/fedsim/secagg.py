"""Toy secure-aggregation channel: pairwise additive masks over a 2^64 ring.

Real deployments wrap this in key agreement and dropout recovery; here the
point is the trust boundary and exact decoding. Updates are fixed-point
encoded (scale 2^16 by default), each unordered user pair shares a mask drawn
from a pair-seeded PRG which enters one ciphertext with + and the other with
-, so the masks of a full participant set sum to zero in the ring and the
server can decode only the aggregate. Plaintexts are not retained after
submission.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, MissingParticipant, NonFinite, Overflow

Array = np.ndarray

RING_BITS = 64
DEFAULT_SCALE_BITS = 16
# |x| < 2^47 / scale keeps sums of up to 2^15 encodings inside +/- 2^62.
_MAGNITUDE_BITS = 47


class FixedPointCodec:
    """Round-to-nearest fixed-point encoding into the 2^64 ring."""

    def __init__(self, scale_bits: int = DEFAULT_SCALE_BITS):
        if not 1 <= scale_bits < _MAGNITUDE_BITS:
            raise ValueError(f"scale_bits out of range: {scale_bits}")
        self.scale_bits = scale_bits
        self.scale = float(1 << scale_bits)
        self.magnitude_limit = float(1 << (_MAGNITUDE_BITS - scale_bits))

    def encode(self, x) -> Array:
        arr = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise NonFinite("cannot encode NaN or Inf")
        if np.any(np.abs(arr) >= self.magnitude_limit):
            raise Overflow(
                f"|value| must be < {self.magnitude_limit:g} at scale 2^{self.scale_bits}"
            )
        return np.rint(arr * self.scale).astype(np.int64).view(np.uint64)

    def decode(self, v: Array) -> Array:
        # centered lift: ring values >= 2^63 represent negatives
        return np.asarray(v, dtype=np.uint64).view(np.int64).astype(float) / self.scale


def _pair_mask(seed: int, i: int, j: int, dim: int) -> Array:
    """Deterministic ring mask shared by the unordered pair (i, j), i < j."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(i, j))
    rng = np.random.Generator(np.random.PCG64(seq))
    halves = rng.integers(0, 1 << 32, size=(2, dim), dtype=np.uint64)
    return (halves[0] << np.uint64(32)) | halves[1]


class SAChannel:
    """One round's aggregation channel for a fixed participant set.

    Server-side code sees only ``aggregate()`` (and the opaque ciphertexts);
    there is no API returning an individual plaintext after submission.
    """

    def __init__(self, n_participants: int, dim: int, seed: int,
                 scale_bits: int = DEFAULT_SCALE_BITS):
        if n_participants < 1:
            raise ValueError("need at least one participant")
        self.n_participants = n_participants
        self.dim = dim
        self.seed = int(seed)
        self.codec = FixedPointCodec(scale_bits)
        self._ciphertexts: dict[int, Array] = {}

    def submit(self, user_index: int, update) -> None:
        """Encode, mask and store one user's update; the plaintext is dropped."""
        if not 0 <= user_index < self.n_participants:
            raise ValueError(f"user_index {user_index} out of range")
        if user_index in self._ciphertexts:
            raise ValueError(f"user {user_index} already submitted")
        arr = np.asarray(update, dtype=float)
        if arr.shape != (self.dim,):
            raise DimensionMismatch(f"update shape {arr.shape}, expected ({self.dim},)")
        cipher = self.codec.encode(arr)
        for other in range(self.n_participants):
            if other == user_index:
                continue
            lo, hi = min(user_index, other), max(user_index, other)
            mask = _pair_mask(self.seed, lo, hi, self.dim)
            if user_index == lo:
                cipher = cipher + mask
            else:
                cipher = cipher - mask
        self._ciphertexts[user_index] = cipher

    def ciphertexts(self) -> dict[int, Array]:
        """What the server observes per user (masked ring values)."""
        return {k: v.copy() for k, v in self._ciphertexts.items()}

    def aggregate(self) -> Array:
        """Sum all ciphertexts in the ring and decode; masks cancel exactly."""
        missing = [i for i in range(self.n_participants) if i not in self._ciphertexts]
        if missing:
            raise MissingParticipant(f"waiting on participant(s) {missing}")
        total = np.zeros(self.dim, dtype=np.uint64)
        for cipher in self._ciphertexts.values():
            total = total + cipher
        return self.codec.decode(total)


def secure_aggregate(updates, seed: int, scale_bits: int = DEFAULT_SCALE_BITS) -> Array:
    """Convenience one-shot aggregation of a list of equal-length updates."""
    updates = [np.asarray(u, dtype=float) for u in updates]
    dim = updates[0].shape[0]
    channel = SAChannel(len(updates), dim, seed, scale_bits)
    for i, u in enumerate(updates):
        channel.submit(i, u)
    return channel.aggregate()

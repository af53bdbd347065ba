"""Deterministic 64-bit PRNG used for every randomized operation in the package.

The generator is SplitMix64 (Steele, Lea & Flood's mixing function), chosen
because it is fully specified by three constants, trivially portable across
languages, and has published reference outputs.  State update and output mix:

    state   <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z       <- state
    z       <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z       <- (z XOR (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    output  <- z XOR (z >> 31)

Reference vectors (seed -> first three outputs) are frozen in
``REFERENCE_VECTORS`` and pinned by the test suite; any reimplementation in
another language must reproduce them bit for bit.

Bounded draws use rejection sampling on the top of the 64-bit range so that
``randbelow`` is exactly uniform, and ``permutation`` is a Fisher-Yates
shuffle driven by ``randbelow``.  Both are part of the documented contract:
given the same seed, the same permutation is produced on every platform.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# seed -> first three 64-bit outputs.  The seed-0 and seed-(2^64-1) rows match
# the upstream splitmix64 test vectors; the rest are frozen from this
# implementation and serve as the cross-language reproducibility contract.
REFERENCE_VECTORS: dict[int, tuple[int, int, int]] = {
    0x0000000000000000: (0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F),
    0x0000000000000001: (0x910A2DEC89025CC1, 0xBEEB8DA1658EEC67, 0xF893A2EEFB32555E),
    0x0000000000000002: (0x975835DE1C9756CE, 0xBFC846100BFC1E42, 0x987BBCBFDD7E532F),
    0x0000000000000007: (0x63CBE1E459320DD7, 0x044C3CD7F43C661C, 0xE6984080BAB12A02),
    0x000000000000002A: (0xBDD732262FEB6E95, 0x28EFE333B266F103, 0x47526757130F9F52),
    0x00000000000004D2: (0xBB0CF61B2F181CDB, 0x97C7A1364DF06524, 0x33BEFAE49BC025DA),
    0x000000000012D687: (0x599ED017FB08FC85, 0x2C73F08458540FA5, 0x883EBCE5A3F27C77),
    0x00000000DEADBEEF: (0x4ADFB90F68C9EB9B, 0xDE586A3141A10922, 0x021FBC2F8E1CFC1D),
    0x123456789ABCDEF0: (0x161922C645CE50E8, 0xAD760CAFA1697B60, 0x3501FF44902CA50D),
    0xFFFFFFFFFFFFFFFF: (0xE4D971771B652C20, 0xE99FF867DBF682C9, 0x382FF84CB27281E9),
}


class SplitMix64:
    """SplitMix64 stream; one instance per randomized operation."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        """Advance the state and return the next 64-bit output."""
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        # Reject draws from the incomplete final copy of [0, n) in [0, 2^64).
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates permutation of range(n), high index downward."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def shuffled(self, items: list) -> list:
        """Return a new list with ``items`` rearranged by ``permutation``."""
        perm = self.permutation(len(items))
        return [items[i] for i in perm]

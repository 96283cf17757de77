"""Stable 64-bit hashing and seed derivation.

Everything here is pure integer arithmetic, so results are identical across
runs, platforms, and languages (the bindings client re-implements these).
"""

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def splitmix64(x: int) -> int:
    """One splitmix64 output step; good avalanche for seed derivation."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, consumer: str) -> int:
    """Derive a per-consumer seed from a master seed.

    Mixing the consumer tag in keeps independent consumers decoupled: adding
    one never perturbs another's stream.
    """
    return splitmix64((master & _MASK64) ^ fnv1a64(consumer.encode("utf-8")))

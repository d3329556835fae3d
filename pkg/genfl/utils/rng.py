"""
Deterministic RNG streams.

Every consumer (client training, generation, sampling, ...) gets its own
numpy Generator seeded from a hash of the run seed and a stream name, so
the order in which consumers run never changes what they draw.
"""
import hashlib

import numpy as np


def _hash_to_u64(text: str) -> int:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big", signed=False)


def derive_seed(base_seed: int, *parts) -> int:
    """
    Map (base_seed, name parts...) to a stable 64-bit child seed.

    Args:
        base_seed: Run-level seed
        *parts: Stream name components, e.g. ("client", round_index, client_id)

    Returns:
        Non-negative integer seed
    """
    key = ":".join([str(int(base_seed))] + [_format_part(p) for p in parts])
    return _hash_to_u64(key)


def _format_part(part) -> str:
    if isinstance(part, float):
        return repr(part)
    return str(part)


def make_stream(base_seed: int, *parts) -> np.random.Generator:
    """Return a fresh Generator for the named stream"""
    return np.random.default_rng(derive_seed(base_seed, *parts))

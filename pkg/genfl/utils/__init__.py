"""
Utils package initialization.
"""
from genfl.utils.rng import derive_seed, make_stream
from genfl.utils.files import atomic_write_text

__all__ = ["derive_seed", "make_stream", "atomic_write_text"]

from .logging import setup_logging
from .seeding import derive_seed, make_rng

__all__ = ["setup_logging", "derive_seed", "make_rng"]

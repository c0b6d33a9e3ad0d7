"""Utils Package."""

from .logger import configure_logging, get_logger, kv, set_level, set_run_id
from .parallel import batches, ordered_map, spawn_generators
from .timing import timed

__all__ = [
    "configure_logging",
    "get_logger",
    "kv",
    "set_level",
    "set_run_id",
    "batches",
    "ordered_map",
    "spawn_generators",
    "timed",
]

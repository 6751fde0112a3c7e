"""Edge-cache refresh under popularity drift: uncoded, MDS and index-coded broadcast."""

from ._accel import backend
from .caching import CacheState, SystemConfig, UpdateInstance, build_update, top_s_cache, uncoded_transmissions
from .popularity import DriftParams, PopularityState, Ranking, kendall_tau

__version__ = "0.1.0"

__all__ = [
    "CacheState",
    "DriftParams",
    "PopularityState",
    "Ranking",
    "SystemConfig",
    "UpdateInstance",
    "backend",
    "build_update",
    "kendall_tau",
    "top_s_cache",
    "uncoded_transmissions",
]

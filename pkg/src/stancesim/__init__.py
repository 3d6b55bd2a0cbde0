"""Closed-loop simulator of personalized recommendation under
content-agnostic moderation, with stance-neutrality metrics."""

__version__ = "0.1.0"

from .core import (InteractionLog, Slate, accumulate, exposure_from_log,
                   exposure_from_slates, exposure_of_item, stance_distribution)
from .engine import (ModeratorConfig, RecommenderConfig, RunConfig, run, sweep,
                     write_run)
from .scenario import (BootstrapConfig, ScenarioConfig, bootstrap,
                       generate_items, generate_users)
from .usermodel import UserModelConfig

__all__ = [
    "InteractionLog", "Slate", "accumulate", "exposure_from_log",
    "exposure_from_slates", "exposure_of_item", "stance_distribution",
    "ModeratorConfig", "RecommenderConfig", "RunConfig", "run", "sweep",
    "write_run", "BootstrapConfig", "ScenarioConfig", "bootstrap",
    "generate_items", "generate_users", "UserModelConfig", "__version__",
]

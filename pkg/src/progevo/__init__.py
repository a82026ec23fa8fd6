"""Progress-aware LLM evolutionary search with islands, backtracking and crossover."""

from progevo.progress import ProgressTracker, ScoreSpec
from progevo.policy import InterventionAction, PolicyConfig

__all__ = ["ProgressTracker", "ScoreSpec", "InterventionAction", "PolicyConfig"]
__version__ = "0.1.0"

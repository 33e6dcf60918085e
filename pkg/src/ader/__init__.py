"""Twin-critic actor-critic agents with an uncertainty-scheduled value target."""
from .agent import Agent, AgentConfig
from .harness import RunConfig, evaluate, run_ablation, run_training
from .uncertainty import ensemble_stats, eta, scheduled_target

__all__ = [
    "Agent", "AgentConfig", "RunConfig", "evaluate", "run_ablation", "run_training",
    "ensemble_stats", "eta", "scheduled_target",
]
__version__ = "0.1.0"

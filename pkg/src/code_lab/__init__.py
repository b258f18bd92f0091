"""Compositional design of environments: a generator that composes web and
gridworld tasks from primitives, a population of learners, and the joint
training loop with its baselines."""
from . import analysis, generator, gridenv, kernels, learner, nn, petri, trainer, webenv
from .generator import GeneratorConfig, GeneratorParams, ObjectiveConfig, sample_design
from .learner import LearnerConfig, WebLearner
from .trainer import Trainer, TrainingConfig

__version__ = "0.1.0"

__all__ = [
    "analysis", "generator", "gridenv", "kernels", "learner", "nn", "petri", "trainer", "webenv",
    "GeneratorConfig", "GeneratorParams", "ObjectiveConfig", "sample_design", "LearnerConfig",
    "WebLearner", "Trainer", "TrainingConfig",
]

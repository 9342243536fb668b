from .config import ExperimentConfig, load, parse
from .fitting import fit_decay_rate
from .runner import run_experiment, run_pseudoconformal

__all__ = ["ExperimentConfig", "load", "parse", "fit_decay_rate", "run_experiment", "run_pseudoconformal"]

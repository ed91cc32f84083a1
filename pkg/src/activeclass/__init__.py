"""Active classification as Bayesian sequential hypothesis testing."""

from .belief import (
    Belief,
    Observation,
    bayes_risk,
    entropy,
    expected_information_gain,
    expected_information_gain_set,
    map_decision,
    update,
    version_space_count,
)
from .model import Feature, Location, Scenario, is_noiseless, load_scenario, save_scenario, validate

__version__ = "0.1.0"

"""Threshold cascades on configuration-model random graphs.

Submodules:

- ``degree_model``: degree laws, threshold laws and seeding laws.
- ``graph_gen``: configuration-model multigraphs, percolation, components.
- ``diffusion``: finite-graph simulators (monotone cascade, best response).
- ``analytic``: large-graph limits and the quantities derived from them.
- ``harness``: experiment configs, Monte Carlo runs and the command line.
"""
from .degree_model import ActivationLaw, ConfigurationError, DegreeDistribution, ThresholdLaw
from .graph_gen import Multigraph, configuration_model
from .analytic import ModelParams

__all__ = [
    "ActivationLaw",
    "ConfigurationError",
    "DegreeDistribution",
    "ModelParams",
    "Multigraph",
    "ThresholdLaw",
    "configuration_model",
]
__version__ = "0.1.0"

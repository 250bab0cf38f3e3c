"""Finite-state Bayesian experiments, the Blackwell order, and the testing and
signaling games built on expected cross-posterior means."""
from . import beliefs, blackwell, ivp, kernels, signaling, testing_game  # noqa: F401

__version__ = "0.1.0"

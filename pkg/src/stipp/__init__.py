"""Multi-robot informative path planning over spatio-temporal GP fields."""

__version__ = "0.1.0"

from stipp.kernel import Hyperparams
from stipp.gp import Dataset, Posterior

__all__ = ["Hyperparams", "Dataset", "Posterior", "__version__"]

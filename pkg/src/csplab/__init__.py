"""Boolean CSP ensembles, single-layer QAOA simulation, and classical baselines."""

__version__ = "0.1.0"


class GenerationError(RuntimeError):
    """Raised when a randomized structure generator exhausts its attempt budget."""


class CapacityError(RuntimeError):
    """Raised when a request exceeds the configured state-vector size cap."""

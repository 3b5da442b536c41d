"""Laws of the supremum of Levy processes.

Numerical evaluators for the entrance laws q_t, q_t* of the excursion
measures of a Levy process reflected at its supremum/infimum, the joint
law of (time of the supremum, supremum, drawdown), the fluctuation
identities tying them together, and an independent Monte Carlo oracle.
"""

__version__ = "0.1.0"

from . import model
from . import entrance
from . import fluctuation
from . import jointlaw
from . import montecarlo

__all__ = [
    "model",
    "entrance",
    "fluctuation",
    "jointlaw",
    "montecarlo",
    "__version__",
]

"""Cooperative compute-and-forward: lattice codes, achievable rates and simulation."""
from .channel import *  # noqa: F401,F403
from .dmt import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .kernels import BACKEND
from .lattice import *  # noqa: F401,F403
from .linksim import *  # noqa: F401,F403
from .rates import *  # noqa: F401,F403
from .search import *  # noqa: F401,F403

__version__ = "0.1.0"

"""Finite-dimensional quantum measurement statistics.

Apparatus models, instruments (CP-map valued measures), posterior states,
dilations, and a cyclic-grid position measurement with controllable
posterior wave functions.
"""
from .apparatus import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .instrument import *  # noqa: F401,F403
from .observable import *  # noqa: F401,F403
from .operators import *  # noqa: F401,F403
from .policy import DEFAULT_POLICY, NumericPolicy, get_policy, use_policy  # noqa: F401
from .position import *  # noqa: F401,F403
from .random_ops import *  # noqa: F401,F403
from .states import *  # noqa: F401,F403

__version__ = "0.1.0"

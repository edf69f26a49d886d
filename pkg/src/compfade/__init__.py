"""Composite Fisher-Snedecor F fading channels and resource allocation.

Library layout:

* `specfun`     scalar special functions (log-gamma, beta, 2F1, Meijer-G
                reduction, exact gamma-ratio)
* `numerics`    adaptive semi-infinite quadrature, bisection, seeded
                chunked Monte Carlo
* `channel`     per-reflector / sub-channel / composite densities, exact
                samplers, diagnostics
* `power_alloc` water-filling under average and peak power constraints,
                ergodic capacity, traditional-model baseline
* `joint_alloc` iterative joint bandwidth-power allocation with KKT
                residual reporting
* `energy`      reflecting-surface vs relay power models, capacities and
                energy efficiencies
* `cli`         figure-reproducing CSV commands plus a validation suite
"""

from .channel import ChannelParams, FadingParams, SubchannelParams
from .energy import CircuitPowerModel, EeScenario, NodePowerModel
from .joint_alloc import JointProblem, SolverConfig
from .numerics import McConfig, QuadratureConfig
from .power_alloc import PowerBudget, PowerPolicy

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "FadingParams",
    "SubchannelParams",
    "CircuitPowerModel",
    "EeScenario",
    "NodePowerModel",
    "JointProblem",
    "SolverConfig",
    "McConfig",
    "QuadratureConfig",
    "PowerBudget",
    "PowerPolicy",
    "__version__",
]

"""Small-strain gradient plasticity with plastic spin.

Modules
-------
tensor_core
    3x3 tensor algebra and isotropic elasticity.
convex
    Dissipation functions, their conjugates and the elastic domain.
flow_rule
    Flow rates, return map, visco-plastic update, classical limit.
fields
    Structured-grid tensor fields, Curl / Div / Curl Curl, micro-hard
    boundary projection.
solver
    Incremental field solver, energies and audits.
scenarios, config, cli
    Scenario library, YAML configs and the command line.
"""

from .convex import Branch, GeneralizedStress, HardeningState, YieldParams
from .flow_rule import MaterialPointState, ModelParams
from .tensor_core import ElasticModuli

__all__ = [
    "Branch",
    "ElasticModuli",
    "GeneralizedStress",
    "HardeningState",
    "MaterialPointState",
    "ModelParams",
    "YieldParams",
]

__version__ = "0.1.0"

"""Sharpness example for lip-differentiability, with exact geometry and certified numerics.

Modules
-------
lorentz    distribution functions, rearrangements, Lorentz norms
capacity   Lipschitz bumps with plateau and small gradient norm
cubetree   nested dyadic cube families
sharpfn    the assembled function and its certified probes
gradcheck  chaining, maximal function and pointwise-gradient harness
cli        command-line front end
"""

from .capacity import Bump, BumpSpec, NotDegenerateError, bump_lip, eval_bump, make_bump, u_value
from .cubetree import (
    CubeChain,
    DyadicCube,
    ParamSequence,
    children_count,
    choose_a,
    generation_measure,
    inner_cube,
    is_selected_child,
    locate,
    validate_params,
)
from .dyadic import Dyadic, ScaledFloat
from .lorentz import (
    IndicatorProfile,
    LogProfile,
    LorentzIndex,
    RadialProfile,
    StepFunction,
    distribution_function,
    lorentz_norm,
    radial_map_norm,
    rearrangement,
)
from .sharpfn import SharpExample, eval_f, lip_field_norm_budget, lip_probe, nondiff_witness, sup_on_ball

__version__ = "0.1.0"

__all__ = [
    "Bump",
    "BumpSpec",
    "NotDegenerateError",
    "bump_lip",
    "eval_bump",
    "make_bump",
    "u_value",
    "CubeChain",
    "DyadicCube",
    "ParamSequence",
    "children_count",
    "choose_a",
    "generation_measure",
    "inner_cube",
    "is_selected_child",
    "locate",
    "validate_params",
    "Dyadic",
    "ScaledFloat",
    "IndicatorProfile",
    "LogProfile",
    "LorentzIndex",
    "RadialProfile",
    "StepFunction",
    "distribution_function",
    "lorentz_norm",
    "radial_map_norm",
    "rearrangement",
    "SharpExample",
    "eval_f",
    "lip_field_norm_budget",
    "lip_probe",
    "nondiff_witness",
    "sup_on_ball",
]

"""Groupwise image registration with a nuclear-norm-constrained robust PCA dissimilarity.

The package couples an l1 data term against per-image low-rank
approximations (with the nuclear norm of their centered stack bounded by an
explicit threshold), total-variation regularization of the displacement
fields, a first-order primal-dual solver for the linearized subproblems,
and a coarse-to-fine multilevel driver.  Baseline group measures, a
synthetic benchmark generator and landscape/registration experiment
commands are included.
"""

from .grid import DisplacementField, Image, LandmarkSet, map_landmarks, warp
from .metrics import (
    DecompositionResult,
    casorati,
    d_delta_rpca,
    d_pca2,
    d_pcp,
    d_var,
    landmark_accuracy,
)
from .multilevel import RegistrationConfig, RegistrationResult, build_pyramid, register
from .solver import NumericFailure, PdhgSettings, choose_steps, pdhg_solve
from .synth import DeformationSchedule, EllipseSceneConfig, generate_ellipse_sequence, prescribed_field

__version__ = "0.1.0"

__all__ = [
    "DisplacementField",
    "Image",
    "LandmarkSet",
    "map_landmarks",
    "warp",
    "DecompositionResult",
    "casorati",
    "d_delta_rpca",
    "d_pca2",
    "d_pcp",
    "d_var",
    "landmark_accuracy",
    "RegistrationConfig",
    "RegistrationResult",
    "build_pyramid",
    "register",
    "NumericFailure",
    "PdhgSettings",
    "choose_steps",
    "pdhg_solve",
    "DeformationSchedule",
    "EllipseSceneConfig",
    "generate_ellipse_sequence",
    "prescribed_field",
    "__version__",
]

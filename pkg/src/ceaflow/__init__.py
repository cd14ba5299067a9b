"""Centro-equiaffine curvature flow of convex curves, in support-function form."""

from ._kernels import BACKEND
from .affine import ScalarInvariants, analyze, check_inequalities
from .curve import (
    AngularGrid,
    ConvexityError,
    CurveSpec,
    SupportCurve,
    from_spec,
    make_circle,
    make_ellipse,
    make_fourier,
    validate,
)
from .flow import FlowParams, FlowTrajectory, rhs, run, step
from .sl2 import SL2Transform, apply, euclidean_length, normalize

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AngularGrid",
    "ConvexityError",
    "CurveSpec",
    "FlowParams",
    "FlowTrajectory",
    "SL2Transform",
    "ScalarInvariants",
    "SupportCurve",
    "analyze",
    "apply",
    "check_inequalities",
    "euclidean_length",
    "from_spec",
    "make_circle",
    "make_ellipse",
    "make_fourier",
    "normalize",
    "rhs",
    "run",
    "step",
    "validate",
]

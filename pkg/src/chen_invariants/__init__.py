"""Pointwise Chen-type invariants of submanifolds in real and complex space forms."""

from .bounds import (
    LAGRANGIAN_ORDER_N,
    REAL_FORM,
    TOTALLY_REAL,
    Verdict,
    bound_lagrangian,
    bound_real,
    bound_totally_real,
    coefficient_comparison,
    equality_case_generate,
    equality_shape_detect,
    verify,
)
from .curvature import CurvatureView, jacobi_form, ric_L, scalar_curvature, sectional_block
from .errors import DegenerateQP, FrameError, InconsistentKindError, ShapeValidationError
from .grassmann import DeltaResult, ThetaResult, delta_k, theta_given_X, theta_k, theta_k_bruteforce
from .qp import (
    QPSolution,
    TraceConstrainedQP,
    build_f1_lagrangian,
    build_fr_lagrangian,
    build_fr_real,
    numeric_max_oracle,
    restricted_hessian,
    solve_closed_form,
    solve_kkt,
)
from .shapes import (
    AmbientForm,
    LagrangianShape,
    MeanCurvatureRecord,
    ShapeOperatorSet,
    mean_curvature,
    rotate_normal_frame,
    rotate_tangent_frame,
    weingarten,
)

__version__ = "0.1.0"

__all__ = [
    "AmbientForm",
    "bound_lagrangian",
    "bound_real",
    "bound_totally_real",
    "build_f1_lagrangian",
    "build_fr_lagrangian",
    "build_fr_real",
    "coefficient_comparison",
    "CurvatureView",
    "DegenerateQP",
    "delta_k",
    "DeltaResult",
    "equality_case_generate",
    "equality_shape_detect",
    "FrameError",
    "InconsistentKindError",
    "jacobi_form",
    "LAGRANGIAN_ORDER_N",
    "LagrangianShape",
    "mean_curvature",
    "MeanCurvatureRecord",
    "numeric_max_oracle",
    "QPSolution",
    "REAL_FORM",
    "restricted_hessian",
    "ric_L",
    "rotate_normal_frame",
    "rotate_tangent_frame",
    "scalar_curvature",
    "sectional_block",
    "ShapeOperatorSet",
    "ShapeValidationError",
    "solve_closed_form",
    "solve_kkt",
    "theta_given_X",
    "theta_k",
    "theta_k_bruteforce",
    "ThetaResult",
    "TOTALLY_REAL",
    "TraceConstrainedQP",
    "Verdict",
    "verify",
    "weingarten",
]

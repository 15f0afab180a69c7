"""Exact cut-and-project schemes, point sets, and substitution rules."""

__version__ = "0.1.0"

from .field import FieldScalar, field_cmp, galois_conj, mat_solve
from .scheme import Scheme, blockdiag, build_scheme, companion_scheme
from .region import Region1D, Region2D
from .window import (
    IfsWindow,
    Indicator,
    InvalidIfsError,
    Window,
    acceptance_domain,
    acceptance_partition,
    fd_check,
    ifs_attractor,
    rationality_check,
)
from .lattice_enum import lattice_points
from .pattern import (
    OutOfRadiusError,
    Patch,
    PointSet,
    gaps_1d,
    generate,
    indicator_set,
    patch_at,
    pointset_to_csv,
    pointset_to_json,
    torus_param,
)
from .substitution import (
    BoundExceededError,
    RuleCell,
    RuleDerivationError,
    SubVerdict,
    SubstitutionRule,
    SymmetryResult,
    UnsupportedWindowError,
    VerifyReport,
    apply_rule,
    decide_sub,
    derive_rule,
    emit_gifs,
    lids_power,
    minimal_rule,
    symmetry_check,
    verify_self_similarity,
)

__all__ = [
    "FieldScalar",
    "field_cmp",
    "galois_conj",
    "mat_solve",
    "Scheme",
    "blockdiag",
    "build_scheme",
    "companion_scheme",
    "Region1D",
    "Region2D",
    "IfsWindow",
    "Indicator",
    "InvalidIfsError",
    "Window",
    "acceptance_domain",
    "acceptance_partition",
    "fd_check",
    "ifs_attractor",
    "rationality_check",
    "lattice_points",
    "OutOfRadiusError",
    "Patch",
    "PointSet",
    "gaps_1d",
    "generate",
    "indicator_set",
    "patch_at",
    "pointset_to_csv",
    "pointset_to_json",
    "torus_param",
    "BoundExceededError",
    "RuleCell",
    "RuleDerivationError",
    "SubVerdict",
    "SubstitutionRule",
    "SymmetryResult",
    "UnsupportedWindowError",
    "VerifyReport",
    "apply_rule",
    "decide_sub",
    "derive_rule",
    "emit_gifs",
    "lids_power",
    "minimal_rule",
    "symmetry_check",
    "verify_self_similarity",
]

"""Calibrated affine connections with skew torsion on S^2 x T^2.

Builds connections ``nabla^LC + T`` whose torsion 3-form lies in a fixed mixed
cohomology class, computes their curvature two independent ways and tests
whether the holonomy preserves the product splitting.
"""
from .calibration import (
    AdmissibleTorsion,
    CalibrationClass,
    PotentialSpec,
    admissible_from_spec,
    build_admissible_torsion,
    harmonic_representative,
    hodge_project,
    sample_potentials,
)
from .curvature import (
    ConnectionField,
    CurvatureField,
    block_report,
    calibrated_connection,
    curvature_from_eq1,
    curvature_from_gamma,
    dual_path_gap,
    harmonic_connection,
    levi_civita_connection,
    ricci,
)
from .errors import ConfigError, DomainError, ShapeError
from .forms import FormField, TorsionField, codifferential, d, form_to_torsion, hodge_star, l2_inner, wedge
from .geometry import GridSpec, ManifoldSpec, QuadratureGrid, build_grid, integrate, orthonormal_frame
from .harness import (
    ExperimentConfig,
    OffDiagonalBlockField,
    convergence_study,
    lemma_orthogonality,
    noncancellation_certificate,
    offdiagonal_blocks,
    offdiagonal_scan,
    ricci_diagonality_probe,
)
from .holonomy import HolonomyReport, LoopSpec, holonomy_report, lie_closure, parallel_transport, splitting_test

__version__ = "0.1.0"

__all__ = [
    "AdmissibleTorsion",
    "CalibrationClass",
    "ConfigError",
    "ConnectionField",
    "CurvatureField",
    "DomainError",
    "ExperimentConfig",
    "FormField",
    "GridSpec",
    "HolonomyReport",
    "LoopSpec",
    "ManifoldSpec",
    "OffDiagonalBlockField",
    "PotentialSpec",
    "QuadratureGrid",
    "ShapeError",
    "TorsionField",
    "admissible_from_spec",
    "block_report",
    "build_admissible_torsion",
    "build_grid",
    "calibrated_connection",
    "codifferential",
    "convergence_study",
    "curvature_from_eq1",
    "curvature_from_gamma",
    "d",
    "dual_path_gap",
    "form_to_torsion",
    "harmonic_connection",
    "harmonic_representative",
    "hodge_project",
    "hodge_star",
    "holonomy_report",
    "integrate",
    "l2_inner",
    "lemma_orthogonality",
    "levi_civita_connection",
    "lie_closure",
    "noncancellation_certificate",
    "offdiagonal_blocks",
    "offdiagonal_scan",
    "orthonormal_frame",
    "parallel_transport",
    "ricci",
    "ricci_diagonality_probe",
    "sample_potentials",
    "splitting_test",
    "wedge",
]

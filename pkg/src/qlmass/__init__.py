"""Quasi-local mass of 2-surfaces: spectral geometry on the sphere, isometric
embedding, Jang's equation, mass functionals and the boundary Dirac operator."""

from .errors import (
    AdmissibilityError,
    ConfigurationError,
    ConvergenceError,
    DimensionError,
    GeometryError,
    PreconditionError,
    QLMassError,
)
from .sphere_spectral import SphereGrid, make_grid
from .surface_geometry import SurfaceMetricBundle, build_bundle, convexity_check, gauss_curvature
from .embedding import Embedding3, MinkowskiEmbedding, embed_weyl, extrinsic_data_r3, lift_and_frames, verify_mean1
from .jang import BallDataSet, HorizonObstruction, JangOptions, JangSolution, make_ball_grid, solve_jang
from .mass_functionals import MassReport, WangYauBoundaryData, brown_york, liu_yau, wang_yau_reduced
from .dirac import (
    BoundarySpinor,
    DiracSpectrum,
    FlatBallSpinor,
    boundary_dirac,
    flat_ball_solve,
    spectrum_and_projections,
)
from .catalog import get_ball_dataset, get_boundary_dataset, list_entries

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConfigurationError",
    "ConvergenceError",
    "DimensionError",
    "GeometryError",
    "PreconditionError",
    "QLMassError",
    "SphereGrid",
    "make_grid",
    "SurfaceMetricBundle",
    "build_bundle",
    "convexity_check",
    "gauss_curvature",
    "Embedding3",
    "MinkowskiEmbedding",
    "embed_weyl",
    "extrinsic_data_r3",
    "lift_and_frames",
    "verify_mean1",
    "BallDataSet",
    "HorizonObstruction",
    "JangOptions",
    "JangSolution",
    "make_ball_grid",
    "solve_jang",
    "MassReport",
    "WangYauBoundaryData",
    "brown_york",
    "liu_yau",
    "wang_yau_reduced",
    "BoundarySpinor",
    "DiracSpectrum",
    "FlatBallSpinor",
    "boundary_dirac",
    "flat_ball_solve",
    "spectrum_and_projections",
    "get_ball_dataset",
    "get_boundary_dataset",
    "list_entries",
]

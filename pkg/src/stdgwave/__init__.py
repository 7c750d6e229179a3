"""Space-time discontinuous Galerkin solver for the first-order acoustic
wave system on 2D tensor-product prismatic meshes."""

from .dg_assembly import (
    DegreeSpec,
    DiscreteField,
    FluxParams,
    ProblemData,
    SlabOperator,
    apply_bilinear,
    march,
)
from .mesh2d import (
    SpatialMesh,
    bisect_marked,
    corner_refine,
    l_shaped_mesh,
    unit_square_mesh,
    uniform_refine,
)
from .spacetime import SpaceTimeMesh, build_spacetime, uniform_partition

__version__ = "0.1.0"

__all__ = [
    "DegreeSpec",
    "DiscreteField",
    "FluxParams",
    "ProblemData",
    "SlabOperator",
    "SpaceTimeMesh",
    "SpatialMesh",
    "apply_bilinear",
    "bisect_marked",
    "build_spacetime",
    "corner_refine",
    "l_shaped_mesh",
    "march",
    "uniform_partition",
    "uniform_refine",
    "unit_square_mesh",
    "__version__",
]

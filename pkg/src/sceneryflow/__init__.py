"""Magnification dynamics on finite-depth dyadic measures.

Library layout:

- ``dyadic``: words, cubes and the homotheties between them
- ``measure``: dyadic measures, conditioning, translation/rescaling
- ``distribution``: finitely supported distributions over measures
- ``metric``: exact bounded-Lipschitz distances via linear programming
- ``cp``: magnification dynamics, its diagnostics, doubled-window sampling
- ``flow``: continuous sceneries, time averages and the centering operation
- ``splice``: splicing constructions and schedules
- ``cli`` / ``experiments``: reproducible experiment runner
"""

from .dyadic import CubeRef, Homothety, Word, cube_homothety, point_to_word, word_to_cube
from .errors import (
    ConditionOnNull,
    EmptyOutput,
    OracleTooLarge,
    ResolutionExceeded,
    SceneryFlowError,
    ShapeError,
    SolverError,
)
from .measure import (
    DyadicMeasure,
    ProductMeasure,
    bernoulli,
    conditional,
    intensity_of_family,
    lebesgue,
    load_measure,
    restrict_normalize,
    save_measure,
    translate_scale,
)

__version__ = "0.1.0"

__all__ = [
    "Word",
    "CubeRef",
    "Homothety",
    "word_to_cube",
    "cube_homothety",
    "point_to_word",
    "DyadicMeasure",
    "ProductMeasure",
    "lebesgue",
    "bernoulli",
    "conditional",
    "restrict_normalize",
    "translate_scale",
    "intensity_of_family",
    "save_measure",
    "load_measure",
    "SceneryFlowError",
    "ConditionOnNull",
    "ResolutionExceeded",
    "ShapeError",
    "SolverError",
    "OracleTooLarge",
    "EmptyOutput",
]

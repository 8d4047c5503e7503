"""Free vibration of cracked functionally graded plates by extended isogeometric analysis.

The pipeline runs NURBS patch -> crack classification -> enriched assembly ->
boundary constraints -> generalized eigenproblem::

    from xigaplate import parse_config, run_case
    result, ctx = run_case(parse_config(case_dict), write=False)
    result.normalized   # normalized natural frequencies
"""

from .assembly import DofMap, assemble
from .config import CaseConfig, ConfigError, load_config, parse_config, run_case
from .crack import CrackModel, classify
from .geometry import Patch, circular_patch, half_annulus_patch, square_patch
from .material import Constituent, MaterialLaw, PlateTheory, constitutive_set, preset
from .reference import ReferenceTable, compare, list_references, load_reference
from .solve import (BoundarySpec, ConstraintError, GeometrySpec, ModalResult, NumericalError,
                    apply_constraints, normalize, solve_modal)

__all__ = [
    "BoundarySpec", "CaseConfig", "ConfigError", "Constituent", "ConstraintError", "CrackModel",
    "DofMap", "GeometrySpec", "MaterialLaw", "ModalResult", "NumericalError", "Patch",
    "PlateTheory", "ReferenceTable", "apply_constraints", "assemble", "circular_patch",
    "classify", "compare", "constitutive_set", "half_annulus_patch", "list_references",
    "load_config", "load_reference", "normalize", "parse_config", "preset", "run_case",
    "solve_modal", "square_patch",
]
__version__ = "0.1.0"

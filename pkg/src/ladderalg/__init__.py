"""Ladder operators and su(1,1)/su(2) realizations of exactly solvable potentials.

Symbolic closure checks, finite-difference operators, case classification of the
realized algebra and ladder-generated spectra compared with direct eigensolves.
"""

__version__ = "0.1.0"

from .algebra import (AlgebraReport, CaseClassification, XiSolution, assemble_generators,
                      classify_case, freedom_invariance, identity_residual, solve_xi,
                      verify_algebra, verify_family, verify_nlda)
from .catalog import FamilySpec, family_ids, get_family, load_catalog
from .consistency import audit_printed, check_consistency
from .errors import (AlgebraNotRealizable, AmbiguousGroundState, BranchViolation,
                     ConstraintViolation, DefectiveError, EtaRelationViolated,
                     FunctionalEquationViolation, GridError, LadderError, SingularEvaluation)
from .expr import Expr, differentiate, parse, to_string
from .families import LadderRealization, instantiate, rescale_s1, shift_b0
from .operators import (Grid, HFunc, LinearOperator, Spectrum, adjoint, build_hamiltonian,
                        commutator, operator_function, solve_eigen, subspace_residual)
from .spectra import SpectrumComparison, compare, ground_state_from_annihilator, ladder_climb

__all__ = [
    "AlgebraNotRealizable", "AlgebraReport", "AmbiguousGroundState", "BranchViolation",
    "CaseClassification", "ConstraintViolation", "DefectiveError", "EtaRelationViolated",
    "Expr", "FamilySpec", "FunctionalEquationViolation", "Grid", "GridError", "HFunc",
    "LadderError", "LadderRealization", "LinearOperator", "SingularEvaluation", "Spectrum",
    "SpectrumComparison", "XiSolution", "adjoint", "assemble_generators", "audit_printed",
    "build_hamiltonian", "check_consistency", "classify_case", "commutator", "compare",
    "differentiate", "family_ids", "freedom_invariance", "get_family", "ground_state_from_annihilator",
    "identity_residual", "instantiate", "ladder_climb", "load_catalog", "operator_function",
    "parse", "rescale_s1", "shift_b0", "solve_eigen", "solve_xi", "subspace_residual",
    "to_string", "verify_algebra", "verify_family", "verify_nlda",
]

"""Doubly periodic minimal surfaces with parallel Scherk ends.

Solves the two-parameter period problem of the family, integrates the
Weierstrass data over the fundamental piece, assembles and exports meshes,
and audits the result.
"""

from ._accel import BACKEND
from .algebra import FamilyParams, check_lemma_ab, derive_constants, eval_g
from .curve import CurvePoint, apply_automorphism, eval_forms, homology_loop, lift_w
from .errors import DP3Error
from .meshio import export_mesh, parse_obj, parse_ply, write_mesh
from .periods import (
    SolveResult, asymptotic_checks, eval_v2, eval_xi1, eval_xi2, sign_field, solve_lambda2_on_c2,
    solve_period_problem,
)
from .quadrature import SingularIntegral, integrate_contour, integrate_endpoint_singular
from .surface import assemble_surface, build_domain_grid, integrate_piece
from .verify import (
    VerificationReport, verify_minimality_and_graph, verify_periods, verify_residues, verify_symmetries,
)

__version__ = "0.1.0"

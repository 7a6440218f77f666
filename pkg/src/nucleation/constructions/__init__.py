"""Upper-bound microstructures as admissible piecewise-affine scenes."""

from .basic import construct_ball, construct_diamond_nd, construct_lens21
from .branching import (add_block, branching_block, branching_psi, construct_branch_rect21,
                        construct_branch_rect_nd)
from .common import Construction, ConstructionError, ConstructionParams, constants
from .second_order import construct_double_branch_4w, construct_lens_branch_4w, lens_subdivision
from .tartar import (construct_tartar, default_order, tartar_bound_form, tartar_cell_count,
                     tartar_scales)

__all__ = ["Construction", "ConstructionError", "ConstructionParams", "constants",
           "construct_ball", "construct_diamond_nd", "construct_lens21",
           "add_block", "branching_block", "branching_psi",
           "construct_branch_rect21", "construct_branch_rect_nd",
           "construct_double_branch_4w", "construct_lens_branch_4w", "lens_subdivision",
           "construct_tartar", "default_order", "tartar_bound_form", "tartar_cell_count",
           "tartar_scales"]

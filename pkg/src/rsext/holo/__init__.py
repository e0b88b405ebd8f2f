"""Holomorphic maps: catalog, Jacobians, branch tracking and inversion."""
from .branch import BranchTracker, branch_power, continuous_log
from .catalog import CATALOG, catalog_map
from .inversion import (INSIDE, OUTSIDE, UNKNOWN, Membership, argument_principle, image_contains,
                        image_contains_many, inverse_map, invert, invert_many, winding_number)
from .maps import (HoloMap, ImageDescriptor, cauchy_riemann_residual, compose, diagonal, fd_jacobian,
                   linear_map, scalar_map, scale)

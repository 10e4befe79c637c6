"""Band-preserving defects of operators on finite-dimensional Banach lattices."""

from .lattice import (L1, L2, LINF, BandProjection, CapExceeded, LatticeError, NormSpec, Partition,
                      vector_norm)
from .operators import (Bracket, CenterEstimate, DefectReport, bp_defect, commutator_max,
                        defect_report, dist_to_diagonal, dp_defect_lb, inverse_defect_check,
                        ip_defect, operator_norm, rho_center)
from .approximants import (ck_multiplier, diagonal_part, local_bp_approximant,
                           offdiag_average_check, partition_compress, positive_net_infimum)

__version__ = "0.1.0"

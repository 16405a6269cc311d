"""Self-contained semidefinite programming layer."""

from .dump import dump_problem, load_problem
from .problem import (BlockStructure, SdpOutcome, SdpProblem, smat, svec,
                      svec_dim, verify_dual_infeasibility,
                      verify_primal_infeasibility)
from .solver import (STATUS_DUAL_INFEASIBLE, STATUS_INACCURATE,
                     STATUS_ITERATION_LIMIT, STATUS_OPTIMAL,
                     STATUS_PRIMAL_INFEASIBLE, solve)

__all__ = [
    "BlockStructure", "SdpOutcome", "SdpProblem", "smat", "svec", "svec_dim",
    "verify_dual_infeasibility", "verify_primal_infeasibility",
    "dump_problem", "load_problem", "solve",
    "STATUS_OPTIMAL", "STATUS_PRIMAL_INFEASIBLE", "STATUS_DUAL_INFEASIBLE",
    "STATUS_INACCURATE", "STATUS_ITERATION_LIMIT",
]

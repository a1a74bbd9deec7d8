"""Real reformulations of complex SDPs and complex moment relaxations."""

from .complex_sdp import (
    ComplexMatrix,
    ComplexSDP,
    ComplexVector,
    HermitianMatrix,
    apply_constraints,
    embed_feasible,
    inner_product,
    realify_psd,
    recover_complex_solution,
    reformulate_dual,
    reformulate_primal_dualview,
    reformulate_primal_naive,
    structural_constraints,
)
from .polynomials import (
    CPOP,
    CPolynomial,
    MonomialBasis,
    gen_sphere_instance,
    gen_unitnorm_instance,
    monomial_basis,
)
from .problem_io import load_problem, save_problem
from .program import LinearFunctional, RealConicProgram, Row, SolveResult
from .relaxation import (
    DataMatrixSet,
    RelaxationArtifact,
    assemble_hsos,
    build_data_matrices,
    extract_moments,
    moment_matrix,
    size_report,
)
from .sdpa import export_sdpa, import_sdpa
from .solver import SolverOptions, solve
from .validation import (
    SampleReport,
    compare_reformulations,
    grid_min_1d,
    sample_upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "CPOP",
    "CPolynomial",
    "ComplexMatrix",
    "ComplexSDP",
    "ComplexVector",
    "DataMatrixSet",
    "HermitianMatrix",
    "LinearFunctional",
    "MonomialBasis",
    "RealConicProgram",
    "RelaxationArtifact",
    "Row",
    "SampleReport",
    "SolveResult",
    "SolverOptions",
    "apply_constraints",
    "assemble_hsos",
    "build_data_matrices",
    "compare_reformulations",
    "embed_feasible",
    "export_sdpa",
    "extract_moments",
    "gen_sphere_instance",
    "gen_unitnorm_instance",
    "grid_min_1d",
    "import_sdpa",
    "inner_product",
    "load_problem",
    "moment_matrix",
    "monomial_basis",
    "realify_psd",
    "recover_complex_solution",
    "reformulate_dual",
    "reformulate_primal_dualview",
    "reformulate_primal_naive",
    "sample_upper_bound",
    "save_problem",
    "size_report",
    "solve",
    "structural_constraints",
]

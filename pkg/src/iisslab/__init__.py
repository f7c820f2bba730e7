"""iisslab: numerical verification of ISS/iISS stability estimates for
discretized semilinear and bilinear evolution systems."""

from .comparison import (
    ComparisonFunction,
    KLFunction,
    IissGainTriple,
    ImplicativePair,
    check_class,
    check_kl,
    invert,
    weak_triangle_check,
    implicative_to_dissipative,
    dissipative_to_implicative,
    assemble_bilinear_iiss_gains,
)
from .discretization import (
    Grid1D,
    GridFunction,
    BilinearMap,
    EvolutionSystem,
    build_dirichlet_laplacian,
    laplacian_eigenvalues,
    norm,
    build_tan_input_operator,
    build_hat_input,
    build_saturated_bilinearity,
    build_multiplicative_bilinearity,
    tan_half_power_integral,
)
from .semigroup import (
    SemigroupCache,
    TrajectoryRecord,
    expm_apply,
    integrate_mild,
    semigroup_constants,
    gronwall_majorant,
    lp_iss_constant,
    input_integral,
)
from .lyapunov import (
    LyapunovCertificate,
    DissipationReport,
    solve_lyapunov,
    eval_V,
    eval_W,
    certify_dissipation,
    certify_implicative,
    dissipation_rhs_bilinear,
    lie_derivative_fd,
)

__version__ = "0.1.0"

"""Convex lifting of vectorial variational problems to currents in product
space, with a cubical discrete exterior calculus and a primal-dual solver."""

from .multivector import (
    KVector,
    MultiIndex,
    graph_embed,
    hodge_split_2_4,
    hodge_star_2_4,
    index_set,
    jacobian_of,
    lex_rank,
    mass_comass,
    num_components,
    project_comass_ball,
    prox_mass,
    wedge,
)
from .cubical import Chain, Cochain, CubicalComplex, ElementaryCube, dirichlet_datum, pairing
from .whitney import SampleSet, chain_density, generate_samples, sampling_operator, whitney_eval
from .lifting import (
    BrachistochroneCost,
    CostVolume,
    RegistrationCost,
    ScalarTVCost,
    polyconvex_consistency,
)
from .problems import (
    BuiltProblem,
    ExtractedSolution,
    ProblemSpec,
    build,
    build_brachistochrone,
    build_denoise,
    build_registration,
    build_scalar_lifting,
    chain_energy,
    cycloid_through,
    extract_map,
    extract_scalar,
    fiber_concentration,
    graph_chain,
    graph_pairing_energy,
    map_graph_chain,
    warm_start,
)
from .formats import (
    read_cost_volume,
    read_pgm,
    read_ppm,
    write_cost_volume,
    write_pgm,
    write_ppm,
)
from .solver import (
    PDHGState,
    SaddleProblem,
    SolverConfig,
    SolverDivergence,
    SolverReport,
    SolverResult,
    assemble,
    pdhg_run,
    residuals,
)

__version__ = "0.1.0"

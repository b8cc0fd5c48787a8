"""Simulator and certified numerics for a branching-death-coalescence-mutation
phylogenetic network model."""

__version__ = "0.1.0"

from .params import ModelParams, rho
from .rng import RngStream
from .model import (
    BIRTH,
    COALESCENCE,
    DEATH,
    MUTATION,
    MarkedTrajectory,
    condition_on_mutations,
    paste_back_to_back,
    sample_nu_circ,
    sample_x_mut,
    simulate_trajectory,
)
from .analytics import (
    CertifiedValue,
    NuCircPmf,
    OffspringPmf,
    TiltSolution,
    expected_M,
    extinction_probability,
    g_derivatives,
    g_eval,
    laplace_f,
    malthusian,
    nu_circ_pmf,
    offspring_pmf,
    pgf_from_state,
    simple_pext_bounds,
    zeta_tilt,
)
from .network import (
    ColorNetwork,
    GenealogyTree,
    GluedNetwork,
    PointRef,
    contour,
    decorate,
    distance,
    glue,
    sample_genealogy_tree,
    sample_network,
    uniform_point,
)
from .limits import (
    CrtConstants,
    Estimate,
    LocalBall,
    brownian_excursion_max,
    crt_constants,
    gw_size_probability,
    prob_N,
    sample_focal_network,
    sample_local_ball,
    sample_spinal_network,
    verify_crt_scaling,
)

__all__ = [
    "ModelParams",
    "RngStream",
    "MarkedTrajectory",
    "rho",
    "simulate_trajectory",
    "condition_on_mutations",
    "paste_back_to_back",
    "sample_nu_circ",
    "sample_x_mut",
    "BIRTH",
    "DEATH",
    "COALESCENCE",
    "MUTATION",
    "CertifiedValue",
    "OffspringPmf",
    "TiltSolution",
    "NuCircPmf",
    "expected_M",
    "g_eval",
    "g_derivatives",
    "extinction_probability",
    "simple_pext_bounds",
    "offspring_pmf",
    "zeta_tilt",
    "nu_circ_pmf",
    "laplace_f",
    "malthusian",
    "pgf_from_state",
    "ColorNetwork",
    "GenealogyTree",
    "GluedNetwork",
    "PointRef",
    "decorate",
    "sample_genealogy_tree",
    "glue",
    "sample_network",
    "distance",
    "uniform_point",
    "contour",
    "CrtConstants",
    "Estimate",
    "LocalBall",
    "crt_constants",
    "gw_size_probability",
    "verify_crt_scaling",
    "brownian_excursion_max",
    "sample_focal_network",
    "sample_spinal_network",
    "sample_local_ball",
    "prob_N",
    "__version__",
]

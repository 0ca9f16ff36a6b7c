"""Most-probable-path estimation for conditioned scalar diffusions.

The package discretises the variational characterisation of maximum a
posteriori paths for diffusions with additive noise: the MAP path
minimises a functional combining a drift-dependent running cost, data
terms, and the squared path energy of the Gaussian reference measure.
Alongside the functionals and their quasi-Newton minimisation, the
package verifies the defining small-ball probability limits on
finite-dimensional Gaussians by Monte Carlo and runs posterior
consistency experiments in the small-noise and large-sample regimes.
"""

from .consistency import (
    ConsistencyReport,
    ForwardMap,
    c1_distance,
    e_norm_sq,
    fit_power_law,
    large_sample_experiment,
    small_noise_experiment,
    smoothing_large_sample,
    smoothing_small_noise,
    tikhonov_direct,
    tikhonov_map_finite,
)
from .drift import DriftModel, by_name, check_assumption, double_well, ou, psi, psi_prime, zero
from .errors import (
    FitError,
    IntegrationDivergedError,
    InvalidPathError,
    OMPathError,
    StagnationError,
)
from .functional import (
    BRIDGE,
    SMOOTHING,
    UNCONDITIONED,
    OMProblem,
    derivative_jumps,
    free_node_mask,
    load_problem,
    observation_indices,
    om_gradient,
    om_value,
    phi,
)
from .gaussian import (
    FiniteGaussian,
    GridPath,
    bridge_mean,
    cameron_martin_norm_sq,
    h1_seminorm_sq,
    read_path_csv,
    sample_finite_gaussian,
    write_path_csv,
)
from .optimize import (
    MinimizationResult,
    MultistartReport,
    bfgs,
    default_starts,
    minimize,
    multistart,
)
from .rng import substream
from .sde import (
    ObservationSet,
    euler_maruyama,
    even_observation_times,
    observe,
    read_observations_csv,
    write_observations_csv,
)
from .smallball import (
    BallEstimate,
    MapRanking,
    RatioTable,
    ball_prob,
    empirical_map,
    lemma_bound_check,
    om_point_value,
    om_ratio_check,
)

__version__ = "0.1.0"

"""Stationary stable and semi-stable processes from nonsingular dynamics.

The package builds sigma-finite stable sequence measures as skew-product
extensions of nonsingular base systems, samples the associated Poisson
clouds into stationary heavy-tailed paths, and ships the estimators used to
check the construction's structural and ergodic properties at desk scale.
"""

from .systems import (
    BernoulliShift,
    CocycleValue,
    DepthCapExceeded,
    DyadicPoint,
    GaussianTranslation,
    Odometer,
    make_system,
)
from .extension import (
    FiberLaw,
    MaharamPoint,
    additive_to_multiplicative,
    discrete_maharam_apply,
    dilation_mass_ratio,
    fiber_mass,
    maharam_apply,
    multiplicative_to_additive,
    pareto_interval_mass,
    pareto_sample,
    sample_span_factor,
    scaling_flow,
    span_normalizer,
)
from .levy import (
    OrbitWindow,
    ScalingSupportError,
    StableConfig,
    WindowFunctional,
    abs_band,
    levy_integrability,
    levy_integral_constant,
    orbit_values_batch,
    orbit_window,
    randomize_semistable,
    scaling_check,
    semistable_beta,
    semistable_orbit,
    semistable_span,
    signed_orbit_window,
)
from .simulate import (
    PathBatch,
    PathSample,
    PointBudgetExceeded,
    PoissonSample,
    clip_unit,
    cms_oracle,
    cms_samples,
    compensator_values,
    eps_for_budget,
    expected_points,
    marginal_samples,
    sample_poisson_points,
    simulate_at_indices,
    simulate_path,
    simulate_paths,
    stable_scale,
)
from .diagnostics import (
    CFGrid,
    CorrelationSeries,
    Estimate,
    cf_consistency,
    empirical_cf,
    hill_tail_index,
    idp_rigidity_correlation,
    koopman_correlation,
    lk_exponent,
    monotone_trend,
    rigidity_scan,
    sum_stability_test,
    zero_type_functional,
)

__version__ = "0.1.0"

"""Bayesian frequency analysis of annual-maxima river stage records."""

__version__ = "0.1.0"

from .bayes import (  # noqa: E402
    PRIOR_MENU,
    ChainConfig,
    ParameterEnsemble,
    PriorSpec,
    log_posterior,
    log_prior,
    map_estimate,
    mh_sample,
    mle_fit,
)
from .gev import (  # noqa: E402
    GevParams,
    ModelStructure,
    gev_cdf,
    gev_logpdf,
    gev_quantile,
    location_at,
    log_likelihood,
)
from .hazard import (  # noqa: E402
    CovariateRef,
    equivalent_return_period,
    return_curve,
    return_level,
    return_level_ensemble,
    survival_function,
)
from .ingest import (  # noqa: E402
    AlignedDataset,
    AnnualMaximaSeries,
    CovariateSeries,
    MonthlyIndexSeries,
    StationMeta,
    align,
    load_annual_maxima,
    load_monthly_index,
    seasonal_mean_covariate,
)
from .stattests import assess_nonstationarity, mann_kendall_test, pettitt_test  # noqa: E402
from .uq import ScenarioGrid, anova_effects, build_scenario_grid, decompose  # noqa: E402

"""Multiple testing procedures that control the k-FWER.

Generalized Simes, Holm and Hochberg constants driven by joint null
distributions of k p-values, decision rules, probability identities and
bounds used as oracles, and a seeded simulation laboratory.
"""

__version__ = "0.1.0"

from .bounds import (
    CriticalVector,
    ProbEstimate,
    bonferroni_eq23,
    bound_eq22,
    lemma21_rhs_mc,
    union_prob_exact_smalln,
    union_prob_mc,
)
from .critvals import (
    CLASSIC_PROCEDURES,
    PROCEDURES,
    CriticalValueSet,
    classic_critvals,
    critical_value_set,
    gen_hochberg_critvals,
    gen_simes_critvals,
    gen_simes_critvals_closed_form,
    lr_critvals,
    romano_critvals,
)
from .errors import (
    BracketingError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    KfwerError,
    NumericalError,
    ScaleError,
)
from .models import (
    NullModel,
    SubsetIndex,
    draw_null_pvalues,
    equicorrelated_normal,
    equicorrelated_t,
    factor_normal,
    gk_empirical_build,
    gk_evaluate,
    gk_factor_averaged,
    gk_factor_subset,
    gk_quantile,
    independent,
)
from .numerics import (
    DEFAULT_ACCURACY,
    AccuracySpec,
    binomial_tail,
    find_root,
    integrate_gaussian,
    normal_cdf,
    normal_quantile,
)
from .procedures import (
    DecisionRecord,
    DecisionReport,
    PValueVector,
    global_simes_test,
    single_step_apply,
    stepdown_apply,
    stepup_apply,
)
from .simlab import (
    METRICS,
    SIM_PROCEDURES,
    ExperimentConfig,
    MetricCell,
    MetricsReport,
    SampleBatch,
    StudyOutcome,
    canned_study_configs,
    canned_study_names,
    rule_for,
    run_experiment,
    run_study,
    sample_equicorr_normal,
    sample_equicorr_t,
    sample_factor_normal,
    thread_cap,
)
from .verify import CheckResult, run_suite

__all__ = [
    "__version__",
    "AccuracySpec", "DEFAULT_ACCURACY", "normal_cdf", "normal_quantile",
    "integrate_gaussian", "find_root", "binomial_tail",
    "NullModel", "SubsetIndex", "independent", "equicorrelated_normal",
    "factor_normal", "equicorrelated_t", "draw_null_pvalues",
    "gk_empirical_build", "gk_evaluate", "gk_quantile",
    "gk_factor_subset", "gk_factor_averaged",
    "PROCEDURES", "CLASSIC_PROCEDURES", "CriticalValueSet",
    "gen_simes_critvals", "gen_simes_critvals_closed_form",
    "gen_hochberg_critvals", "lr_critvals", "romano_critvals",
    "classic_critvals", "critical_value_set",
    "PValueVector", "DecisionRecord", "DecisionReport",
    "stepup_apply", "stepdown_apply", "single_step_apply", "global_simes_test",
    "CriticalVector", "ProbEstimate", "union_prob_mc", "lemma21_rhs_mc",
    "union_prob_exact_smalln", "bound_eq22", "bonferroni_eq23",
    "METRICS", "SIM_PROCEDURES", "SampleBatch", "ExperimentConfig", "MetricCell",
    "MetricsReport", "StudyOutcome", "sample_equicorr_normal",
    "sample_factor_normal", "sample_equicorr_t", "rule_for", "run_experiment",
    "run_study", "thread_cap", "canned_study_names", "canned_study_configs",
    "CheckResult", "run_suite",
    "KfwerError", "DomainError", "ConfigurationError", "ScaleError",
    "NumericalError", "BracketingError", "ConvergenceError",
]

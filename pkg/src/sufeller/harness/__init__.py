"""Instance generators and executable theorem suites."""

from .generators import (InstanceRecipe, generate, indicator_example_bundle, indicator_example_family,
                         indicator_example_fixture, joint_weak_gap, marginal_tv_only, product_mixture, trial_seed,
                         tv_converging_mixture, weak_only_family)
from .suites import (SUITES, SuiteReport, asskern_suite, equicontinuity_suite, equivalence_suite,
                     integration_suite, run_suite, summary_table)

__all__ = [
    "InstanceRecipe", "generate", "indicator_example_bundle", "indicator_example_family",
    "indicator_example_fixture", "marginal_tv_only", "product_mixture", "trial_seed",
    "tv_converging_mixture", "weak_only_family", "joint_weak_gap", "SUITES", "SuiteReport", "asskern_suite", "equicontinuity_suite",
    "equivalence_suite", "integration_suite", "run_suite", "summary_table",
]

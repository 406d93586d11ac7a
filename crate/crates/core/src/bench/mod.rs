//! Benchmark harness: synthetic targets, tabulated targets, path metrics and
//! repeated-run experiments.

pub mod experiments;
pub mod functions;
pub mod metrics;
pub mod tabulated;

pub use experiments::{
    default_axes, default_sensitivity_functions, run_acquisition_comparison, run_sensitivity_experiment, AxisPlan,
    BaselinePrior, ComparisonSettings, FunctionComparison, SensitivityAxis, SensitivityPlan, SensitivityResult,
    VariantSpec,
};
pub use functions::{registry_all, registry_lookup, registry_names};
pub use metrics::{accumulated_difference, mean_optimization_path, relative_ad_summary, MopMatrix, RelativeAdSummary};
pub use tabulated::{load_tabulated_target, TabulatedTarget};

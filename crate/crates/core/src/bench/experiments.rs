//! Repeated-run experiments: prior sensitivity across the four GP prior
//! components, and paired acquisition-function comparisons.
//!
//! Runs at the same repetition index share one seed, so every compared
//! setting starts from the same initial design and infill randomness.
//! Runs are independent jobs on the rayon pool; results are keyed by job
//! index and never by completion order.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionSpec;
use crate::bench::metrics::{
    accumulated_difference, ci95_half_widths, mean_path, relative_ad_summary, FunctionAds, MopMatrix,
    RelativeAdSummary,
};
use crate::engine::{derive_seed, run, OptimizationTrace, RunConfig, TargetFunction};
use crate::error::{ProboError, Result};
use crate::gp::{MeanForm, MeanSpec};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::optimizer::{latin_hypercube, FocusSearchConfig};

const PROBE_SEED: u64 = 0x5EED_0F_9E0B;

/// Reference prior derived from a fixed space-filling probe of the target:
/// squared-exponential kernel with lengthscale `0.1·√p` times each side of
/// the box and signal variance equal to the probe variance.
#[derive(Debug, Clone)]
pub struct BaselinePrior {
    pub kernel: KernelSpec,
    probe_points: Vec<Vec<f64>>,
    probe_values: Vec<f64>,
}

impl BaselinePrior {
    pub fn for_target(target: &TargetFunction) -> Result<Self> {
        let dim = target.dim();
        let n = 100.max(4 * MeanSpec::coefficient_count(MeanForm::QuadraticFixed, dim));
        let probe_points = latin_hypercube(n, target.bounds(), PROBE_SEED);
        let probe_values = probe_points.iter().map(|x| target.evaluate(x)).collect::<Result<Vec<_>>>()?;
        let mean = probe_values.iter().sum::<f64>() / n as f64;
        let var = probe_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let var = if var > 0.0 && var.is_finite() { var } else { 1.0 };
        let scale = 0.1 * (dim as f64).sqrt();
        let lengthscales = target.bounds().widths().iter().map(|w| w * scale).collect();
        let kernel = KernelSpec::new(KernelFamily::SquaredExponential, lengthscales, var)?;
        Ok(BaselinePrior { kernel, probe_points, probe_values })
    }

    /// Least-squares polynomial trend of the given fixed form over the probe.
    pub fn fitted_mean(&self, form: MeanForm) -> Result<MeanSpec> {
        if form == MeanForm::ConstantEstimated {
            return Ok(MeanSpec::constant_estimated());
        }
        let rows: Vec<Vec<f64>> = self.probe_points.iter().map(|x| MeanSpec::features(form, x)).collect();
        let p = rows[0].len();
        let a = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        let b = DVector::from_column_slice(&self.probe_values);
        let coef = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| ProboError::InvalidMean(format!("least-squares trend fit failed: {e}")))?;
        Ok(MeanSpec { form, coefficients: coef.iter().copied().collect() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityAxis {
    MeanFunctionalForm,
    MeanParameters,
    KernelFunctionalForm,
    KernelParameters,
}

impl fmt::Display for SensitivityAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensitivityAxis::MeanFunctionalForm => "mean-functional-form",
            SensitivityAxis::MeanParameters => "mean-parameters",
            SensitivityAxis::KernelFunctionalForm => "kernel-functional-form",
            SensitivityAxis::KernelParameters => "kernel-parameters",
        })
    }
}

/// One prior specification, expressed relative to a target's
/// [`BaselinePrior`] so the same plan applies to every function.
///
/// `mean_form` selects a least-squares fitted trend (absent: estimated
/// constant); `mean_scale` multiplies its coefficients. `kernel_scale`
/// multiplies both lengthscales and signal variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_family: Option<KernelFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_form: Option<MeanForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_scale: Option<f64>,
}

impl VariantSpec {
    fn labelled(label: impl Into<String>) -> Self {
        VariantSpec {
            label: label.into(),
            kernel_family: None,
            kernel_power: None,
            kernel_scale: None,
            mean_form: None,
            mean_scale: None,
        }
    }

    pub fn resolve(&self, baseline: &BaselinePrior) -> Result<(KernelSpec, MeanSpec)> {
        let mut kernel = baseline.kernel.clone();
        if let Some(family) = self.kernel_family {
            kernel.family = family;
        }
        if let Some(p) = self.kernel_power {
            kernel.power = p;
        }
        if let Some(s) = self.kernel_scale {
            kernel.lengthscales.iter_mut().for_each(|l| *l *= s);
            kernel.signal_variance *= s;
        }
        kernel.validate()?;
        let mut mean = baseline.fitted_mean(self.mean_form.unwrap_or(MeanForm::ConstantEstimated))?;
        if let Some(s) = self.mean_scale {
            if mean.form == MeanForm::ConstantEstimated {
                return Err(ProboError::Plan(format!(
                    "variant `{}` scales the mean but has no fixed mean form",
                    self.label
                )));
            }
            mean.coefficients.iter_mut().for_each(|c| *c *= s);
        }
        Ok((kernel, mean))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisPlan {
    pub axis: SensitivityAxis,
    pub variants: Vec<VariantSpec>,
}

const PARAMETER_FACTORS: [f64; 5] = [0.5, 0.75, 1.0, 1.25, 1.5];

/// Default variants: constant/linear/quadratic trends, three kernel
/// families, and ±25% / ±50% perturbations of the mean constant and of the
/// kernel hyperparameters.
pub fn default_axes() -> Vec<AxisPlan> {
    let mean_forms = [
        ("constant", MeanForm::ConstantFixed),
        ("linear", MeanForm::LinearFixed),
        ("quadratic", MeanForm::QuadraticFixed),
    ]
    .into_iter()
    .map(|(label, form)| VariantSpec { mean_form: Some(form), ..VariantSpec::labelled(label) })
    .collect();

    let mean_params = PARAMETER_FACTORS
        .iter()
        .map(|f| VariantSpec {
            mean_form: Some(MeanForm::ConstantFixed),
            mean_scale: Some(*f),
            ..VariantSpec::labelled(format!("constant-x{f}"))
        })
        .collect();

    let kernel_forms = [KernelFamily::SquaredExponential, KernelFamily::Matern52, KernelFamily::Matern32]
        .into_iter()
        .map(|family| VariantSpec {
            kernel_family: Some(family),
            ..VariantSpec::labelled(family.label().replace('/', ""))
        })
        .collect();

    let kernel_params = PARAMETER_FACTORS
        .iter()
        .map(|f| VariantSpec { kernel_scale: Some(*f), ..VariantSpec::labelled(format!("kernel-x{f}")) })
        .collect();

    vec![
        AxisPlan { axis: SensitivityAxis::MeanFunctionalForm, variants: mean_forms },
        AxisPlan { axis: SensitivityAxis::MeanParameters, variants: mean_params },
        AxisPlan { axis: SensitivityAxis::KernelFunctionalForm, variants: kernel_forms },
        AxisPlan { axis: SensitivityAxis::KernelParameters, variants: kernel_params },
    ]
}

pub fn default_sensitivity_functions() -> Vec<String> {
    ["gramacy-lee-1d", "ackley-2d", "rosenbrock-3d", "schwefel-4d", "sphere-7d"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityPlan {
    pub axes: Vec<AxisPlan>,
    pub repetitions: usize,
    /// Proposal iterations per run, after the initial design.
    pub iterations: usize,
    pub n_init: usize,
    pub acquisition: AcquisitionSpec,
    pub infill: FocusSearchConfig,
}

impl Default for SensitivityPlan {
    fn default() -> Self {
        SensitivityPlan {
            axes: default_axes(),
            repetitions: 40,
            iterations: 20,
            n_init: 10,
            acquisition: AcquisitionSpec::lcb(1.0),
            infill: FocusSearchConfig::default(),
        }
    }
}

impl SensitivityPlan {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(ProboError::Plan("no axes to vary".into()));
        }
        for a in &self.axes {
            if a.variants.len() < 2 {
                return Err(ProboError::Plan(format!(
                    "axis {} has {} variant(s); at least 2 are needed to compare",
                    a.axis,
                    a.variants.len()
                )));
            }
            let mut labels: Vec<&str> = a.variants.iter().map(|v| v.label.as_str()).collect();
            labels.sort();
            if labels.windows(2).any(|w| w[0] == w[1]) {
                return Err(ProboError::Plan(format!("axis {} has duplicate variant labels", a.axis)));
            }
        }
        if self.repetitions == 0 || self.iterations == 0 || self.n_init == 0 {
            return Err(ProboError::Plan("repetitions, iterations and n_init must be positive".into()));
        }
        self.acquisition.validate()?;
        self.infill.validate()
    }
}

#[derive(Debug, Clone)]
pub struct AxisOutcome {
    pub axis: SensitivityAxis,
    pub mop: MopMatrix,
    pub ad: f64,
    /// `traces[variant][repetition]`
    pub traces: Vec<Vec<OptimizationTrace>>,
}

#[derive(Debug, Clone)]
pub struct FunctionSensitivity {
    pub function: String,
    pub axes: Vec<AxisOutcome>,
}

#[derive(Debug, Clone)]
pub struct SensitivityResult {
    pub functions: Vec<FunctionSensitivity>,
    /// Functions dropped because a run failed, with the error message.
    pub voided: Vec<(String, String)>,
    pub summary: RelativeAdSummary,
}

impl SensitivityResult {
    /// `ad_summary.csv`: function, axis, AD, relative AD.
    pub fn write_ad_summary<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["function", "axis", "ad", "relative_ad"])?;
        for f in &self.functions {
            let rel = self.summary.relative.iter().find(|(name, _)| *name == f.function).map(|(_, r)| r);
            for (i, a) in f.axes.iter().enumerate() {
                let r = rel.map(|r| r[i].to_string()).unwrap_or_default();
                w.write_record([f.function.clone(), a.axis.to_string(), a.ad.to_string(), r])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `relative_ad_sums.csv`: axis, sum of relative ADs.
    pub fn write_relative_sums<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["axis", "relative_ad_sum"])?;
        for (axis, sum) in self.summary.axes.iter().zip(&self.summary.sums) {
            w.write_record([axis.clone(), sum.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Job {
    function: usize,
    axis: usize,
    variant: usize,
    config: RunConfig,
}

pub fn run_sensitivity_experiment(
    plan: &SensitivityPlan,
    targets: &[TargetFunction],
    master_seed: u64,
) -> Result<SensitivityResult> {
    plan.validate()?;
    if targets.is_empty() {
        return Err(ProboError::Plan("no functions selected".into()));
    }

    let mut jobs = Vec::new();
    for (fi, target) in targets.iter().enumerate() {
        let baseline = BaselinePrior::for_target(target)?;
        for (ai, axis) in plan.axes.iter().enumerate() {
            for (vi, variant) in axis.variants.iter().enumerate() {
                let (kernel, mean) = variant.resolve(&baseline)?;
                for r in 0..plan.repetitions {
                    let mut config = RunConfig::new(kernel.clone(), plan.acquisition);
                    config.mean = mean.clone();
                    config.infill = plan.infill;
                    config.n_init = plan.n_init;
                    config.budget = plan.n_init + plan.iterations;
                    config.seed = derive_seed(master_seed, &[fi as u64, r as u64]);
                    jobs.push(Job { function: fi, axis: ai, variant: vi, config });
                }
            }
        }
    }

    let outcomes: Vec<Result<OptimizationTrace>> =
        jobs.par_iter().map(|job| run(&job.config, &targets[job.function])).collect();

    // traces[f][a][v] in repetition order
    let mut grouped: Vec<Vec<Vec<Vec<OptimizationTrace>>>> = plan_shape(targets.len(), plan);
    let mut failures: Vec<Option<String>> = vec![None; targets.len()];
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(trace) => grouped[job.function][job.axis][job.variant].push(trace),
            Err(e) => {
                failures[job.function].get_or_insert_with(|| e.to_string());
            }
        }
    }

    let mut functions = Vec::new();
    let mut voided = Vec::new();
    let mut per_function_ads = Vec::new();
    for (fi, (target, by_axis)) in targets.iter().zip(grouped).enumerate() {
        if let Some(msg) = &failures[fi] {
            log::warn!("{}: run failed ({msg}); function voided", target.name());
            voided.push((target.name().to_string(), msg.clone()));
            continue;
        }
        let mut axes = Vec::new();
        for (axis, by_variant) in plan.axes.iter().zip(by_axis) {
            let labels = axis.variants.iter().map(|v| v.label.clone()).collect();
            let columns = by_variant
                .iter()
                .map(|traces| mean_path(&traces.iter().map(OptimizationTrace::incumbent_path).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>>>()?;
            let mop = MopMatrix::new(labels, columns, plan.repetitions)?;
            let ad = accumulated_difference(&mop)?;
            axes.push(AxisOutcome { axis: axis.axis, mop, ad, traces: by_variant });
        }
        per_function_ads.push(FunctionAds {
            function: target.name().to_string(),
            ads: axes.iter().map(|a| a.ad).collect(),
        });
        functions.push(FunctionSensitivity { function: target.name().to_string(), axes });
    }

    let axis_names: Vec<String> = plan.axes.iter().map(|a| a.axis.to_string()).collect();
    let summary = relative_ad_summary(&axis_names, &per_function_ads)?;
    Ok(SensitivityResult { functions, voided, summary })
}

fn plan_shape(n_functions: usize, plan: &SensitivityPlan) -> Vec<Vec<Vec<Vec<OptimizationTrace>>>> {
    (0..n_functions)
        .map(|_| {
            plan.axes
                .iter()
                .map(|a| (0..a.variants.len()).map(|_| Vec::with_capacity(plan.repetitions)).collect())
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSettings {
    pub repetitions: usize,
    pub budget: usize,
    pub n_init: usize,
    pub infill: FocusSearchConfig,
    /// Fixed kernel for every target; the per-target baseline when absent.
    pub kernel: Option<KernelSpec>,
    pub mean: MeanSpec,
}

impl Default for ComparisonSettings {
    fn default() -> Self {
        ComparisonSettings {
            repetitions: 60,
            budget: 90,
            n_init: 10,
            infill: FocusSearchConfig::default(),
            kernel: None,
            mean: MeanSpec::constant_estimated(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionComparison {
    pub function: String,
    pub acquisitions: Vec<AcquisitionSpec>,
    pub mop: MopMatrix,
    /// `ci95[acquisition][t]`
    pub ci95: Vec<Vec<f64>>,
    /// `traces[acquisition][repetition]`
    pub traces: Vec<Vec<OptimizationTrace>>,
}

impl FunctionComparison {
    /// `comparison.csv`: iteration, then MOP and CI half-width per acquisition.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iter".to_string()];
        for a in &self.acquisitions {
            header.push(format!("{}_mop", a.slug()));
            header.push(format!("{}_ci95", a.slug()));
        }
        w.write_record(&header)?;
        for t in 0..self.mop.iterations() {
            let mut row = vec![(t + 1).to_string()];
            for (s, ci) in self.ci95.iter().enumerate() {
                row.push(self.mop.get(t, s).to_string());
                row.push(ci[t].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn accumulated_difference(&self) -> Result<f64> {
        accumulated_difference(&self.mop)
    }
}

pub fn run_acquisition_comparison(
    targets: &[TargetFunction],
    acquisitions: &[AcquisitionSpec],
    settings: &ComparisonSettings,
    master_seed: u64,
) -> Result<Vec<FunctionComparison>> {
    if acquisitions.len() < 2 {
        return Err(ProboError::Plan(format!(
            "a comparison needs at least 2 acquisition functions, got {}",
            acquisitions.len()
        )));
    }
    if settings.repetitions == 0 {
        return Err(ProboError::Plan("repetitions must be positive".into()));
    }
    let mut labels: Vec<String> = acquisitions.iter().map(AcquisitionSpec::slug).collect();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(ProboError::Plan("duplicate acquisition functions".into()));
    }

    let mut jobs = Vec::new();
    for (fi, target) in targets.iter().enumerate() {
        let kernel = match &settings.kernel {
            Some(k) => k.clone(),
            None => BaselinePrior::for_target(target)?.kernel,
        };
        for (ai, acq) in acquisitions.iter().enumerate() {
            for r in 0..settings.repetitions {
                let mut config = RunConfig::new(kernel.clone(), *acq);
                config.mean = settings.mean.clone();
                config.infill = settings.infill;
                config.n_init = settings.n_init;
                config.budget = settings.budget;
                config.seed = derive_seed(master_seed, &[fi as u64, r as u64]);
                config.validate(target.dim())?;
                jobs.push((fi, ai, config));
            }
        }
    }

    let outcomes: Vec<Result<OptimizationTrace>> =
        jobs.par_iter().map(|(fi, _, config)| run(config, &targets[*fi])).collect();

    let mut grouped: Vec<Vec<Vec<OptimizationTrace>>> =
        vec![vec![Vec::with_capacity(settings.repetitions); acquisitions.len()]; targets.len()];
    for ((fi, ai, _), outcome) in jobs.iter().zip(outcomes) {
        grouped[*fi][*ai].push(outcome?);
    }

    targets
        .iter()
        .zip(grouped)
        .map(|(target, traces)| {
            let paths: Vec<Vec<Vec<f64>>> = traces
                .iter()
                .map(|reps| reps.iter().map(OptimizationTrace::incumbent_path).collect())
                .collect();
            let columns = paths.iter().map(|p| mean_path(p)).collect::<Result<Vec<_>>>()?;
            let ci95 = paths.iter().map(|p| ci95_half_widths(p)).collect::<Result<Vec<_>>>()?;
            let mop = MopMatrix::new(acquisitions.iter().map(AcquisitionSpec::slug).collect(), columns, settings.repetitions)?;
            Ok(FunctionComparison {
                function: target.name().to_string(),
                acquisitions: acquisitions.to_vec(),
                mop,
                ci95,
                traces,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::functions::registry_lookup;

    fn small_infill() -> FocusSearchConfig {
        FocusSearchConfig { evals_per_round: 100, rounds: 3, restarts: 1, ..Default::default() }
    }

    #[test]
    fn baseline_prior_shape() {
        let t = registry_lookup("rosenbrock-3d").unwrap();
        let b = BaselinePrior::for_target(&t).unwrap();
        assert_eq!(b.kernel.dim(), 3);
        let w = 2.0 * 2.048;
        assert!((b.kernel.lengthscales[0] - 0.1 * 3f64.sqrt() * w).abs() <= 1e-12);
        let q = b.fitted_mean(MeanForm::QuadraticFixed).unwrap();
        q.validate(3).unwrap();
    }

    #[test]
    fn fitted_trend_recovers_exact_polynomial() {
        let t = TargetFunction::from_fn(
            "quad",
            crate::optimizer::BoxBounds::cube(2, -1.0, 1.0).unwrap(),
            None,
            |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1] + 3.0 * x[1] * x[1],
        );
        let m = BaselinePrior::for_target(&t).unwrap().fitted_mean(MeanForm::QuadraticFixed).unwrap();
        let expected = [1.0, 2.0, -1.0, 0.0, 0.5, 3.0];
        for (a, b) in m.coefficients.iter().zip(expected) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn default_plan_is_valid() {
        let plan = SensitivityPlan::default();
        plan.validate().unwrap();
        assert_eq!((plan.repetitions, plan.iterations, plan.n_init), (40, 20, 10));
        assert_eq!(plan.axes.len(), 4);
    }

    #[test]
    fn single_variant_axis_rejected() {
        let mut plan = SensitivityPlan::default();
        plan.axes[1].variants.truncate(1);
        assert!(matches!(plan.validate(), Err(ProboError::Plan(_))));
    }

    #[test]
    fn identical_variants_give_zero_ad() {
        let plan = SensitivityPlan {
            axes: vec![AxisPlan {
                axis: SensitivityAxis::KernelParameters,
                variants: vec![VariantSpec::labelled("a"), VariantSpec::labelled("b")],
            }],
            repetitions: 2,
            iterations: 3,
            n_init: 4,
            acquisition: AcquisitionSpec::lcb(1.0),
            infill: small_infill(),
        };
        let t = registry_lookup("sphere-2d").unwrap();
        let res = run_sensitivity_experiment(&plan, &[t], 5).unwrap();
        assert_eq!(res.functions[0].axes[0].ad, 0.0);
        // zero AD everywhere cannot be normalized
        assert_eq!(res.summary.excluded.len(), 1);
    }

    #[test]
    fn micro_plan_ad_matches_hand_assembly() {
        let plan = SensitivityPlan {
            axes: vec![AxisPlan {
                axis: SensitivityAxis::KernelFunctionalForm,
                variants: vec![
                    VariantSpec::labelled("se"),
                    VariantSpec { kernel_family: Some(KernelFamily::Matern32), ..VariantSpec::labelled("m32") },
                ],
            }],
            repetitions: 2,
            iterations: 3,
            n_init: 4,
            acquisition: AcquisitionSpec::lcb(1.0),
            infill: small_infill(),
        };
        let t = registry_lookup("sphere-1d").unwrap();
        let res = run_sensitivity_experiment(&plan, &[t.clone()], 11).unwrap();
        let outcome = &res.functions[0].axes[0];

        // rerun the four runs independently and assemble AD by hand
        let baseline = BaselinePrior::for_target(&t).unwrap();
        let mut paths = Vec::new();
        for v in &plan.axes[0].variants {
            let (kernel, mean) = v.resolve(&baseline).unwrap();
            let mut per_rep = Vec::new();
            for r in 0..2u64 {
                let mut cfg = RunConfig::new(kernel.clone(), plan.acquisition);
                cfg.mean = mean.clone();
                cfg.infill = plan.infill;
                cfg.n_init = 4;
                cfg.budget = 7;
                cfg.seed = derive_seed(11, &[0, r]);
                per_rep.push(run(&cfg, &t).unwrap().incumbent_path());
            }
            paths.push(per_rep);
        }
        let mut ad = 0.0;
        for step in 0..3 {
            let m0 = (paths[0][0][step] + paths[0][1][step]) / 2.0;
            let m1 = (paths[1][0][step] + paths[1][1][step]) / 2.0;
            ad += (m0 - m1).abs();
        }
        assert!((outcome.ad - ad).abs() <= 1e-12);

        // paired designs: every variant sees the same initial points per repetition
        for r in 0..2 {
            let a = &outcome.traces[0][r].records[..4];
            let b = &outcome.traces[1][r].records[..4];
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.point, y.point);
            }
        }
    }

    #[test]
    fn comparison_reduction_and_ci() {
        let t = registry_lookup("gramacy-lee-1d").unwrap();
        let settings = ComparisonSettings { repetitions: 3, budget: 9, n_init: 5, infill: small_infill(), ..Default::default() };
        let acqs = [AcquisitionSpec::lcb(1.0), AcquisitionSpec::glcb(1.0, 0.0, 100.0)];
        let res = run_acquisition_comparison(&[t], &acqs, &settings, 2).unwrap();
        assert_eq!(res[0].accumulated_difference().unwrap(), 0.0);
        assert_eq!(res[0].mop.iterations(), 4);
        assert!(run_acquisition_comparison(&[], &acqs[..1], &settings, 2).is_err());
    }

    #[test]
    fn comparison_defaults() {
        let s = ComparisonSettings::default();
        assert_eq!((s.repetitions, s.budget, s.n_init), (60, 90, 10));
    }
}

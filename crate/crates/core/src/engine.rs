//! The sequential optimization loop: initial Latin hypercube design, then
//! fit → propose → evaluate → update until the evaluation budget is spent.
//!
//! [`run_bo`] drives the classical acquisitions (EI, LCB); [`run_probo`] adds
//! the imprecise-GP width to the LCB through GLCB. Both share one loop so that
//! a GLCB run with `ρ = 0` consumes randomness exactly like its LCB twin.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{score_ei, score_glcb, score_lcb, AcquisitionSpec};
use crate::error::{ProboError, Result};
use crate::gp::{fit_hyperparameters, GpModel, HyperparameterSearch, MeanSpec};
use crate::igp::{IgpCase, ImpreciseGp};
use crate::kernel::{euclidean, KernelSpec};
use crate::optimizer::{focus_search, latin_hypercube, BoxBounds, FocusSearchConfig};

const STREAM_DESIGN: u64 = 1;
const STREAM_INFILL: u64 = 2;
const STREAM_HYPER: u64 = 3;
const DUPLICATE_RADIUS: f64 = 1e-10;
const PERTURB_RADIUS: f64 = 1e-6;

/// Mixes a master seed with a path of indices into an independent seed
/// (SplitMix64 finalizer applied per step).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, p| mix(acc ^ mix(*p)))
}

fn default_n_init() -> usize {
    10
}

fn default_budget() -> usize {
    90
}

fn default_hyper_budget() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub mean: MeanSpec,
    pub acquisition: AcquisitionSpec,
    #[serde(default)]
    pub infill: FocusSearchConfig,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// Refit kernel hyperparameters by marginal likelihood every iteration.
    #[serde(default)]
    pub hyperparameter_fit: bool,
    #[serde(default = "default_hyper_budget")]
    pub hyperparameter_budget: usize,
}

impl RunConfig {
    pub fn new(kernel: KernelSpec, acquisition: AcquisitionSpec) -> Self {
        RunConfig {
            kernel,
            mean: MeanSpec::default(),
            acquisition,
            infill: FocusSearchConfig::default(),
            n_init: default_n_init(),
            budget: default_budget(),
            seed: 0,
            hyperparameter_fit: false,
            hyperparameter_budget: default_hyper_budget(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.kernel.validate()?;
        if self.kernel.dim() != dim {
            return Err(ProboError::DimensionMismatch { expected: dim, found: self.kernel.dim() });
        }
        self.mean.validate(dim)?;
        self.acquisition.validate()?;
        self.infill.validate()?;
        if self.n_init == 0 {
            return Err(ProboError::Config("n_init must be positive".into()));
        }
        if self.budget < self.n_init {
            return Err(ProboError::Config(format!(
                "budget {} is smaller than the initial design size {}",
                self.budget, self.n_init
            )));
        }
        if self.hyperparameter_fit && self.hyperparameter_budget == 0 {
            return Err(ProboError::Config("hyperparameter_budget must be positive".into()));
        }
        Ok(())
    }
}

type Objective = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// A deterministic black-box target `Ψ` over a box.
#[derive(Clone)]
pub struct TargetFunction {
    name: String,
    bounds: BoxBounds,
    known_optimum: Option<f64>,
    evaluate: Arc<Objective>,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("known_optimum", &self.known_optimum)
            .finish_non_exhaustive()
    }
}

impl TargetFunction {
    pub fn new<F>(name: impl Into<String>, bounds: BoxBounds, known_optimum: Option<f64>, evaluate: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        TargetFunction { name: name.into(), bounds, known_optimum, evaluate: Arc::new(evaluate) }
    }

    /// Wraps an infallible function.
    pub fn from_fn<F>(name: impl Into<String>, bounds: BoxBounds, known_optimum: Option<f64>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, bounds, known_optimum, move |x| Ok(f(x)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn known_optimum(&self) -> Option<f64> {
        self.known_optimum
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(ProboError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        (self.evaluate)(x)
    }

    /// `−Ψ`, turning a maximization target into a minimization one.
    pub fn negated(self) -> Self {
        let inner = self.evaluate;
        TargetFunction {
            name: self.name,
            bounds: self.bounds,
            known_optimum: self.known_optimum.map(|v| -v),
            evaluate: Arc::new(move |x| inner(x).map(|v| -v)),
        }
    }

    /// Same target with every value multiplied by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        let inner = self.evaluate;
        TargetFunction {
            name: self.name,
            bounds: self.bounds,
            known_optimum: self.known_optimum.map(|v| v * factor),
            evaluate: Arc::new(move |x| inner(x).map(|v| v * factor)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based evaluation index.
    pub iter: usize,
    pub point: Vec<f64>,
    pub psi: f64,
    pub incumbent: f64,
    /// Acquisition value at the proposal; `None` for initial design points.
    pub acq_value: Option<f64>,
    pub igp_case: Option<IgpCase>,
    /// Clamped imprecise widths during this iteration's proposal search.
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub target: String,
    pub config: RunConfig,
    pub records: Vec<TraceRecord>,
}

impl OptimizationTrace {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn n_init(&self) -> usize {
        self.config.n_init
    }

    /// Incumbent after every proposal, i.e. excluding the initial design.
    pub fn incumbent_path(&self) -> Vec<f64> {
        self.records.iter().skip(self.config.n_init).map(|r| r.incumbent).collect()
    }

    pub fn best(&self) -> Option<&TraceRecord> {
        self.records.iter().fold(None, |best: Option<&TraceRecord>, r| match best {
            Some(b) if b.psi <= r.psi => Some(b),
            _ => Some(r),
        })
    }

    pub fn final_incumbent(&self) -> Option<f64> {
        self.records.last().map(|r| r.incumbent)
    }

    /// CSV with columns `iter, x_1..x_p, psi, incumbent, acq_value, igp_case, clamped`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let dim = self.config.kernel.dim();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iter".to_string()];
        header.extend((1..=dim).map(|i| format!("x_{i}")));
        header.extend(["psi", "incumbent", "acq_value", "igp_case", "clamped"].map(String::from));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.iter.to_string()];
            row.extend(r.point.iter().map(|v| v.to_string()));
            row.push(r.psi.to_string());
            row.push(r.incumbent.to_string());
            row.push(r.acq_value.map(|v| v.to_string()).unwrap_or_default());
            row.push(r.igp_case.map(|c| c.number().to_string()).unwrap_or_default());
            row.push(r.clamped.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and the `<stem>.json` config sidecar.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        let sidecar = serde_json::json!({ "target": self.target, "config": self.config });
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }
}

/// Classical BO with EI or LCB.
pub fn run_bo(config: &RunConfig, target: &TargetFunction) -> Result<OptimizationTrace> {
    if config.acquisition.is_glcb() {
        return Err(ProboError::Config("run_bo takes EI or LCB; use run_probo for GLCB".into()));
    }
    run_loop(config, target)
}

/// Prior-mean-robust BO with GLCB.
pub fn run_probo(config: &RunConfig, target: &TargetFunction) -> Result<OptimizationTrace> {
    if !config.acquisition.is_glcb() {
        return Err(ProboError::Config("run_probo requires a GLCB acquisition".into()));
    }
    run_loop(config, target)
}

/// Dispatches on the acquisition kind.
pub fn run(config: &RunConfig, target: &TargetFunction) -> Result<OptimizationTrace> {
    run_loop(config, target)
}

struct Proposal {
    point: Vec<f64>,
    score: f64,
    igp_case: Option<IgpCase>,
    clamped: usize,
}

fn propose(
    model: &GpModel,
    acquisition: AcquisitionSpec,
    incumbent: f64,
    bounds: &BoxBounds,
    infill: &FocusSearchConfig,
    seed: u64,
) -> Result<Proposal> {
    match acquisition {
        AcquisitionSpec::ExpectedImprovement => {
            let res = focus_search(|x| score_ei(model.point_terms(x).prediction, incumbent).value(), bounds, infill, seed)?;
            Ok(Proposal { point: res.point, score: res.score, igp_case: None, clamped: 0 })
        }
        AcquisitionSpec::LowerConfidenceBound { tau } => {
            let res = focus_search(|x| score_lcb(model.point_terms(x).prediction, tau).value(), bounds, infill, seed)?;
            Ok(Proposal { point: res.point, score: res.score, igp_case: None, clamped: 0 })
        }
        AcquisitionSpec::Generalized { tau, rho, c } => {
            let igp = ImpreciseGp::new(model, c)?;
            let res = focus_search(
                |x| {
                    let terms = model.point_terms(x);
                    let width = igp.width_from_terms(&terms);
                    score_glcb(terms.prediction, width, tau, rho).value()
                },
                bounds,
                infill,
                seed,
            )?;
            let clamped = igp.clamp_events();
            log::debug!("igp case {} with {} clamped widths", igp.case().number(), clamped);
            Ok(Proposal { point: res.point, score: res.score, igp_case: Some(igp.case()), clamped })
        }
    }
}

fn run_loop(config: &RunConfig, target: &TargetFunction) -> Result<OptimizationTrace> {
    let bounds = target.bounds();
    config.validate(bounds.dim())?;

    let mut trace = OptimizationTrace { target: target.name().to_string(), config: config.clone(), records: Vec::new() };
    let fail = |source: ProboError, trace: &OptimizationTrace| ProboError::RunFailed {
        source: Box::new(source),
        partial: Box::new(trace.clone()),
    };

    let mut points: Vec<Vec<f64>> = Vec::with_capacity(config.budget);
    let mut values: Vec<f64> = Vec::with_capacity(config.budget);
    let mut incumbent = f64::INFINITY;

    let design = latin_hypercube(config.n_init, bounds, derive_seed(config.seed, &[STREAM_DESIGN]));
    for x in design {
        let psi = target.evaluate(&x).map_err(|e| fail(e, &trace))?;
        incumbent = incumbent.min(psi);
        trace.records.push(TraceRecord {
            iter: trace.records.len() + 1,
            point: x.clone(),
            psi,
            incumbent,
            acq_value: None,
            igp_case: None,
            clamped: 0,
        });
        points.push(x);
        values.push(psi);
    }

    let mut infill_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[STREAM_INFILL]));
    let mut hyper_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[STREAM_HYPER]));

    while trace.records.len() < config.budget {
        let kernel = if config.hyperparameter_fit {
            let search = HyperparameterSearch { budget: config.hyperparameter_budget, seed: hyper_rng.next_u64() };
            fit_hyperparameters(config.kernel.family, config.kernel.power, &config.mean, &points, &values, search)
                .map_err(|e| fail(e, &trace))?
        } else {
            config.kernel.clone()
        };
        let model = GpModel::fit(kernel, config.mean.clone(), points.clone(), values.clone())
            .map_err(|e| fail(e, &trace))?;

        let proposal = propose(&model, config.acquisition, incumbent, bounds, &config.infill, infill_rng.next_u64())
            .map_err(|e| fail(e, &trace))?;

        let mut x = proposal.point;
        if points.iter().any(|p| euclidean(p, &x) <= DUPLICATE_RADIUS) {
            for v in x.iter_mut() {
                *v += PERTURB_RADIUS * (2.0 * infill_rng.random::<f64>() - 1.0);
            }
            bounds.clip(&mut x);
            log::warn!("proposal duplicated an evaluated point; perturbed to {x:?}");
        }

        let psi = target.evaluate(&x).map_err(|e| fail(e, &trace))?;
        incumbent = incumbent.min(psi);
        trace.records.push(TraceRecord {
            iter: trace.records.len() + 1,
            point: x.clone(),
            psi,
            incumbent,
            acq_value: Some(proposal.score),
            igp_case: proposal.igp_case,
            clamped: proposal.clamped,
        });
        points.push(x);
        values.push(psi);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;

    fn sphere_1d() -> TargetFunction {
        TargetFunction::from_fn("sphere-1d", BoxBounds::cube(1, -1.0, 1.0).unwrap(), Some(0.0), |x| {
            (x[0] - 0.3).powi(2)
        })
    }

    fn quick_config(acq: AcquisitionSpec, budget: usize) -> RunConfig {
        let kernel = KernelSpec::isotropic(KernelFamily::SquaredExponential, 1, 0.3, 1.0).unwrap();
        let mut cfg = RunConfig::new(kernel, acq);
        cfg.infill = FocusSearchConfig { evals_per_round: 200, rounds: 4, restarts: 2, ..Default::default() };
        cfg.n_init = 5;
        cfg.budget = budget;
        cfg.seed = 17;
        cfg
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        assert_ne!(derive_seed(1, &[1]), derive_seed(1, &[2]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(9, &[3, 4]), derive_seed(9, &[3, 4]));
    }

    #[test]
    fn budget_equal_to_design_size_runs_no_iterations() {
        let cfg = quick_config(AcquisitionSpec::lcb(1.0), 5);
        let t = run_bo(&cfg, &sphere_1d()).unwrap();
        assert_eq!(t.records.len(), 5);
        assert!(t.incumbent_path().is_empty());
        let best = t.records.iter().map(|r| r.psi).fold(f64::INFINITY, f64::min);
        assert_eq!(t.final_incumbent(), Some(best));
        assert!(t.records.iter().all(|r| r.acq_value.is_none()));
    }

    #[test]
    fn trace_invariants() {
        let target = sphere_1d();
        for acq in [AcquisitionSpec::ExpectedImprovement, AcquisitionSpec::lcb(1.0), AcquisitionSpec::glcb(1.0, 1.0, 10.0)] {
            let t = run(&quick_config(acq, 15), &target).unwrap();
            assert_eq!(t.records.len(), 15);
            for w in t.records.windows(2) {
                assert!(w[1].incumbent <= w[0].incumbent);
            }
            for (i, r) in t.records.iter().enumerate() {
                assert_eq!(r.iter, i + 1);
                assert!(target.bounds().contains(&r.point));
                for s in &t.records[..i] {
                    assert!(euclidean(&s.point, &r.point) > 1e-10);
                }
            }
            assert_eq!(t.records[10].igp_case.is_some(), acq.is_glcb());
        }
    }

    #[test]
    fn entry_points_check_the_acquisition_kind() {
        let target = sphere_1d();
        assert!(run_bo(&quick_config(AcquisitionSpec::glcb(1.0, 1.0, 1.0), 6), &target).is_err());
        assert!(run_probo(&quick_config(AcquisitionSpec::lcb(1.0), 6), &target).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = quick_config(AcquisitionSpec::glcb(1.0, 1.0, 5.0), 12);
        let a = run_probo(&cfg, &sphere_1d()).unwrap();
        let b = run_probo(&cfg, &sphere_1d()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = quick_config(AcquisitionSpec::lcb(1.0), 4);
        assert!(run_bo(&cfg, &sphere_1d()).is_err());
        cfg.budget = 10;
        cfg.kernel = KernelSpec::isotropic(KernelFamily::SquaredExponential, 2, 0.3, 1.0).unwrap();
        assert!(matches!(run_bo(&cfg, &sphere_1d()), Err(ProboError::DimensionMismatch { .. })));
    }

    #[test]
    fn target_failure_carries_partial_trace() {
        let target = TargetFunction::new("flaky", BoxBounds::cube(1, 0.0, 1.0).unwrap(), None, |x| {
            if x[0] > 0.5 {
                Err(ProboError::OutOfDomain { x: x[0], lower: 0.0, upper: 0.5 })
            } else {
                Ok(x[0])
            }
        });
        match run_bo(&quick_config(AcquisitionSpec::lcb(1.0), 8), &target) {
            Err(ProboError::RunFailed { partial, .. }) => assert!(partial.records.len() < 5),
            other => panic!("expected a run failure, got {other:?}"),
        }
    }

    #[test]
    fn negation_and_scaling() {
        let t = sphere_1d().negated();
        assert_eq!(t.evaluate(&[0.3]).unwrap(), 0.0);
        assert_eq!(t.evaluate(&[1.3]).unwrap(), -1.0);
        assert_eq!(sphere_1d().scaled(10.0).evaluate(&[1.3]).unwrap(), 10.0);
        assert!(t.evaluate(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let t = run_bo(&quick_config(AcquisitionSpec::lcb(1.0), 7), &sphere_1d()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "iter,x_1,psi,incumbent,acq_value,igp_case,clamped");
        assert_eq!(lines.count(), 7);
    }
}

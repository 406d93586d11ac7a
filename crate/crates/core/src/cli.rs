//! Command-line front end.
//!
//! Every command reads an optional JSON config, applies `--override
//! key=value` edits to the parsed document (dotted keys reach nested
//! fields), then deserializes it strictly so unknown keys are rejected. The
//! resolved config is written next to the outputs and can be fed back with
//! `--config` to reproduce the run.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::acquisition::AcquisitionSpec;
use crate::bench::experiments::{
    default_axes, default_sensitivity_functions, run_acquisition_comparison, run_sensitivity_experiment, AxisPlan,
    BaselinePrior, ComparisonSettings, SensitivityPlan,
};
use crate::bench::functions::{registry_all, registry_lookup};
use crate::bench::tabulated::{load_tabulated_target, TabulatedTarget};
use crate::engine::{run, RunConfig, TargetFunction};
use crate::error::{ProboError, Result};
use crate::gp::MeanSpec;
use crate::kernel::KernelSpec;
use crate::optimizer::FocusSearchConfig;

#[derive(Debug, Parser)]
#[command(name = "probo", version, about = "Prior-mean-robust Bayesian optimization and benchmark harness")]
pub struct Cli {
    /// Worker threads for parallel runs (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one target and write its trace.
    Run(ExperimentArgs),
    /// Compare acquisition functions over repeated paired runs.
    Compare(ExperimentArgs),
    /// Measure sensitivity of the optimization path to the GP prior.
    Sensitivity(ExperimentArgs),
    /// List the built-in target functions.
    Functions,
    /// Describe a tabulated CSV target or registry functions.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value` edit applied after the config file; dotted keys reach nested fields.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output root directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Acquisition function, e.g. `ei`, `lcb:tau=1`, `glcb:tau=1,rho=1,c=100`, `glcb-1-100`.
    #[arg(long = "acq")]
    pub acquisitions: Vec<String>,
    /// Target function names; `csv:<path>` or `csv-max:<path>` load tabulated data.
    #[arg(long = "functions")]
    pub functions: Vec<String>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long = "functions")]
    pub functions: Vec<String>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 success, 1 usage or config error,
/// 2 runtime failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", single_line(&e.to_string()));
            if e.is_usage_error() {
                1
            } else {
                2
            }
        }
    }
}

fn single_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn execute(cli: Cli) -> Result<()> {
    let work = move || match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Sensitivity(args) => cmd_sensitivity(&args),
        Command::Functions => cmd_functions(),
        Command::Inspect(args) => cmd_inspect(&args),
    };
    match cli.jobs {
        Some(0) => Err(ProboError::Config("--jobs must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ProboError::Config(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Sets `key` (dotted path) in `doc` to `raw`, read as JSON when it parses
/// and as a plain string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ProboError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ProboError::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    for part in key.split('.') {
        node = match node {
            Value::Object(map) => map.entry(part.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| ProboError::Config(format!("`{part}` in `{key}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(i)
                    .ok_or_else(|| ProboError::Config(format!("index {i} in `{key}` is out of range (len {len})")))?
            }
            other => {
                if !other.is_null() {
                    return Err(ProboError::Config(format!("`{key}` descends into a non-object value")));
                }
                *other = Value::Object(Default::default());
                match other {
                    Value::Object(map) => map.entry(part.to_string()).or_insert(Value::Null),
                    _ => unreachable!(),
                }
            }
        };
    }
    *node = value;
    Ok(())
}

fn load_document(config: Option<&Path>, overrides: &[String]) -> Result<Value> {
    let mut doc = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ProboError::Config(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| ProboError::Config(format!("config {} is not valid JSON: {e}", path.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !doc.is_object() {
        return Err(ProboError::Config("config must be a JSON object".into()));
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    Ok(doc)
}

fn parse_document<T: DeserializeOwned>(doc: Value) -> Result<T> {
    serde_json::from_value(doc).map_err(|e| ProboError::Config(e.to_string()))
}

/// `csv:<path>` and `csv-max:<path>` load tabulated data; anything else is a
/// registry name.
pub fn resolve_target(name: &str) -> Result<TargetFunction> {
    if let Some(path) = name.strip_prefix("csv-max:") {
        load_tabulated_target(Path::new(path), true)
    } else if let Some(path) = name.strip_prefix("csv:") {
        load_tabulated_target(Path::new(path), false)
    } else {
        registry_lookup(name)
    }
}

fn parse_acquisitions(raw: &[String]) -> Result<Vec<AcquisitionSpec>> {
    raw.iter().map(|s| s.parse()).collect()
}

/// Directory-safe form of a label.
fn path_component(label: &str) -> String {
    let cleaned: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.chars().all(|c| c == '.') {
        "_".to_string()
    } else {
        cleaned
    }
}

fn write_snapshot<T: Serialize>(dir: &Path, snapshot: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(snapshot)? + "\n")?;
    Ok(())
}

fn default_run_name() -> String {
    "run".into()
}

fn default_acquisition() -> AcquisitionSpec {
    AcquisitionSpec::lcb(1.0)
}

/// Config of `probo run`. `kernel` defaults to the target's baseline prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default = "default_run_name")]
    pub name: String,
    pub function: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub mean: MeanSpec,
    #[serde(default = "default_acquisition")]
    pub acquisition: AcquisitionSpec,
    #[serde(default)]
    pub infill: FocusSearchConfig,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hyperparameter_fit: bool,
    #[serde(default = "default_hyper_budget")]
    pub hyperparameter_budget: usize,
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

fn cmd_run(args: &ExperimentArgs) -> Result<()> {
    let mut doc = load_document(args.config.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        apply_override(&mut doc, &format!("seed={seed}"))?;
    }
    match args.functions.as_slice() {
        [] => {}
        [f] => doc["function"] = Value::String(f.clone()),
        _ => return Err(ProboError::Config("run takes a single function".into())),
    }
    match args.acquisitions.as_slice() {
        [] => {}
        [a] => doc["acquisition"] = Value::String(a.clone()),
        _ => return Err(ProboError::Config("run takes a single acquisition".into())),
    }
    let mut file: RunFile = parse_document(doc)?;
    let target = resolve_target(&file.function)?;
    if file.kernel.is_none() {
        file.kernel = Some(BaselinePrior::for_target(&target)?.kernel);
    }
    let config = RunConfig {
        kernel: file.kernel.clone().expect("kernel resolved above"),
        mean: file.mean.clone(),
        acquisition: file.acquisition,
        infill: file.infill,
        n_init: file.n_init,
        budget: file.budget,
        seed: file.seed,
        hyperparameter_fit: file.hyperparameter_fit,
        hyperparameter_budget: file.hyperparameter_budget,
    };
    config.validate(target.dim())?;

    let root = args.out.join(path_component(&file.name));
    let setting_dir = root.join(path_component(target.name())).join(config.acquisition.slug());
    let trace = match run(&config, &target) {
        Ok(trace) => trace,
        Err(ProboError::RunFailed { source, partial }) => {
            write_snapshot(&root, &file)?;
            partial.save(&setting_dir, "rep0")?;
            return Err(ProboError::RunFailed { source, partial });
        }
        Err(e) => return Err(e),
    };
    write_snapshot(&root, &file)?;
    trace.save(&setting_dir, "rep0")?;
    let best = trace.best().expect("a run evaluates at least one point");
    let argmin: Vec<String> = best.point.iter().map(|v| v.to_string()).collect();
    println!("argmin = [{}]", argmin.join(", "));
    println!("psi(argmin) = {}", best.psi);
    println!("trace: {}", setting_dir.join("rep0.csv").display());
    Ok(())
}

fn default_compare_name() -> String {
    "compare".into()
}

fn default_compare_functions() -> Vec<String> {
    vec!["gramacy-lee-1d".into()]
}

fn default_compare_acquisitions() -> Vec<AcquisitionSpec> {
    vec![AcquisitionSpec::lcb(1.0), AcquisitionSpec::ExpectedImprovement, AcquisitionSpec::glcb(1.0, 1.0, 100.0)]
}

fn default_compare_reps() -> usize {
    60
}

/// Config of `probo compare`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareFile {
    #[serde(default = "default_compare_name")]
    pub name: String,
    #[serde(default = "default_compare_functions")]
    pub functions: Vec<String>,
    #[serde(default = "default_compare_acquisitions")]
    pub acquisitions: Vec<AcquisitionSpec>,
    #[serde(default = "default_compare_reps")]
    pub repetitions: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default)]
    pub infill: FocusSearchConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub mean: MeanSpec,
    #[serde(default)]
    pub seed: u64,
}

fn cmd_compare(args: &ExperimentArgs) -> Result<()> {
    let mut doc = load_document(args.config.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        doc["seed"] = Value::from(seed);
    }
    if !args.functions.is_empty() {
        doc["functions"] = Value::from(args.functions.clone());
    }
    if !args.acquisitions.is_empty() {
        let parsed = parse_acquisitions(&args.acquisitions)?;
        doc["acquisitions"] = Value::from(parsed.iter().map(|a| a.to_string()).collect::<Vec<_>>());
    }
    let file: CompareFile = parse_document(doc)?;
    let targets = file.functions.iter().map(|f| resolve_target(f)).collect::<Result<Vec<_>>>()?;
    if targets.is_empty() {
        return Err(ProboError::Config("no functions selected".into()));
    }
    let settings = ComparisonSettings {
        repetitions: file.repetitions,
        budget: file.budget,
        n_init: file.n_init,
        infill: file.infill,
        kernel: file.kernel.clone(),
        mean: file.mean.clone(),
    };
    let results = run_acquisition_comparison(&targets, &file.acquisitions, &settings, file.seed)?;

    let root = args.out.join(path_component(&file.name));
    write_snapshot(&root, &file)?;
    let mut summary = csv::Writer::from_path(root.join("ad_summary.csv"))?;
    summary.write_record(["function", "ad"])?;
    for result in &results {
        let fdir = root.join(path_component(&result.function));
        for (acq, traces) in result.acquisitions.iter().zip(&result.traces) {
            let sdir = fdir.join(acq.slug());
            for (r, trace) in traces.iter().enumerate() {
                trace.save(&sdir, &format!("rep{r}"))?;
            }
        }
        result.write_csv(fs::File::create(fdir.join("comparison.csv"))?)?;
        result.mop.write_csv(fs::File::create(fdir.join("mop.csv"))?)?;
        let ad = result.accumulated_difference()?;
        summary.write_record([result.function.clone(), ad.to_string()])?;

        println!("{}: AD = {ad}", result.function);
        for (s, acq) in result.acquisitions.iter().enumerate() {
            let last = result.mop.iterations().saturating_sub(1);
            let final_mop = if result.mop.iterations() > 0 { result.mop.get(last, s) } else { f64::NAN };
            println!("  {acq}: final MOP = {final_mop}");
        }
    }
    summary.flush()?;
    println!("results: {}", root.display());
    Ok(())
}

fn default_sensitivity_name() -> String {
    "sensitivity".into()
}

/// Config of `probo sensitivity`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityFile {
    #[serde(default = "default_sensitivity_name")]
    pub name: String,
    #[serde(default = "default_sensitivity_functions")]
    pub functions: Vec<String>,
    #[serde(default = "default_axes")]
    pub axes: Vec<AxisPlan>,
    #[serde(default = "default_sensitivity_reps")]
    pub repetitions: usize,
    #[serde(default = "default_sensitivity_iterations")]
    pub iterations: usize,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default = "default_acquisition")]
    pub acquisition: AcquisitionSpec,
    #[serde(default)]
    pub infill: FocusSearchConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_sensitivity_reps() -> usize {
    40
}

fn default_sensitivity_iterations() -> usize {
    20
}

fn cmd_sensitivity(args: &ExperimentArgs) -> Result<()> {
    let mut doc = load_document(args.config.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        doc["seed"] = Value::from(seed);
    }
    if !args.functions.is_empty() {
        doc["functions"] = Value::from(args.functions.clone());
    }
    match args.acquisitions.as_slice() {
        [] => {}
        [a] => doc["acquisition"] = Value::String(a.parse::<AcquisitionSpec>()?.to_string()),
        _ => return Err(ProboError::Config("sensitivity takes a single acquisition".into())),
    }
    let file: SensitivityFile = parse_document(doc)?;
    let plan = SensitivityPlan {
        axes: file.axes.clone(),
        repetitions: file.repetitions,
        iterations: file.iterations,
        n_init: file.n_init,
        acquisition: file.acquisition,
        infill: file.infill,
    };
    plan.validate()?;
    let targets = file.functions.iter().map(|f| resolve_target(f)).collect::<Result<Vec<_>>>()?;
    let result = run_sensitivity_experiment(&plan, &targets, file.seed)?;

    let root = args.out.join(path_component(&file.name));
    write_snapshot(&root, &file)?;
    for f in &result.functions {
        let fdir = root.join(path_component(&f.function));
        for axis in &f.axes {
            let adir = fdir.join(axis.axis.to_string());
            for (label, traces) in axis.mop.labels.iter().zip(&axis.traces) {
                let vdir = adir.join(path_component(label));
                for (r, trace) in traces.iter().enumerate() {
                    trace.save(&vdir, &format!("rep{r}"))?;
                }
            }
            axis.mop.write_csv(fs::File::create(adir.join("mop.csv"))?)?;
        }
    }
    result.write_ad_summary(fs::File::create(root.join("ad_summary.csv"))?)?;
    result.write_relative_sums(fs::File::create(root.join("relative_ad_sums.csv"))?)?;

    for (name, msg) in &result.voided {
        println!("voided {name}: {}", single_line(msg));
    }
    println!("sum of relative ADs ({} functions):", result.summary.relative.len());
    for (axis, sum) in result.summary.axes.iter().zip(&result.summary.sums) {
        println!("  {axis}: {sum}");
    }
    println!("results: {}", root.display());
    Ok(())
}

fn fmt_bounds(target: &TargetFunction) -> String {
    let b = target.bounds();
    let lo = b.lower();
    let hi = b.upper();
    if lo.iter().all(|v| *v == lo[0]) && hi.iter().all(|v| *v == hi[0]) {
        format!("[{}, {}]^{}", lo[0], hi[0], b.dim())
    } else {
        let sides: Vec<String> = lo.iter().zip(hi).map(|(l, h)| format!("[{l}, {h}]")).collect();
        sides.join(" x ")
    }
}

fn describe(target: &TargetFunction) -> String {
    let optimum = target.known_optimum().map_or_else(|| "unknown".to_string(), |v| v.to_string());
    format!("{:<20} dim={:<2} bounds={:<28} optimum={}", target.name(), target.dim(), fmt_bounds(target), optimum)
}

fn cmd_functions() -> Result<()> {
    for target in registry_all() {
        println!("{}", describe(&target));
    }
    Ok(())
}

fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    if args.csv.is_none() && args.functions.is_empty() {
        return Err(ProboError::Config("inspect needs --csv or --functions".into()));
    }
    if let Some(path) = &args.csv {
        let table = TabulatedTarget::from_csv(path)?;
        let (lo, hi) = table.domain();
        let (ymin, ymax) = table.y_range();
        println!("file: {}", path.display());
        println!("n = {}", table.len());
        println!("bounds = [{lo}, {hi}]");
        println!("y range = [{ymin}, {ymax}]");
    }
    for name in &args.functions {
        println!("{}", describe(&resolve_target(name)?));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_reach_nested_fields() {
        let mut doc = json!({"infill": {"rounds": 5}, "budget": 90});
        apply_override(&mut doc, "infill.rounds=3").unwrap();
        apply_override(&mut doc, "budget=30").unwrap();
        apply_override(&mut doc, "acquisition=glcb:tau=1,rho=1,c=100").unwrap();
        apply_override(&mut doc, "kernel.family=matern-5/2").unwrap();
        assert_eq!(doc["infill"]["rounds"], json!(3));
        assert_eq!(doc["budget"], json!(30));
        assert_eq!(doc["acquisition"], json!("glcb:tau=1,rho=1,c=100"));
        assert_eq!(doc["kernel"]["family"], json!("matern-5/2"));
        assert!(apply_override(&mut doc, "novalue").is_err());
        assert!(apply_override(&mut doc, "budget.x=1").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut doc = json!({"function": "sphere-2d"});
        apply_override(&mut doc, "bugdet=3").unwrap();
        assert!(parse_document::<RunFile>(doc).is_err());
        let mut doc = json!({});
        apply_override(&mut doc, "infill.round=3").unwrap();
        assert!(parse_document::<CompareFile>(doc).is_err());
    }

    #[test]
    fn compare_defaults() {
        let file: CompareFile = parse_document(json!({})).unwrap();
        assert_eq!((file.repetitions, file.budget, file.n_init), (60, 90, 10));
        assert_eq!(file.acquisitions.len(), 3);
        let file: SensitivityFile = parse_document(json!({})).unwrap();
        assert_eq!((file.repetitions, file.iterations, file.functions.len(), file.axes.len()), (40, 20, 5, 4));
    }

    #[test]
    fn path_components_are_safe() {
        assert_eq!(path_component("matern-5/2"), "matern-5_2");
        assert_eq!(path_component(".."), "_");
        assert_eq!(path_component("constant-x0.5"), "constant-x0.5");
    }
}

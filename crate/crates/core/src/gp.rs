//! Noiseless Gaussian-process regression with a constant (ordinary kriging)
//! or fixed polynomial trend.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ProboError, Result};
use crate::kernel::{BaseKernelMatrix, KernelFamily, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanForm {
    ConstantEstimated,
    ConstantFixed,
    LinearFixed,
    QuadraticFixed,
}

/// Prior trend `m(x)`.
///
/// Fixed forms take their coefficients in the order: intercept, linear terms
/// `x_1..x_d`, then (quadratic only) the products `x_i·x_j` for `i ≤ j` in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanSpec {
    pub form: MeanForm,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<f64>,
}

impl Default for MeanSpec {
    fn default() -> Self {
        MeanSpec::constant_estimated()
    }
}

impl MeanSpec {
    pub fn constant_estimated() -> Self {
        MeanSpec { form: MeanForm::ConstantEstimated, coefficients: Vec::new() }
    }

    pub fn constant(value: f64) -> Self {
        MeanSpec { form: MeanForm::ConstantFixed, coefficients: vec![value] }
    }

    pub fn linear(coefficients: Vec<f64>) -> Self {
        MeanSpec { form: MeanForm::LinearFixed, coefficients }
    }

    pub fn quadratic(coefficients: Vec<f64>) -> Self {
        MeanSpec { form: MeanForm::QuadraticFixed, coefficients }
    }

    pub fn coefficient_count(form: MeanForm, dim: usize) -> usize {
        match form {
            MeanForm::ConstantEstimated => 0,
            MeanForm::ConstantFixed => 1,
            MeanForm::LinearFixed => 1 + dim,
            MeanForm::QuadraticFixed => 1 + dim + dim * (dim + 1) / 2,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let expected = Self::coefficient_count(self.form, dim);
        if self.coefficients.len() != expected {
            return Err(ProboError::InvalidMean(format!(
                "{:?} in {dim} dimension(s) takes {expected} coefficient(s), got {}",
                self.form,
                self.coefficients.len()
            )));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(ProboError::InvalidMean("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Regressors for a fixed polynomial form, matching the coefficient order.
    pub fn features(form: MeanForm, x: &[f64]) -> Vec<f64> {
        let mut f = Vec::with_capacity(Self::coefficient_count(form, x.len()));
        if form == MeanForm::ConstantEstimated {
            return f;
        }
        f.push(1.0);
        if matches!(form, MeanForm::LinearFixed | MeanForm::QuadraticFixed) {
            f.extend_from_slice(x);
        }
        if form == MeanForm::QuadraticFixed {
            for i in 0..x.len() {
                for j in i..x.len() {
                    f.push(x[i] * x[j]);
                }
            }
        }
        f
    }

    /// Trend value for fixed forms; `None` when the constant is estimated.
    pub fn fixed_value(&self, x: &[f64]) -> Option<f64> {
        match self.form {
            MeanForm::ConstantEstimated => None,
            form => Some(
                Self::features(form, x)
                    .iter()
                    .zip(&self.coefficients)
                    .map(|(a, b)| a * b)
                    .sum(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mu: f64,
    pub var: f64,
}

impl Prediction {
    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }
}

/// Per-point quantities shared by the precise prediction and the imprecise
/// mean bounds.
#[derive(Debug, Clone, Copy)]
pub struct PointTerms {
    pub prediction: Prediction,
    /// `k_xᵀ s_k`
    pub k_dot_s: f64,
    /// `k_xᵀ K_n⁻¹ y`
    pub k_dot_kinv_y: f64,
}

/// A fitted precise GP. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelSpec,
    mean: MeanSpec,
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
    k: BaseKernelMatrix,
    alpha: DVector<f64>,
    kinv_y: DVector<f64>,
    s_k: DVector<f64>,
    s_total: f64,
    beta_hat: Option<f64>,
    residual: DVector<f64>,
}

impl GpModel {
    pub fn fit(kernel: KernelSpec, mean: MeanSpec, points: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != targets.len() {
            return Err(ProboError::InvalidData(format!(
                "{} input rows for {} targets",
                points.len(),
                targets.len()
            )));
        }
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(ProboError::InvalidData("targets must be finite".into()));
        }
        let dim = kernel.dim();
        mean.validate(dim)?;
        let k = BaseKernelMatrix::build(&kernel, &points)?;
        let n = points.len();

        let y = DVector::from_column_slice(&targets);
        let kinv_y = k.solve(&y);
        let s_k = k.solve(&DVector::from_element(n, 1.0));
        let s_total = s_k.sum();
        if !(s_total > 0.0) {
            return Err(ProboError::IllConditioned { jitter: k.jitter() });
        }

        let (beta_hat, trend) = match mean.fixed_value(&points[0]) {
            None => {
                let beta = s_k.dot(&y) / s_total;
                (Some(beta), DVector::from_element(n, beta))
            }
            Some(_) => (
                None,
                DVector::from_iterator(n, points.iter().map(|p| mean.fixed_value(p).unwrap_or(0.0))),
            ),
        };
        let residual = &y - trend;
        let alpha = k.solve(&residual);

        Ok(GpModel { kernel, mean, points, targets, k, alpha, kinv_y, s_k, s_total, beta_hat, residual })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn mean(&self) -> &MeanSpec {
        &self.mean
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn base_matrix(&self) -> &BaseKernelMatrix {
        &self.k
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// `s_k = K_n⁻¹ 1_n`
    pub fn s_k(&self) -> &DVector<f64> {
        &self.s_k
    }

    /// `S_k = 1_nᵀ K_n⁻¹ 1_n`
    pub fn s_total(&self) -> f64 {
        self.s_total
    }

    /// `s_kᵀ y`
    pub fn s_dot_y(&self) -> f64 {
        self.s_k.iter().zip(&self.targets).map(|(a, b)| a * b).sum()
    }

    /// GLS estimate of the constant trend, when the mean form estimates it.
    pub fn beta_hat(&self) -> Option<f64> {
        self.beta_hat
    }

    /// Trend value at `x`.
    fn trend(&self, x: &[f64]) -> f64 {
        match self.beta_hat {
            Some(b) => b,
            None => self.mean.fixed_value(x).unwrap_or(0.0),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(ProboError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_dim(x)?;
        Ok(self.point_terms(x).prediction)
    }

    pub fn terms(&self, x: &[f64]) -> Result<PointTerms> {
        self.check_dim(x)?;
        Ok(self.point_terms(x))
    }

    /// Unchecked prediction terms; `x` must have the model dimension.
    pub(crate) fn point_terms(&self, x: &[f64]) -> PointTerms {
        let kx = self.kernel.cross_covariance_unchecked(&self.points, x);
        let v = self.k.solve_lower(&kx);
        let k_dot_s = kx.dot(&self.s_k);
        let mu = self.trend(x) + kx.dot(&self.alpha);
        let mut var = self.kernel.signal_variance - v.norm_squared();
        if self.beta_hat.is_some() {
            let u = 1.0 - k_dot_s;
            var += u * u / self.s_total;
        }
        PointTerms {
            prediction: Prediction { mu, var: var.max(0.0) },
            k_dot_s,
            k_dot_kinv_y: kx.dot(&self.kinv_y),
        }
    }

    /// Gaussian log marginal likelihood of the targets. With an estimated
    /// constant the GLS estimate is plugged in.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.n() as f64;
        // consistently on the factorized K_n + jitter·I
        let alpha = self.k.cholesky().solve(&self.residual);
        -0.5 * self.residual.dot(&alpha)
            - 0.5 * self.k.log_det()
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Random-search settings for kernel hyperparameter selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterSearch {
    pub budget: usize,
    pub seed: u64,
}

/// Maximum-likelihood kernel hyperparameters by log-uniform random search.
///
/// Lengthscales are drawn from `[0.01, 10]` times the data range of each
/// dimension and the signal variance from `[0.01, 100]` times the sample
/// variance of `y`. `power` is kept fixed for the power-exponential family.
pub fn fit_hyperparameters(
    family: KernelFamily,
    power: f64,
    mean: &MeanSpec,
    points: &[Vec<f64>],
    targets: &[f64],
    search: HyperparameterSearch,
) -> Result<KernelSpec> {
    if search.budget == 0 {
        return Err(ProboError::Config("hyperparameter search budget must be at least 1".into()));
    }
    let dim = points
        .first()
        .map(Vec::len)
        .ok_or_else(|| ProboError::InvalidData("no training points".into()))?;
    let ranges: Vec<f64> = (0..dim)
        .map(|d| {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[d]), hi.max(p[d])));
            if hi - lo > 0.0 {
                hi - lo
            } else {
                1.0
            }
        })
        .collect();
    let n = targets.len() as f64;
    let ybar = targets.iter().sum::<f64>() / n;
    let yvar = targets.iter().map(|y| (y - ybar) * (y - ybar)).sum::<f64>() / n;
    let yvar = if yvar > 0.0 { yvar } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp();

    let mut best: Option<(f64, KernelSpec)> = None;
    for _ in 0..search.budget {
        let lengthscales: Vec<f64> = ranges.iter().map(|r| log_uniform(&mut rng, 0.01 * r, 10.0 * r)).collect();
        let signal_variance = log_uniform(&mut rng, 0.01 * yvar, 100.0 * yvar);
        let candidate = KernelSpec { family, lengthscales, signal_variance, power };
        let ll = match GpModel::fit(candidate.clone(), mean.clone(), points.to_vec(), targets.to_vec()) {
            Ok(model) => model.log_marginal_likelihood(),
            Err(_) => continue,
        };
        if ll.is_finite() && best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, candidate));
        }
    }
    best.map(|(_, k)| k).ok_or(ProboError::IllConditioned { jitter: 1e-6 })
}

//! Stationary covariance functions and the base kernel matrix built from them.
//!
//! All families share the scaled Euclidean distance
//! `d² = Σ ((x_i − x'_i) / ℓ_i)²` with one lengthscale per input dimension.
//! The base kernel matrix carries no nugget: the only diagonal addition is a
//! small numerical jitter, escalated from `1e-10·σ²` to `1e-6·σ²` until the
//! Cholesky factorization succeeds.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{ProboError, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;
const DUPLICATE_TOLERANCE: f64 = 1e-10;
const REFINE_STEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    #[serde(rename = "squared-exponential", alias = "se", alias = "gaussian")]
    SquaredExponential,
    #[serde(rename = "power-exponential", alias = "powexp")]
    PowerExponential,
    #[serde(rename = "matern-3/2", alias = "matern32")]
    Matern32,
    #[serde(rename = "matern-5/2", alias = "matern52")]
    Matern52,
}

impl KernelFamily {
    pub fn label(self) -> &'static str {
        match self {
            KernelFamily::SquaredExponential => "squared-exponential",
            KernelFamily::PowerExponential => "power-exponential",
            KernelFamily::Matern32 => "matern-3/2",
            KernelFamily::Matern52 => "matern-5/2",
        }
    }

    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::SquaredExponential,
        KernelFamily::PowerExponential,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
    ];
}

fn default_power() -> f64 {
    2.0
}

/// Kernel family together with its hyperparameters.
///
/// `power` is only read by the power-exponential family, where
/// `k = σ² exp(−½ d^p)`; `p = 2` is the squared-exponential kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    #[serde(default = "default_power")]
    pub power: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        let spec = KernelSpec {
            family,
            lengthscales,
            signal_variance,
            power: default_power(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn power_exponential(lengthscales: Vec<f64>, signal_variance: f64, power: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::PowerExponential,
            lengthscales,
            signal_variance,
            power,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same lengthscale in every one of `dim` dimensions.
    pub fn isotropic(family: KernelFamily, dim: usize, lengthscale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(family, vec![lengthscale; dim], signal_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(ProboError::InvalidKernel("at least one lengthscale is required".into()));
        }
        if let Some(l) = self.lengthscales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(ProboError::InvalidKernel(format!("lengthscale {l} is not strictly positive")));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(ProboError::InvalidKernel(format!(
                "signal variance {} is not strictly positive",
                self.signal_variance
            )));
        }
        if self.family == KernelFamily::PowerExponential && !(self.power > 0.0 && self.power <= 2.0) {
            return Err(ProboError::InvalidKernel(format!("power exponent {} outside (0, 2]", self.power)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(ProboError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `k_θ(x, x')`, with dimension checks.
    pub fn eval(&self, x: &[f64], other: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(other)?;
        Ok(self.covariance(x, other))
    }

    pub(crate) fn scaled_sq_dist(&self, x: &[f64], other: &[f64]) -> f64 {
        x.iter()
            .zip(other)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let u = (a - b) / l;
                u * u
            })
            .sum()
    }

    /// Kernel value from a squared scaled distance.
    pub(crate) fn from_sq_dist(&self, d2: f64) -> f64 {
        let s2 = self.signal_variance;
        match self.family {
            KernelFamily::SquaredExponential => s2 * (-0.5 * d2).exp(),
            KernelFamily::PowerExponential => {
                let dp = if self.power == 2.0 { d2 } else { d2.powf(0.5 * self.power) };
                s2 * (-0.5 * dp).exp()
            }
            KernelFamily::Matern32 => {
                let r = 3f64.sqrt() * d2.sqrt();
                s2 * (1.0 + r) * (-r).exp()
            }
            KernelFamily::Matern52 => {
                let r = 5f64.sqrt() * d2.sqrt();
                s2 * (1.0 + r + r * r / 3.0) * (-r).exp()
            }
        }
    }

    /// Unchecked `k_θ(x, x')`; callers guarantee matching dimensions.
    #[inline]
    pub(crate) fn covariance(&self, x: &[f64], other: &[f64]) -> f64 {
        self.from_sq_dist(self.scaled_sq_dist(x, other))
    }

    /// Vector `k_x = [k(x, x_1), ..., k(x, x_n)]`.
    pub fn cross_covariance(&self, points: &[Vec<f64>], x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        for p in points {
            self.check_dim(p)?;
        }
        Ok(self.cross_covariance_unchecked(points, x))
    }

    pub(crate) fn cross_covariance_unchecked(&self, points: &[Vec<f64>], x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(points.len(), points.iter().map(|p| self.covariance(x, p)))
    }

    /// Gram matrix over `points` without any jitter.
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        for p in points {
            self.check_dim(p)?;
        }
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = self.signal_variance;
            for j in 0..i {
                let v = self.covariance(&points[i], &points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }
}

/// Factorized base kernel matrix `K_n` over a training design.
#[derive(Debug, Clone)]
pub struct BaseKernelMatrix {
    matrix: DMatrix<f64>,
    jitter: f64,
    cholesky: Cholesky<f64, Dyn>,
}

impl BaseKernelMatrix {
    pub fn build(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<Self> {
        spec.validate()?;
        if points.is_empty() {
            return Err(ProboError::InvalidData("no training points".into()));
        }
        reject_duplicates(points)?;
        let matrix = spec.gram(points)?;

        let mut rel = JITTER_START;
        loop {
            let jitter = rel * spec.signal_variance;
            let mut jittered = matrix.clone();
            for i in 0..jittered.nrows() {
                jittered[(i, i)] += jitter;
            }
            if let Some(cholesky) = Cholesky::new(jittered) {
                return Ok(BaseKernelMatrix { matrix, jitter, cholesky });
            }
            if rel >= JITTER_MAX {
                return Err(ProboError::IllConditioned { jitter });
            }
            log::debug!("cholesky failed with jitter {jitter:e}, escalating");
            rel *= 10.0;
        }
    }

    /// `K_n` without jitter.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The matrix that was actually factorized, `K_n + jitter·I`.
    pub fn matrix_with_jitter(&self) -> DMatrix<f64> {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += self.jitter;
        }
        m
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.cholesky
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `K_n⁻¹ b`. The jittered factor gives a first solution, which is then
    /// refined against the un-jittered `K_n` while the residual keeps
    /// shrinking, so training data are reproduced to rounding error whenever
    /// the jitter is small next to the smallest eigenvalue of `K_n`.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.cholesky.solve(rhs);
        let mut residual = rhs - &self.matrix * &x;
        let mut norm = residual.norm();
        for _ in 0..REFINE_STEPS {
            if norm <= f64::EPSILON * rhs.norm() {
                break;
            }
            let candidate = &x + self.cholesky.solve(&residual);
            let next = rhs - &self.matrix * &candidate;
            let next_norm = next.norm();
            if !(next_norm < norm) {
                break;
            }
            x = candidate;
            residual = next;
            norm = next_norm;
        }
        x
    }

    /// `L⁻¹ b` for the lower Cholesky factor `L`.
    pub fn solve_lower(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.cholesky
            .l_dirty()
            .solve_lower_triangular(rhs)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `log det(K_n + jitter·I)`.
    pub fn log_det(&self) -> f64 {
        self.cholesky.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum()
    }
}

pub(crate) fn reject_duplicates(points: &[Vec<f64>]) -> Result<()> {
    for i in 0..points.len() {
        for j in 0..i {
            if euclidean(&points[i], &points[j]) <= DUPLICATE_TOLERANCE {
                return Err(ProboError::DuplicatePoints { first: j, second: i });
            }
        }
    }
    Ok(())
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn se(l: f64) -> KernelSpec {
        KernelSpec::isotropic(KernelFamily::SquaredExponential, 1, l, 1.0).unwrap()
    }

    #[test]
    fn self_covariance_is_signal_variance() {
        for family in KernelFamily::ALL {
            let spec = KernelSpec::new(family, vec![0.7, 1.3], 2.5).unwrap();
            let x = [0.3, -1.2];
            assert_eq!(spec.eval(&x, &x).unwrap(), 2.5);
        }
    }

    #[test]
    fn power_two_matches_squared_exponential() {
        let sq = KernelSpec::new(KernelFamily::SquaredExponential, vec![0.4, 2.0], 1.7).unwrap();
        let pe = KernelSpec::power_exponential(vec![0.4, 2.0], 1.7, 2.0).unwrap();
        let pts = [[0.0, 0.0], [0.3, 1.1], [-2.0, 4.0], [1e-3, 0.5]];
        for a in &pts {
            for b in &pts {
                let d = (sq.eval(a, b).unwrap() - pe.eval(a, b).unwrap()).abs();
                assert!(d <= 1e-12);
            }
        }
    }

    #[test]
    fn matern32_unit_distance() {
        let spec = KernelSpec::isotropic(KernelFamily::Matern32, 1, 1.0, 1.0).unwrap();
        let r = 3f64.sqrt();
        let expected = (1.0 + r) * (-r).exp();
        assert!((spec.eval(&[0.0], &[1.0]).unwrap() - expected).abs() <= 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = se(1.0);
        assert!(matches!(
            spec.eval(&[0.0, 1.0], &[0.0]),
            Err(ProboError::DimensionMismatch { expected: 1, found: 2 })
        ));
        assert!(spec.cross_covariance(&[vec![0.0]], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        assert!(KernelSpec::new(KernelFamily::Matern52, vec![0.0], 1.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Matern52, vec![1.0], -1.0).is_err());
        assert!(KernelSpec::power_exponential(vec![1.0], 1.0, 2.5).is_err());
        assert!(KernelSpec::power_exponential(vec![1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn single_point_matrix() {
        let k = BaseKernelMatrix::build(&se(1.0), &[vec![0.4]]).unwrap();
        assert_eq!(k.size(), 1);
        assert_eq!(k.matrix()[(0, 0)], 1.0);
        assert_eq!(k.matrix_with_jitter()[(0, 0)], 1.0 + k.jitter());
        assert_eq!(k.jitter(), 1e-10);
    }

    #[test]
    fn two_point_matrix_by_hand() {
        let k = BaseKernelMatrix::build(&se(1.0), &[vec![0.0], vec![1.0]]).unwrap();
        let b = (-0.5f64).exp();
        let m = k.matrix();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 1)], 1.0);
        assert!((m[(0, 1)] - b).abs() <= 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn duplicate_points_rejected() {
        let err = BaseKernelMatrix::build(&se(1.0), &[vec![0.0], vec![0.5], vec![0.5 + 1e-12]]).unwrap_err();
        assert!(matches!(err, ProboError::DuplicatePoints { first: 1, second: 2 }));
    }

    #[test]
    fn cross_covariance_at_training_point() {
        let spec = se(0.5);
        let pts = vec![vec![0.0], vec![0.4], vec![1.0]];
        let kx = spec.cross_covariance(&pts, &[0.4]).unwrap();
        assert_eq!(kx[1], 1.0);
        assert_eq!(spec.cross_covariance(&pts[..1], &[0.2]).unwrap().len(), 1);
    }

    #[test]
    fn cross_covariance_matches_elementwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let spec = KernelSpec::new(KernelFamily::Matern52, vec![0.3, 0.8, 1.5], 1.4).unwrap();
        let pts: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        let kx = spec.cross_covariance(&pts, &x).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(kx[i], spec.eval(&x, p).unwrap());
        }
    }

    #[test]
    fn tiny_lengthscale_decorrelates() {
        let mut prev = f64::INFINITY;
        for l in [1.0, 0.5, 0.2, 0.1, 0.05] {
            let v = se(l).eval(&[0.0], &[0.3]).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!(prev < 1e-6);
    }

    fn family_strategy() -> impl Strategy<Value = KernelFamily> {
        prop_oneof![
            Just(KernelFamily::SquaredExponential),
            Just(KernelFamily::PowerExponential),
            Just(KernelFamily::Matern32),
            Just(KernelFamily::Matern52),
        ]
    }

    proptest! {
        #[test]
        fn gram_is_symmetric_psd(
            family in family_strategy(),
            l in 0.1f64..3.0,
            s2 in 0.1f64..5.0,
            p in 0.2f64..2.0,
            pts in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..20),
        ) {
            let spec = KernelSpec { family, lengthscales: vec![l, l * 0.7], signal_variance: s2, power: p };
            let k = spec.gram(&pts).unwrap();
            prop_assert!((&k - k.transpose()).amax() <= 1e-12);
            let eig = k.symmetric_eigenvalues();
            prop_assert!(eig.min() >= -1e-10 * s2.max(1.0));
        }

        #[test]
        fn kernel_is_symmetric(
            family in family_strategy(),
            a in prop::collection::vec(-3.0f64..3.0, 3),
            b in prop::collection::vec(-3.0f64..3.0, 3),
        ) {
            let spec = KernelSpec { family, lengthscales: vec![0.5, 1.0, 2.0], signal_variance: 1.3, power: 1.5 };
            prop_assert_eq!(spec.eval(&a, &b).unwrap(), spec.eval(&b, &a).unwrap());
        }
    }
}

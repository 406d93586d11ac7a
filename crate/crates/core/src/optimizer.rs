//! Derivative-free optimizers for the acquisition surface and space-filling
//! initial designs.

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ProboError, Result};

const GRID_CAP: f64 = 1e7;

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(ProboError::InvalidBounds(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(ProboError::InvalidBounds(format!("dimension {i}: [{l}, {u}] is empty")));
            }
        }
        Ok(BoxBounds { lower, upper })
    }

    /// The same interval `[lower, upper]` in every dimension.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + rng.random::<f64>() * (u - l))
            .collect()
    }

    /// Box centered at `center` with every side scaled by `factor`, intersected
    /// with `outer`.
    fn shrunk_around(&self, center: &[f64], factor: f64, outer: &BoxBounds) -> BoxBounds {
        let (lower, upper) = center
            .iter()
            .zip(self.widths())
            .zip(outer.lower.iter().zip(&outer.upper))
            .map(|((c, w), (ol, ou))| {
                let half = 0.5 * w * factor;
                ((c - half).max(*ol), (c + half).min(*ou))
            })
            .unzip();
        BoxBounds { lower, upper }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FocusSearchConfig {
    pub evals_per_round: usize,
    pub rounds: usize,
    pub restarts: usize,
    pub shrink_factor: f64,
    /// Evaluate each round's batch on the rayon pool.
    pub parallel: bool,
}

impl Default for FocusSearchConfig {
    fn default() -> Self {
        FocusSearchConfig { evals_per_round: 1000, rounds: 10, restarts: 5, shrink_factor: 0.5, parallel: true }
    }
}

impl FocusSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.evals_per_round == 0 || self.rounds == 0 || self.restarts == 0 {
            return Err(ProboError::Config(
                "focus search needs positive evals_per_round, rounds and restarts".into(),
            ));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(ProboError::Config(format!("shrink_factor {} outside (0, 1)", self.shrink_factor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub point: Vec<f64>,
    pub score: f64,
    pub evaluations: usize,
}

/// Latin hypercube design: random permutation per dimension with uniform
/// jitter inside each stratum.
pub fn latin_hypercube(n: usize, bounds: &BoxBounds, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut design = vec![vec![0.0; bounds.dim()]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for d in 0..bounds.dim() {
        strata.shuffle(&mut rng);
        let (l, u) = (bounds.lower[d], bounds.upper[d]);
        for (row, &s) in design.iter_mut().zip(&strata) {
            let t = (s as f64 + rng.random::<f64>()) / n as f64;
            row[d] = (l + t * (u - l)).min(u);
        }
    }
    design
}

/// Index of the smallest finite score; first occurrence wins ties.
fn argmin(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.is_finite() && best.is_none_or(|b| *s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

fn evaluate_batch<F>(objective: &F, points: &[Vec<f64>], parallel: bool) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if parallel {
        points.par_iter().map(|p| objective(p)).collect()
    } else {
        points.iter().map(|p| objective(p)).collect()
    }
}

/// Focus search: random search inside a box that is recentered on the
/// incumbent and shrunk after every round, restarted from the full box.
pub fn focus_search<F>(objective: F, bounds: &BoxBounds, config: &FocusSearchConfig, seed: u64) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;

    for _ in 0..config.restarts {
        let mut region = bounds.clone();
        let mut restart_best: Option<(Vec<f64>, f64)> = None;
        for _ in 0..config.rounds {
            let batch: Vec<Vec<f64>> = (0..config.evals_per_round).map(|_| region.sample(&mut rng)).collect();
            let scores = evaluate_batch(&objective, &batch, config.parallel);
            evaluations += batch.len();
            if let Some(i) = argmin(&scores) {
                if restart_best.as_ref().is_none_or(|(_, s)| scores[i] < *s) {
                    restart_best = Some((batch[i].clone(), scores[i]));
                }
            }
            if let Some((center, _)) = &restart_best {
                region = region.shrunk_around(center, config.shrink_factor, bounds);
            }
        }
        if let Some((p, s)) = restart_best {
            if best.as_ref().is_none_or(|(_, b)| s < *b) {
                best = Some((p, s));
            }
        }
    }
    best.map(|(point, score)| SearchResult { point, score, evaluations })
        .ok_or(ProboError::NonFiniteObjective { evaluated: evaluations })
}

/// Best of `n_evals` uniform samples.
pub fn random_search<F>(objective: F, bounds: &BoxBounds, n_evals: usize, seed: u64) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64,
{
    if n_evals == 0 {
        return Err(ProboError::Config("random search needs at least one evaluation".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..n_evals {
        let x = bounds.sample(&mut rng);
        let s = objective(&x);
        if s.is_finite() && best.as_ref().is_none_or(|(_, b)| s < *b) {
            best = Some((x, s));
        }
    }
    best.map(|(point, score)| SearchResult { point, score, evaluations: n_evals })
        .ok_or(ProboError::NonFiniteObjective { evaluated: n_evals })
}

/// Exhaustive search over the Cartesian grid with `points_per_dim` nodes per
/// axis, endpoints included. Points are visited in lexicographic order, so
/// ties resolve to the lexicographically smallest point.
pub fn grid_search<F>(objective: F, bounds: &BoxBounds, points_per_dim: usize) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64,
{
    if points_per_dim < 2 {
        return Err(ProboError::Config("grid search needs at least 2 points per dimension".into()));
    }
    let total = (points_per_dim as f64).powi(bounds.dim() as i32);
    if total > GRID_CAP {
        return Err(ProboError::GridTooLarge { points: total });
    }
    let axes: Vec<Vec<f64>> = (0..bounds.dim())
        .map(|d| {
            let (l, u) = (bounds.lower[d], bounds.upper[d]);
            (0..points_per_dim)
                .map(|i| {
                    if i + 1 == points_per_dim {
                        u
                    } else {
                        l + (u - l) * i as f64 / (points_per_dim - 1) as f64
                    }
                })
                .collect()
        })
        .collect();

    let total = total as usize;
    let mut index = vec![0usize; bounds.dim()];
    let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..total {
        let s = objective(&x);
        if s.is_finite() && best.as_ref().is_none_or(|(_, b)| s < *b) {
            best = Some((x.clone(), s));
        }
        // odometer increment, last dimension fastest
        for d in (0..index.len()).rev() {
            index[d] += 1;
            if index[d] < points_per_dim {
                x[d] = axes[d][index[d]];
                break;
            }
            index[d] = 0;
            x[d] = axes[d][0];
        }
    }
    best.map(|(point, score)| SearchResult { point, score, evaluations: total })
        .ok_or(ProboError::NonFiniteObjective { evaluated: total })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_dist(target: &'static [f64]) -> impl Fn(&[f64]) -> f64 + Sync {
        move |x: &[f64]| x.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    #[test]
    fn bounds_validation() {
        assert!(BoxBounds::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxBounds::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(BoxBounds::new(vec![], vec![]).is_err());
        assert!(BoxBounds::cube(3, -1.0, 1.0).unwrap().contains(&[-1.0, 0.0, 1.0]));
    }

    #[test]
    fn lhs_single_point_inside() {
        let b = BoxBounds::new(vec![-2.0, 5.0], vec![3.0, 6.0]).unwrap();
        let d = latin_hypercube(1, &b, 4);
        assert_eq!(d.len(), 1);
        assert!(b.contains(&d[0]));
    }

    #[test]
    fn lhs_strata_and_determinism() {
        let b = BoxBounds::cube(1, 0.0, 1.0).unwrap();
        let d = latin_hypercube(10, &b, 99);
        let mut xs: Vec<f64> = d.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        for (k, x) in xs.iter().enumerate() {
            assert!(*x >= k as f64 / 10.0 && *x < (k + 1) as f64 / 10.0);
        }
        assert_eq!(d, latin_hypercube(10, &b, 99));
        assert_ne!(d, latin_hypercube(10, &b, 100));
    }

    #[test]
    fn focus_search_single_round_is_random_search() {
        let b = BoxBounds::cube(2, -1.0, 1.0).unwrap();
        let cfg = FocusSearchConfig { evals_per_round: 200, rounds: 1, restarts: 1, parallel: false, ..Default::default() };
        let f = sq_dist(&[0.3, -0.2]);
        let a = focus_search(&f, &b, &cfg, 5).unwrap();
        let r = random_search(&f, &b, 200, 5).unwrap();
        assert_eq!(a, r);
    }

    #[test]
    fn focus_search_counts_evaluations() {
        let b = BoxBounds::cube(1, 0.0, 1.0).unwrap();
        let cfg = FocusSearchConfig { evals_per_round: 17, rounds: 3, restarts: 2, ..Default::default() };
        let count = std::sync::atomic::AtomicUsize::new(0);
        let res = focus_search(
            |x: &[f64]| {
                count.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                x[0]
            },
            &b,
            &cfg,
            1,
        )
        .unwrap();
        assert_eq!(res.evaluations, 102);
        assert_eq!(count.into_inner(), 102);
    }

    #[test]
    fn focus_search_parallel_matches_sequential() {
        let b = BoxBounds::cube(3, -2.0, 2.0).unwrap();
        let f = |x: &[f64]| x.iter().map(|v| (3.0 * v).sin() + v * v).sum::<f64>();
        let seq = FocusSearchConfig { evals_per_round: 300, parallel: false, ..Default::default() };
        let par = FocusSearchConfig { parallel: true, ..seq };
        assert_eq!(focus_search(f, &b, &seq, 8).unwrap(), focus_search(f, &b, &par, 8).unwrap());
    }

    #[test]
    fn focus_search_finds_known_minimum_1d() {
        let b = BoxBounds::cube(1, 0.0, 1.0).unwrap();
        let res = focus_search(sq_dist(&[0.37]), &b, &FocusSearchConfig::default(), 2).unwrap();
        assert!((res.point[0] - 0.37).abs() <= 1e-3);
    }

    #[test]
    fn nonfinite_objective_errors() {
        let b = BoxBounds::cube(1, 0.0, 1.0).unwrap();
        let cfg = FocusSearchConfig { evals_per_round: 10, rounds: 2, restarts: 1, ..Default::default() };
        assert!(matches!(
            focus_search(|_: &[f64]| f64::NAN, &b, &cfg, 0),
            Err(ProboError::NonFiniteObjective { evaluated: 20 })
        ));
    }

    #[test]
    fn random_search_contracts() {
        let b = BoxBounds::cube(2, 0.0, 1.0).unwrap();
        let one = random_search(|x: &[f64]| x[0], &b, 1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(one.point, b.sample(&mut rng));
        let mut prev = f64::INFINITY;
        for n in [1, 5, 50, 500] {
            let r = random_search(sq_dist(&[0.5, 0.5]), &b, n, 3).unwrap();
            assert!(r.score <= prev);
            prev = r.score;
        }
        assert_eq!(random_search(|_: &[f64]| 4.25, &b, 20, 0).unwrap().score, 4.25);
    }

    #[test]
    fn grid_search_contracts() {
        let b = BoxBounds::cube(1, 0.0, 1.0).unwrap();
        let r = grid_search(|x: &[f64]| x[0], &b, 11).unwrap();
        assert_eq!((r.point[0], r.score), (0.0, 0.0));

        let sym = BoxBounds::cube(1, -1.0, 1.0).unwrap();
        let r = grid_search(|x: &[f64]| (x[0] * x[0] - 0.25).powi(2), &sym, 5).unwrap();
        assert_eq!(r.point, vec![-0.5]);

        let big = BoxBounds::cube(8, 0.0, 1.0).unwrap();
        assert!(matches!(grid_search(|_: &[f64]| 0.0, &big, 10), Err(ProboError::GridTooLarge { .. })));
        assert!(grid_search(|_: &[f64]| 0.0, &b, 1).is_err());
    }

    #[test]
    fn grid_and_random_agree_on_convex_1d() {
        let b = BoxBounds::cube(1, -3.0, 2.0).unwrap();
        let f = |x: &[f64]| (x[0] - 0.8).powi(2) + 1.0;
        let g = grid_search(f, &b, 101).unwrap();
        let r = random_search(f, &b, 2000, 1).unwrap();
        assert!((g.point[0] - r.point[0]).abs() <= 5.0 / 100.0);
    }

    #[test]
    fn results_stay_inside_bounds() {
        let b = BoxBounds::new(vec![-1.0, 2.0], vec![0.0, 3.0]).unwrap();
        // minimum outside the box pushes the search against the boundary
        let f = sq_dist(&[5.0, -5.0]);
        let fs = focus_search(&f, &b, &FocusSearchConfig { evals_per_round: 100, ..Default::default() }, 0).unwrap();
        assert!(b.contains(&fs.point));
        assert!(b.contains(&random_search(&f, &b, 100, 0).unwrap().point));
        assert!(b.contains(&grid_search(&f, &b, 7).unwrap().point));
    }
}

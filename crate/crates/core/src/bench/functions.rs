//! Built-in synthetic test functions covering input dimensions 1, 2, 3, 4
//! and 7, from smooth bowls to multimodal and wiggly landscapes.

use std::f64::consts::PI;

use crate::engine::TargetFunction;
use crate::error::{ProboError, Result};
use crate::optimizer::BoxBounds;

const SHIFT_7D: [f64; 7] = [1.2, -0.8, 0.5, -1.5, 2.0, -0.3, 0.9];

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cos = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cos.exp() + 20.0 + std::f64::consts::E
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn schwefel(x: &[f64]) -> f64 {
    418.982_887_272_433_9 * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}

/// `sin(10πx) / (2x) + (x − 1)⁴` on `[0.5, 2.5]`.
pub fn gramacy_lee(x: &[f64]) -> f64 {
    let x = x[0];
    (10.0 * PI * x).sin() / (2.0 * x) + (x - 1.0).powi(4)
}

/// Sinusoid riding on a line, `sin(3x) + 0.3x` on `[0, 10]`.
pub fn wiggly_line(x: &[f64]) -> f64 {
    (3.0 * x[0]).sin() + 0.3 * x[0]
}

fn shifted_sphere_7d(x: &[f64]) -> f64 {
    x.iter().zip(SHIFT_7D).map(|(v, s)| (v - s) * (v - s)).sum()
}

struct Entry {
    name: &'static str,
    dim: usize,
    lower: f64,
    upper: f64,
    optimum: Option<f64>,
    f: fn(&[f64]) -> f64,
}

const REGISTRY: &[Entry] = &[
    Entry { name: "sphere-1d", dim: 1, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: sphere },
    Entry { name: "sphere-2d", dim: 2, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: sphere },
    Entry { name: "sphere-3d", dim: 3, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: sphere },
    Entry { name: "sphere-4d", dim: 4, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: sphere },
    Entry { name: "sphere-5d", dim: 5, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: sphere },
    Entry { name: "sphere-6d", dim: 6, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: sphere },
    Entry { name: "sphere-7d", dim: 7, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: sphere },
    Entry { name: "shifted-sphere-7d", dim: 7, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: shifted_sphere_7d },
    Entry { name: "ackley-2d", dim: 2, lower: -32.768, upper: 32.768, optimum: Some(0.0), f: ackley },
    Entry { name: "rastrigin-2d", dim: 2, lower: -5.12, upper: 5.12, optimum: Some(0.0), f: rastrigin },
    Entry { name: "rosenbrock-3d", dim: 3, lower: -2.048, upper: 2.048, optimum: Some(0.0), f: rosenbrock },
    Entry { name: "rosenbrock-4d", dim: 4, lower: -2.048, upper: 2.048, optimum: Some(0.0), f: rosenbrock },
    Entry { name: "schwefel-4d", dim: 4, lower: -500.0, upper: 500.0, optimum: None, f: schwefel },
    Entry { name: "gramacy-lee-1d", dim: 1, lower: 0.5, upper: 2.5, optimum: None, f: gramacy_lee },
    Entry { name: "wiggly-line-1d", dim: 1, lower: 0.0, upper: 10.0, optimum: None, f: wiggly_line },
];

pub fn registry_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name).collect()
}

pub fn registry_lookup(name: &str) -> Result<TargetFunction> {
    let entry = REGISTRY
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| ProboError::UnknownFunction { name: name.to_string(), available: registry_names().join(", ") })?;
    let bounds = BoxBounds::cube(entry.dim, entry.lower, entry.upper)?;
    Ok(TargetFunction::from_fn(entry.name, bounds, entry.optimum, entry.f))
}

pub fn registry_all() -> Vec<TargetFunction> {
    REGISTRY
        .iter()
        .map(|e| registry_lookup(e.name).expect("registry entries are well formed"))
        .collect()
}

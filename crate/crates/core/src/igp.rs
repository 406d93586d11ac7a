//! Posterior mean bounds of a constant-mean imprecise Gaussian process.
//!
//! The prior set is `{ GP(M·h, k(x, x') + (1 + M)/c) : h = ±1, M ≥ 0 }` for a
//! degree of imprecision `c > 0`. `M` and `h` are eliminated analytically, so
//! the bounds only need `K_n`, `k_x`, `s_k = K_n⁻¹ 1`, `S_k = 1ᵀ K_n⁻¹ 1` and
//! `y` from an already fitted [`GpModel`]. As `c → 0` both bounds collapse to
//! the ordinary-kriging mean.
//!
//! Every member's posterior mean is `k_xᵀK_n⁻¹y + a·g(M, h)` with
//! `a = 1 − k_xᵀs_k` and `g = (cMh + (1 + M)s_kᵀy) / (c + (1 + M)S_k)`, which is
//! monotone in `M`. The bounds take the extremes of `g` over the set. Two
//! regimes exist, selected once per fit by `|s_kᵀy / S_k| ≤ 1 + c/S_k`:
//!
//! * near-ignorance (case 1): `kriging ± c·|a| / S_k`
//! * extreme (case 2): for `s_kᵀy > 0` and `a ≥ 0`, upper `kriging + c·a / S_k`
//!   and lower `k_xᵀK_n⁻¹y + a·s_kᵀy / (c + S_k)`
//!
//! The case-2 closed forms are stated for `s_kᵀy > 0` and `a ≥ 0`. With either
//! sign flipped they no longer bracket the set and their difference can go
//! negative. The extremes are then taken in the mirrored orientation, which
//! keeps the width `|a|·(c/S_k)·(1 + |s_kᵀy| / (c + S_k)) ≥ 0`, and the point
//! is counted as a clamp event.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{ProboError, Result};
use crate::gp::{GpModel, PointTerms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IgpCase {
    #[serde(rename = "1")]
    NearIgnorance,
    #[serde(rename = "2")]
    Extreme,
}

impl IgpCase {
    pub fn number(self) -> u8 {
        match self {
            IgpCase::NearIgnorance => 1,
            IgpCase::Extreme => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanBounds {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub case: IgpCase,
    /// The case-2 closed forms did not apply in their stated orientation.
    pub clamped: bool,
}

/// Case selection: near-ignorance iff `|s_kᵀy / S_k| ≤ 1 + c/S_k`.
pub fn case_condition(model: &GpModel, c: f64) -> IgpCase {
    let s = model.s_total();
    if (model.s_dot_y() / s).abs() <= 1.0 + c / s {
        IgpCase::NearIgnorance
    } else {
        IgpCase::Extreme
    }
}

#[derive(Debug)]
pub struct ImpreciseGp<'a> {
    model: &'a GpModel,
    c: f64,
    case: IgpCase,
    /// Extremes of the trend coefficient `g` over the prior set.
    g_low: f64,
    g_high: f64,
    /// `g_high − g_low` in cancellation-free form.
    spread: f64,
    mirrored: bool,
    clamp_events: AtomicUsize,
}

impl<'a> ImpreciseGp<'a> {
    pub fn new(model: &'a GpModel, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(ProboError::InvalidAcquisition(format!("imprecision degree c = {c} must be positive")));
        }
        let case = case_condition(model, c);
        let (sy, s) = (model.s_dot_y(), model.s_total());
        let (g_low, g_high, spread) = match case {
            IgpCase::NearIgnorance => ((sy - c) / s, (sy + c) / s, 2.0 * c / s),
            IgpCase::Extreme => {
                let spread = c / s * (1.0 + sy.abs() / (c + s));
                if sy > 0.0 {
                    (sy / (c + s), (sy + c) / s, spread)
                } else {
                    ((sy - c) / s, sy / (c + s), spread)
                }
            }
        };
        Ok(ImpreciseGp {
            model,
            c,
            case,
            g_low,
            g_high,
            spread,
            mirrored: case == IgpCase::Extreme && sy < 0.0,
            clamp_events: AtomicUsize::new(0),
        })
    }

    pub fn model(&self) -> &GpModel {
        self.model
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn case(&self) -> IgpCase {
        self.case
    }

    /// Number of width evaluations clamped so far.
    pub fn clamp_events(&self) -> usize {
        self.clamp_events.load(Ordering::Relaxed)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.model.dim() {
            return Err(ProboError::DimensionMismatch { expected: self.model.dim(), found: x.len() });
        }
        Ok(())
    }

    pub fn mean_bounds(&self, x: &[f64]) -> Result<MeanBounds> {
        self.check_dim(x)?;
        Ok(self.bounds_from_terms(&self.model.point_terms(x)))
    }

    pub fn mean_width(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.width_from_terms(&self.model.point_terms(x)))
    }

    /// Whether the case-2 closed forms would be used outside their stated
    /// orientation at a point with `a = 1 − k_xᵀs_k`.
    fn corrected(&self, a: f64) -> bool {
        self.case == IgpCase::Extreme && a != 0.0 && (a < 0.0 || self.mirrored)
    }

    pub fn bounds_from_terms(&self, terms: &PointTerms) -> MeanBounds {
        let a = 1.0 - terms.k_dot_s;
        let base = terms.k_dot_kinv_y;
        let (lower, upper) = if a >= 0.0 {
            (base + a * self.g_low, base + a * self.g_high)
        } else {
            (base + a * self.g_high, base + a * self.g_low)
        };
        let clamped = self.corrected(a);
        if clamped {
            self.clamp_events.fetch_add(1, Ordering::Relaxed);
        }
        MeanBounds { lower, upper, width: a.abs() * self.spread, case: self.case, clamped }
    }

    /// Width `upper − lower` without forming the bounds.
    pub fn width_from_terms(&self, terms: &PointTerms) -> f64 {
        let a = 1.0 - terms.k_dot_s;
        if self.corrected(a) {
            self.clamp_events.fetch_add(1, Ordering::Relaxed);
        }
        a.abs() * self.spread
    }
}

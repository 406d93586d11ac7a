//! Acquisition functions. Every score follows a lower-is-better convention so
//! that a single minimizing infill optimizer serves all of them; expected
//! improvement is negated for that reason.
//!
//! GLCB subtracts an imprecision bonus `ρ·(upper − lower)` from the LCB, which
//! makes points whose prior-mean ambiguity is large more attractive. In the
//! near-ignorance case the width is `2c·|1 − k_xᵀs_k| / S_k`, so only the
//! product `ρ·c` matters there; both knobs are nevertheless kept separate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use libm::erfc;

use crate::error::{ProboError, Result};
use crate::gp::Prediction;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcquisitionSpec {
    ExpectedImprovement,
    LowerConfidenceBound { tau: f64 },
    Generalized { tau: f64, rho: f64, c: f64 },
}

impl AcquisitionSpec {
    pub fn lcb(tau: f64) -> Self {
        AcquisitionSpec::LowerConfidenceBound { tau }
    }

    pub fn glcb(tau: f64, rho: f64, c: f64) -> Self {
        AcquisitionSpec::Generalized { tau, rho, c }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| ProboError::InvalidAcquisition(format!("{what} = {v} is out of range"));
        match *self {
            AcquisitionSpec::ExpectedImprovement => Ok(()),
            AcquisitionSpec::LowerConfidenceBound { tau } => {
                if !(tau.is_finite() && tau >= 0.0) {
                    return Err(bad("tau", tau));
                }
                Ok(())
            }
            AcquisitionSpec::Generalized { tau, rho, c } => {
                if !(tau.is_finite() && tau >= 0.0) {
                    return Err(bad("tau", tau));
                }
                if !(rho.is_finite() && rho >= 0.0) {
                    return Err(bad("rho", rho));
                }
                if !(c.is_finite() && c > 0.0) {
                    return Err(bad("c", c));
                }
                Ok(())
            }
        }
    }

    pub fn is_glcb(&self) -> bool {
        matches!(self, AcquisitionSpec::Generalized { .. })
    }

    /// Filesystem-safe form of the label, e.g. `glcb_tau1_rho1_c100`.
    pub fn slug(&self) -> String {
        self.to_string()
            .chars()
            .filter_map(|ch| match ch {
                ':' | ',' => Some('_'),
                '=' => None,
                c => Some(c),
            })
            .collect()
    }
}

impl fmt::Display for AcquisitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcquisitionSpec::ExpectedImprovement => write!(f, "ei"),
            AcquisitionSpec::LowerConfidenceBound { tau } => write!(f, "lcb:tau={tau}"),
            AcquisitionSpec::Generalized { tau, rho, c } => write!(f, "glcb:tau={tau},rho={rho},c={c}"),
        }
    }
}

/// Accepts `ei`, `lcb`, `lcb:tau=2`, `glcb:tau=1,rho=1,c=100` and the
/// shorthand `glcb-<rho>-<c>` (τ = 1). Omitted parameters default to
/// τ = 1, ρ = 1, c = 100.
impl FromStr for AcquisitionSpec {
    type Err = ProboError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let err = |msg: String| ProboError::InvalidAcquisition(msg);

        if let Some(rest) = s.strip_prefix("glcb-") {
            let parts: Vec<&str> = rest.split('-').collect();
            if parts.len() != 2 {
                return Err(err(format!("shorthand `{s}` must look like glcb-<rho>-<c>")));
            }
            let num = |p: &str| p.parse::<f64>().map_err(|_| err(format!("`{p}` is not a number in `{s}`")));
            let spec = AcquisitionSpec::glcb(1.0, num(parts[0])?, num(parts[1])?);
            spec.validate()?;
            return Ok(spec);
        }

        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k, p),
            None => (s.as_str(), ""),
        };
        let mut tau = 1.0;
        let mut rho = 1.0;
        let mut c = 100.0;
        for pair in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| err(format!("parameter `{pair}` is not key=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("`{value}` is not a number")))?;
            match (kind, key.trim()) {
                ("lcb" | "glcb", "tau") => tau = value,
                ("glcb", "rho") => rho = value,
                ("glcb", "c") => c = value,
                _ => return Err(err(format!("`{}` has no parameter `{key}`", kind))),
            }
        }
        let spec = match kind {
            "ei" => AcquisitionSpec::ExpectedImprovement,
            "lcb" => AcquisitionSpec::lcb(tau),
            "glcb" => AcquisitionSpec::glcb(tau, rho, c),
            other => return Err(err(format!("unknown acquisition `{other}` (expected ei, lcb or glcb)"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for AcquisitionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AcquisitionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Score where lower means more promising.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AcquisitionScore(pub f64);

impl AcquisitionScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn score_lcb(pred: Prediction, tau: f64) -> AcquisitionScore {
    AcquisitionScore(pred.mu - tau * pred.var.sqrt())
}

/// `E[max(Ψ_min − ψ(x), 0)]` for `ψ(x) ~ N(mu, var)`.
pub fn expected_improvement(pred: Prediction, psi_min: f64) -> f64 {
    let diff = psi_min - pred.mu;
    if pred.var <= 0.0 {
        return diff.max(0.0);
    }
    let sd = pred.var.sqrt();
    let z = diff / sd;
    (diff * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

pub fn score_ei(pred: Prediction, psi_min: f64) -> AcquisitionScore {
    AcquisitionScore(-expected_improvement(pred, psi_min))
}

pub fn score_glcb(pred: Prediction, width: f64, tau: f64, rho: f64) -> AcquisitionScore {
    AcquisitionScore(pred.mu - tau * pred.var.sqrt() - rho * width)
}

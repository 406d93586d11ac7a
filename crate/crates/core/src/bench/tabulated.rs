//! One-dimensional targets tabulated in a CSV file and interpolated linearly
//! between samples.

use std::path::Path;
use std::sync::Arc;

use crate::engine::TargetFunction;
use crate::error::{ProboError, Result};
use crate::optimizer::BoxBounds;

/// Samples sorted by `x`, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTarget {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TabulatedTarget {
    pub fn new(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(ProboError::Tabulated(format!("need at least 2 rows, found {}", samples.len())));
        }
        if samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(ProboError::Tabulated("non-finite value".into()));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = samples.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(ProboError::Tabulated(format!("duplicate x value {}", w[0].0)));
        }
        let (xs, ys) = samples.into_iter().unzip();
        Ok(TabulatedTarget { xs, ys })
    }

    /// Reads a CSV with a header row. Columns named `x` and `y` are used when
    /// present; otherwise the file must have exactly two columns.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = reader.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (xi, yi) = match (find("x"), find("y")) {
            (Some(x), Some(y)) => (x, y),
            _ if headers.len() == 2 => (0, 1),
            _ => {
                return Err(ProboError::Tabulated(format!(
                    "expected columns `x` and `y`, found {:?}",
                    headers.iter().collect::<Vec<_>>()
                )))
            }
        };
        let mut samples = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| ProboError::Tabulated(e.to_string()))?;
            let cell = |i: usize| -> Result<f64> {
                let raw = record.get(i).unwrap_or("");
                raw.parse::<f64>()
                    .map_err(|_| ProboError::Tabulated(format!("row {}: `{raw}` is not numeric", row + 2)))
            };
            samples.push((cell(xi)?, cell(yi)?));
        }
        Self::new(samples)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(*y), hi.max(*y)))
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let (lower, upper) = self.domain();
        if !(x >= lower && x <= upper) {
            return Err(ProboError::OutOfDomain { x, lower, upper });
        }
        let i = self.xs.partition_point(|v| *v <= x);
        if i == 0 {
            return Ok(self.ys[0]);
        }
        if i == self.xs.len() {
            return Ok(self.ys[i - 1]);
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        if x == x0 {
            return Ok(y0);
        }
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// Wraps the table as a minimization target; `maximize` negates it.
    pub fn into_target(self, name: impl Into<String>, maximize: bool) -> Result<TargetFunction> {
        let (lower, upper) = self.domain();
        let bounds = BoxBounds::new(vec![lower], vec![upper])?;
        let table = Arc::new(self);
        let target = TargetFunction::new(name, bounds, None, move |x| table.evaluate(x[0]));
        Ok(if maximize { target.negated() } else { target })
    }
}

pub fn load_tabulated_target(path: &Path, maximize: bool) -> Result<TargetFunction> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("tabulated")
        .to_string();
    TabulatedTarget::from_csv(path)?.into_target(name, maximize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn csv_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn linear_midpoint_and_knots() {
        let t = TabulatedTarget::new(vec![(1.0, 2.0), (0.0, 0.0)]).unwrap();
        assert_eq!(t.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(t.evaluate(0.0).unwrap(), 0.0);
        assert_eq!(t.evaluate(1.0).unwrap(), 2.0);
        assert!(matches!(t.evaluate(1.5), Err(ProboError::OutOfDomain { .. })));
        assert!(t.evaluate(-0.1).is_err());
    }

    #[test]
    fn csv_roundtrip_and_negation() {
        let f = csv_file("time,x,y\n9,0.0,0.5\n9,2.0,1.5\n9,1.0,3.0\n");
        let t = TabulatedTarget::from_csv(f.path()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.domain(), (0.0, 2.0));
        assert_eq!(t.y_range(), (0.5, 3.0));
        let target = load_tabulated_target(f.path(), true).unwrap();
        assert_eq!(target.evaluate(&[1.0]).unwrap(), -3.0);
        assert_eq!(target.bounds().lower(), &[0.0]);
    }

    #[test]
    fn two_unnamed_columns_accepted() {
        let f = csv_file("time,quality\n0,1\n1,2\n");
        assert_eq!(TabulatedTarget::from_csv(f.path()).unwrap().evaluate(0.25).unwrap(), 1.25);
    }

    #[test]
    fn malformed_inputs_rejected() {
        for bad in ["x,y\n0,1\n", "x,y\n0,1\n1,abc\n", "x,y\n0,1\n0,2\n", "a,b,c\n1,2,3\n4,5,6\n", "x,y\n0,1\n1\n"] {
            let f = csv_file(bad);
            assert!(TabulatedTarget::from_csv(f.path()).is_err(), "{bad:?}");
        }
    }
}

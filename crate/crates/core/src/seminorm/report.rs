use serde::{Deserialize, Serialize};

/// Relative slack allowed before a sample counts as a violation.
pub const BOUND_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub coords: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Sampled check of `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n_points: usize,
    pub max_ratio: f64,
    pub violations: Vec<BoundViolation>,
    pub constant_used: f64,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs > 0.0 {
        lhs / rhs
    } else {
        f64::INFINITY
    }
}

impl BoundReport {
    /// Samples are `(coordinates, lhs, rhs)`.
    pub fn from_samples<I>(samples: I, constant_used: f64, tol: f64) -> Self
    where
        I: IntoIterator<Item = (Vec<f64>, f64, f64)>,
    {
        let mut report = BoundReport {
            n_points: 0,
            max_ratio: 0.0,
            violations: Vec::new(),
            constant_used,
            tol,
            diagnostics: Vec::new(),
        };
        for (coords, lhs, rhs) in samples {
            report.n_points += 1;
            let r = ratio(lhs, rhs);
            // NaN must not hide behind max
            let r = if r.is_nan() { f64::INFINITY } else { r };
            report.max_ratio = report.max_ratio.max(r);
            if r > 1.0 + tol {
                report.violations.push(BoundViolation { coords, lhs, rhs, ratio: r });
            }
        }
        report
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn with_diagnostic(mut self, note: String) -> Self {
        self.diagnostics.push(note);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violations_iff_ratio_above_tolerance() {
        let r = BoundReport::from_samples(vec![(vec![0.0], 1.0, 2.0), (vec![1.0], 0.0, 0.0)], 1.0, 1e-8);
        assert!(r.passed() && r.max_ratio == 0.5 && r.n_points == 2);
        let r = BoundReport::from_samples(vec![(vec![0.0], 1.0 + 1e-9, 1.0), (vec![1.0], 1.0, 0.0)], 1.0, 1e-8);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].coords, vec![1.0]);
        assert!(r.max_ratio.is_infinite());
    }
}

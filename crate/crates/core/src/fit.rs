//! Fitted-constant reports shared by every inequality check.

use serde::Serialize;

/// Multiplicative headroom applied to fitted constants so that rounding in the
/// residual computation cannot flip a sign at the extremal grid point.
pub const HEADROOM: f64 = 1e-9;

/// Outcome of fitting the constants of one inequality over a grid.
///
/// `pass` is true exactly when `worst_residual >= 0` and every constant is
/// finite. Residuals are relative slacks `(bound - value) / scale`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FitReport {
    pub id: String,
    pub grid: String,
    pub constants: Vec<(String, f64)>,
    pub worst_residual: f64,
    /// Smallest tested block size from which the inequality holds with the
    /// shared constants, when the fit spans several block sizes.
    pub threshold_k: Option<f64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl FitReport {
    pub fn new(id: impl Into<String>, grid: impl Into<String>, constants: Vec<(String, f64)>, residuals: impl IntoIterator<Item = f64>) -> Self {
        let mut worst = f64::INFINITY;
        let mut saw_nan = false;
        for r in residuals {
            if r.is_nan() {
                saw_nan = true;
            } else if r < worst {
                worst = r;
            }
        }
        if saw_nan {
            worst = f64::NAN;
        }
        let finite = constants.iter().all(|(_, v)| v.is_finite());
        let pass = finite && worst >= 0.0;
        FitReport { id: id.into(), grid: grid.into(), constants, worst_residual: worst, threshold_k: None, pass, notes: vec![] }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Marks the report failed with an explanation, e.g. when a fitted rate is not positive.
    pub fn fail(mut self, note: impl Into<String>) -> Self {
        self.pass = false;
        self.notes.push(note.into());
        self
    }
}

/// Relative slack of `value <= bound`.
pub fn upper_slack(bound: f64, value: f64) -> f64 {
    let scale = bound.abs().max(value.abs()).max(f64::MIN_POSITIVE);
    (bound - value) / scale
}

/// Relative slack of `value >= bound`.
pub fn lower_slack(bound: f64, value: f64) -> f64 {
    upper_slack(value, bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_nonnegative_worst() {
        let ok = FitReport::new("a", "g", vec![("C".into(), 1.0)], [0.5, 0.0, 2.0]);
        assert!(ok.pass);
        assert_eq!(ok.worst_residual, 0.0);
        let bad = FitReport::new("a", "g", vec![("C".into(), 1.0)], [0.5, -1e-3]);
        assert!(!bad.pass);
        let nan = FitReport::new("a", "g", vec![("C".into(), f64::INFINITY)], [1.0]);
        assert!(!nan.pass);
    }

    #[test]
    fn slack_signs() {
        assert!(upper_slack(2.0, 1.0) > 0.0);
        assert!(upper_slack(1.0, 2.0) < 0.0);
        assert!(lower_slack(1.0, 2.0) > 0.0);
    }
}

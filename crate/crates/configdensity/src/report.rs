//! Outcome record for one identity or inequality verification.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    /// Computed left-hand side of the checked relation.
    pub lhs: f64,
    /// Computed right-hand side (bound).
    pub rhs: f64,
    /// rhs - lhs (positive slack means the bound holds).
    pub margin: f64,
    pub passed: bool,
    /// Free-form details: parameters, per-case values, formulas.
    pub note: String,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64, note: impl Into<String>) -> Self {
        let margin = rhs - lhs;
        BoundReport {
            name: name.into(),
            lhs,
            rhs,
            margin,
            passed: margin >= -tol,
            note: note.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: lhs={:.6e} rhs={:.6e} margin={:.3e}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.lhs,
            self.rhs,
            self.margin,
            if self.note.is_empty() { String::new() } else { format!(" ({})", self.note) }
        )
    }
}

//! Measured-versus-target records shared by the diagnostic outputs.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub target: f64,
    pub measured: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Relative comparison `|measured − target| / |target| <= tolerance`.
    pub fn relative(name: impl Into<String>, target: f64, measured: f64, tolerance: f64) -> Self {
        let rel_err = ((measured - target) / target).abs();
        Self {
            name: name.into(),
            target,
            measured,
            rel_err,
            tolerance,
            pass: rel_err <= tolerance,
        }
    }

    /// Absolute comparison `|measured − target| <= tolerance`; `rel_err` then holds
    /// the absolute error.
    pub fn absolute(name: impl Into<String>, target: f64, measured: f64, tolerance: f64) -> Self {
        let err = (measured - target).abs();
        Self {
            name: name.into(),
            target,
            measured,
            rel_err: err,
            tolerance,
            pass: err <= tolerance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_and_absolute() {
        assert!(Check::relative("a", 2.0, 2.01, 0.01).pass);
        assert!(!Check::relative("a", 2.0, 2.03, 0.01).pass);
        assert!(Check::absolute("b", 0.0, 1e-12, 1e-10).pass);
        assert!(!Check::relative("c", 0.0, 1.0, 0.1).pass);
    }
}

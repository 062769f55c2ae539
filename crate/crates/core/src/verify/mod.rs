//! Statistical checks of the simulated laws against the analytic ones.
//!
//! Every experiment takes fixed seeds, so its reports are reproducible bit
//! for bit. Individual tests pass at `p > 0.01`; moment checks use three
//! standard errors or a relative tolerance, as stated in each report.

pub mod experiments;
pub mod laplace;
pub mod stats;

pub use experiments::{
    clt_experiment, lln_experiment, marginal_experiment, moment_experiment, overshoot_experiment,
    subtree_moment_experiment, RunOptions,
};
pub use laplace::{sample_laplace, LaplaceLaw};
pub use stats::{chi_square, chi_square_geometric, ks_test, ks_two_sample};

use serde::Serialize;

/// Significance level of single tests.
pub const P_THRESHOLD: f64 = 0.01;

/// Standard errors allowed for moment comparisons.
pub const SE_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    /// Sample count the statistic is based on.
    pub n: usize,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub empirical: Vec<f64>,
    pub theoretical: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    /// How `pass` was decided.
    pub rule: String,
}

impl TestReport {
    /// Passes when `p > P_THRESHOLD`.
    pub fn p_value_test(name: impl Into<String>, n: usize, statistic: f64, p: f64) -> Self {
        Self {
            name: name.into(),
            n,
            statistic,
            p_value: Some(p),
            empirical: vec![],
            theoretical: vec![],
            tolerance: P_THRESHOLD,
            pass: p > P_THRESHOLD,
            rule: format!("p > {P_THRESHOLD}"),
        }
    }

    /// Passes when `|empirical − theoretical| ≤ 3 se`; the statistic is the
    /// z-score.
    pub fn within_se(name: impl Into<String>, n: usize, empirical: f64, se: f64, theoretical: f64) -> Self {
        let tolerance = SE_MULTIPLIER * se;
        Self {
            name: name.into(),
            n,
            statistic: (empirical - theoretical) / se,
            p_value: None,
            empirical: vec![empirical, se],
            theoretical: vec![theoretical],
            tolerance,
            pass: (empirical - theoretical).abs() <= tolerance,
            rule: "|empirical - theoretical| <= 3 standard errors (empirical = [estimate, standard error])".into(),
        }
    }

    /// Passes when `|empirical/theoretical − 1| ≤ rel`.
    pub fn within_relative(name: impl Into<String>, n: usize, empirical: f64, theoretical: f64, rel: f64) -> Self {
        let statistic = empirical / theoretical - 1.0;
        Self {
            name: name.into(),
            n,
            statistic,
            p_value: None,
            empirical: vec![empirical],
            theoretical: vec![theoretical],
            tolerance: rel,
            pass: statistic.abs() <= rel,
            rule: format!("|empirical / theoretical - 1| <= {rel}"),
        }
    }

    /// Passes when `statistic ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, n: usize, statistic: f64, tolerance: f64, rule: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            n,
            statistic,
            p_value: None,
            empirical: vec![statistic],
            theoretical: vec![],
            tolerance,
            pass: statistic <= tolerance,
            rule: rule.into(),
        }
    }

    pub fn with_values(mut self, empirical: Vec<f64>, theoretical: Vec<f64>) -> Self {
        self.empirical = empirical;
        self.theoretical = theoretical;
        self
    }
}

pub fn all_pass(reports: &[TestReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

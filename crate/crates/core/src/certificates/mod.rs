//! Constructive certificates for small deficiencies: ring families on finite
//! metric spaces with the Lipschitz-space construction, and the centralizer
//! construction on finite function modules.

mod centralizer;
mod ivakhno;
mod rings;

pub use centralizer::{centralizer_construct, centralizer_verify, extreme_section, partition_base, BaseSet};
pub use ivakhno::{ivakhno_construct, ivakhno_verify, random_unit_lip};
pub use rings::{find_ring_family, RingEntry, RingFamily};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One verified inequality `value ≤ bound` or `value ≥ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    /// Distance to violation; negative when the check fails.
    pub slack: f64,
    pub pass: bool,
}

impl Check {
    /// `value ≤ bound + tol`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        let slack = bound - value;
        Check { name: name.into(), value, relation: Relation::AtMost, bound, slack, pass: slack >= -tol }
    }

    /// `value ≥ bound − tol`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        let slack = value - bound;
        Check { name: name.into(), value, relation: Relation::AtLeast, bound, slack, pass: slack >= -tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Default for CertificateReport {
    fn default() -> Self {
        CertificateReport { checks: Vec::new(), pass: true }
    }
}

impl CertificateReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        CertificateReport { checks, pass }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: CertificateReport) {
        other.checks.into_iter().for_each(|c| self.push(c));
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Largest value among checks whose name starts with `prefix`.
    pub fn max_value(&self, prefix: &str) -> Option<f64> {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).map(|c| c.value).reduce(f64::max)
    }

    pub fn min_value(&self, prefix: &str) -> Option<f64> {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).map(|c| c.value).reduce(f64::min)
    }
}

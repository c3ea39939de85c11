//! Findings produced by checkers.

use std::fmt;

/// One violated instance of a checked property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub trial: Option<u64>,
    pub subject: String,
    pub detail: String,
}

/// Result of one named check. It passes iff it has no findings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub check: String,
    pub seed: Option<u64>,
    pub trials: u64,
    /// Number of instances actually compared.
    pub instances: u64,
    pub findings: Vec<Finding>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, seed: Option<u64>, trials: u64) -> Self {
        Self {
            check: check.into(),
            seed,
            trials,
            instances: 0,
            findings: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn fail(&mut self, trial: Option<u64>, subject: impl Into<String>, detail: impl Into<String>) {
        self.findings.push(Finding {
            trial,
            subject: subject.into(),
            detail: detail.into(),
        });
    }

    /// Records one compared instance, failing it unless `ok`.
    pub fn expect(&mut self, ok: bool, trial: Option<u64>, subject: impl Into<String>, detail: impl Into<String>) {
        self.instances += 1;
        if !ok {
            self.fail(trial, subject, detail);
        }
    }

    /// Appends the findings of a per-trial sub-report, keeping trial order.
    pub fn absorb(&mut self, other: CheckReport) {
        self.instances += other.instances;
        self.findings.extend(other.findings);
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "{}: {verdict} ({} instances", self.check, self.instances)?;
        if !self.findings.is_empty() {
            write!(f, ", {} findings", self.findings.len())?;
        }
        write!(f, ")")
    }
}

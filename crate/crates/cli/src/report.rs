use std::fmt::Write as _;

use optkit::report::CheckReport;
use serde::Serialize;

#[derive(Serialize, Clone, Debug)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub instances: u64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Serialize, Clone, Debug)]
pub struct Counterexample {
    pub verdict: String,
    pub seed: Option<u64>,
    pub trial: Option<u64>,
    pub subject: String,
    pub detail: String,
}

#[derive(Serialize, Clone, Debug)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: Option<u64>,
    pub verdicts: Vec<Verdict>,
    pub counterexamples: Vec<Counterexample>,
    pub wall_time_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<serde_json::Value>,
}

impl Report {
    pub fn new(command: &str, inputs: &[&str], seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            seed,
            verdicts: Vec::new(),
            counterexamples: Vec::new(),
            wall_time_ms: None,
            certificate: None,
        }
    }

    pub fn verdict(&mut self, name: &str, passed: bool, instances: u64, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            name: name.into(),
            passed,
            instances,
            detail: detail.into(),
        });
    }

    pub fn counterexample(&mut self, verdict: &str, trial: Option<u64>, subject: impl Into<String>, detail: impl Into<String>) {
        self.counterexamples.push(Counterexample {
            verdict: verdict.into(),
            seed: self.seed,
            trial,
            subject: subject.into(),
            detail: detail.into(),
        });
    }

    pub fn absorb(&mut self, r: &CheckReport) {
        self.verdict(&r.check, r.passed(), r.instances, "");
        for f in &r.findings {
            self.counterexamples.push(Counterexample {
                verdict: r.check.clone(),
                seed: r.seed,
                trial: f.trial,
                subject: f.subject.clone(),
                detail: f.detail.clone(),
            });
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        let _ = writeln!(s, "inputs: {}", self.inputs.join(" "));
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed: {seed}");
        }
        for v in &self.verdicts {
            let mark = if v.passed { "pass" } else { "FAIL" };
            let _ = write!(s, "{mark} {} ({} instances)", v.name, v.instances);
            if !v.detail.is_empty() {
                let _ = write!(s, ": {}", v.detail);
            }
            s.push('\n');
        }
        for c in &self.counterexamples {
            let trial = c.trial.map_or_else(|| "-".to_string(), |t| t.to_string());
            let _ = writeln!(s, "  counterexample [{}] trial {trial}: {}: {}", c.verdict, c.subject, c.detail);
        }
        if let Some(ms) = self.wall_time_ms {
            let _ = writeln!(s, "wall_time_ms: {ms}");
        }
        if let Some(cert) = &self.certificate {
            s.push_str(&serde_json::to_string_pretty(cert).expect("serializable"));
            s.push('\n');
        }
        s
    }
}

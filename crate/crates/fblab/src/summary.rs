use std::fmt;
use std::time::Duration;

use fblab_core::io::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pass" => Some(Status::Pass),
            "fail" => Some(Status::Fail),
            "skip" => Some(Status::Skip),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub module: &'static str,
    /// The mathematical statement the check exercises.
    pub tag: &'static str,
    pub status: Status,
    pub measured: f64,
    pub threshold: f64,
    pub runtime: Duration,
    pub note: String,
}

/// One row per enabled check, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationSummary {
    pub scenario: String,
    pub checks: Vec<CheckResult>,
}

impl VerificationSummary {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, c: CheckResult) {
        debug_assert!(
            self.get(&c.name).is_none(),
            "check `{}` recorded twice",
            c.name
        );
        self.checks.push(c);
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "check",
            "module",
            "tag",
            "status",
            "measured",
            "threshold",
            "runtime_s",
            "note",
        ]);
        for c in &self.checks {
            t.push_cells(vec![
                c.name.clone(),
                c.module.to_string(),
                c.tag.replace(',', ";"),
                c.status.to_string(),
                format!("{:e}", c.measured),
                format!("{:e}", c.threshold),
                format!("{:.3}", c.runtime.as_secs_f64()),
                c.note.replace(',', ";"),
            ]);
        }
        t
    }
}

impl fmt::Display for VerificationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let tw = self
            .checks
            .iter()
            .map(|c| c.tag.len())
            .max()
            .unwrap_or(3)
            .max(3);
        writeln!(f, "scenario {}", self.scenario)?;
        writeln!(
            f,
            "{:<w$}  {:<14}  {:<tw$}  {:<6}  {:>11}  {:>11}  {:>8}",
            "check", "module", "tag", "status", "measured", "threshold", "time_s"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<w$}  {:<14}  {:<tw$}  {:<6}  {:>11.3e}  {:>11.3e}  {:>8.3}{}",
                c.name,
                c.module,
                c.tag,
                c.status,
                c.measured,
                c.threshold,
                c.runtime.as_secs_f64(),
                if c.note.is_empty() {
                    String::new()
                } else {
                    format!("  {}", c.note)
                }
            )?;
        }
        let (p, fl, s) = self.checks.iter().fold((0, 0, 0), |a, c| match c.status {
            Status::Pass => (a.0 + 1, a.1, a.2),
            Status::Fail => (a.0, a.1 + 1, a.2),
            Status::Skip => (a.0, a.1, a.2 + 1),
        });
        write!(f, "{p} passed, {fl} failed, {s} skipped")
    }
}

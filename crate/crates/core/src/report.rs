//! Named pass/fail checks with optional residuals.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckEntry {
    pub name: String,
    /// Where the check applies, e.g. `U`, `U,V` or `U,V:xi`.
    pub scope: String,
    pub passed: bool,
    /// A witness of failure in canonical series syntax.
    pub residual: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub entries: Vec<CheckEntry>,
}

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    pub fn pass(&mut self, name: &str, scope: impl Into<String>) {
        self.entries.push(CheckEntry {
            name: name.to_string(),
            scope: scope.into(),
            passed: true,
            residual: None,
        });
    }

    pub fn fail(&mut self, name: &str, scope: impl Into<String>, residual: Option<String>) {
        self.entries.push(CheckEntry {
            name: name.to_string(),
            scope: scope.into(),
            passed: false,
            residual,
        });
    }

    /// Records a check whose residual is empty exactly when it passes.
    pub fn record(&mut self, name: &str, scope: impl Into<String>, residual: Option<String>) {
        match residual {
            None => self.pass(name, scope),
            Some(r) => self.fail(name, scope, Some(r)),
        }
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }

    pub fn find(&self, name: &str) -> impl Iterator<Item = &CheckEntry> {
        let name = name.to_string();
        self.entries.iter().filter(move |e| e.name == name)
    }

    /// True when at least one check of this name ran and all of them passed.
    pub fn passed(&self, name: &str) -> bool {
        let mut any = false;
        for e in self.find(name) {
            if !e.passed {
                return false;
            }
            any = true;
        }
        any
    }
}

impl fmt::Display for CheckEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scope = if self.scope.is_empty() { "-" } else { &self.scope };
        write!(
            f,
            "check {} {} {}",
            self.name,
            scope,
            if self.passed { "pass" } else { "fail" }
        )?;
        if let Some(r) = &self.residual {
            write!(f, " residual {r}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

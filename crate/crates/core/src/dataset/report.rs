use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

/// One line of the validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: String,
    pub subject_id: String,
    pub message: String,
}

/// Non-fatal findings collected while loading. Written as JSON lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn push(
        &mut self,
        severity: Severity,
        code: &str,
        subject_id: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.issues.push(Issue {
            severity,
            code: code.to_owned(),
            subject_id: subject_id.into(),
            message: message.into(),
        });
    }

    pub fn warn(&mut self, code: &str, subject_id: impl Into<String>, message: impl Into<String>) {
        self.push(Severity::Warning, code, subject_id, message);
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, code: &str) -> usize {
        self.issues.iter().filter(|i| i.code == code).count()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for issue in &self.issues {
            serde_json::to_writer(&mut out, issue)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

use std::fmt::Write as _;

use thiserror::Error;

use super::{ActionId, GroundTask};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<ActionId>,
}

impl Plan {
    pub fn new(steps: Vec<ActionId>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// IPC plan file: one `(name arg ...)` per line.
    pub fn to_ipc(&self, task: &GroundTask) -> String {
        let mut out = String::new();
        for &a in &self.steps {
            writeln!(out, "{}", task.action(a)).expect("string write");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanParseError {
    #[error("line {line}: malformed plan step `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown ground action `{text}`")]
    UnknownAction { line: usize, text: String },
}

/// Parses an IPC plan file against `task`. Lines starting with `;` and blank
/// lines are ignored; names are matched case-insensitively.
pub fn parse_plan(text: &str, task: &GroundTask) -> Result<Plan, PlanParseError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let malformed = || PlanParseError::Malformed {
            line: i + 1,
            text: line.to_string(),
        };
        let inner = line
            .strip_prefix('(')
            .and_then(|l| l.strip_suffix(')'))
            .ok_or_else(malformed)?;
        let mut words = inner.split_whitespace().map(str::to_lowercase);
        let name = words.next().ok_or_else(malformed)?;
        let args: Vec<String> = words.collect();
        let id = task
            .find_action(&name, &args)
            .ok_or_else(|| PlanParseError::UnknownAction {
                line: i + 1,
                text: line.to_string(),
            })?;
        steps.push(id);
    }
    Ok(Plan { steps })
}

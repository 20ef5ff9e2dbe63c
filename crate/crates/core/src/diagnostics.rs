use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
}

/// A non-fatal finding produced while compiling a course.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Index of the cell the finding is about, when there is one.
    pub cell: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(cell: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            cell,
            message: message.into(),
        }
    }

    pub fn info(cell: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Info,
            cell,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
        };
        match self.cell {
            Some(cell) => write!(f, "{level}: cell {cell}: {}", self.message),
            None => write!(f, "{level}: {}", self.message),
        }
    }
}

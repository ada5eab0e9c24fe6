use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes. The serialized form is the upper-case name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagCode {
    IndentMismatch,
    IndentTab,
    UnexpectedToken,
    UnexpectedCharacter,
    UnterminatedString,
    EmptyBody,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::IndentMismatch => "INDENT_MISMATCH",
            DiagCode::IndentTab => "INDENT_TAB",
            DiagCode::UnexpectedToken => "UNEXPECTED_TOKEN",
            DiagCode::UnexpectedCharacter => "UNEXPECTED_CHARACTER",
            DiagCode::UnterminatedString => "UNTERMINATED_STRING",
            DiagCode::EmptyBody => "EMPTY_BODY",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A located problem in MiniPencil source. `line` and `col` are 1-based,
/// `col` counts characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl Diagnostic {
    pub fn error(code: DiagCode, message: impl Into<String>, line: usize, col: usize) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            line,
            col,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {sev}[{}]: {}",
            self.line, self.col, self.code, self.message
        )
    }
}

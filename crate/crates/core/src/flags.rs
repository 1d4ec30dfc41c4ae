use serde::{Deserialize, Serialize};
use std::fmt;

/// A measured discrepancy between an operational computation and a printed
/// closed form or reported value. Flags are report content, not errors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub code: String,
    pub message: String,
}

impl Flag {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Flag {
            code: code.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

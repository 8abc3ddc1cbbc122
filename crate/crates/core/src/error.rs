use thiserror::Error;

/// A device or scenario parameter outside its admissible range.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid parameter `{field}`: {reason}")]
pub struct SpecError {
    pub field: &'static str,
    pub reason: String,
}

impl SpecError {
    pub(crate) fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure(cond: bool, field: &'static str, reason: &str) -> Result<(), SpecError> {
    if cond {
        Ok(())
    } else {
        Err(SpecError::new(field, reason))
    }
}

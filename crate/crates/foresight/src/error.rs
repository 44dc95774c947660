use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    BadInput(String),
    #[error("{failed} of {total} checks failed")]
    ValidationFailed { failed: usize, total: usize },
}

pub fn bad_input(msg: impl Into<String>) -> anyhow::Error {
    AppError::BadInput(msg.into()).into()
}

/// Process exit code for an error: 2 bad input, 3 numerical degeneracy,
/// 4 validation failure, 1 anything else (IO and the like).
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(app) = cause.downcast_ref::<AppError>() {
            return match app {
                AppError::BadInput(_) => 2,
                AppError::ValidationFailed { .. } => 4,
            };
        }
        if let Some(core) = cause.downcast_ref::<foresight_core::Error>() {
            return if core.is_invalid_input() { 2 } else { 3 };
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn codes() {
        assert_eq!(exit_code(&bad_input("x")), 2);
        let e: anyhow::Error = foresight_core::Error::DegenerateBinning { step: 3 }.into();
        assert_eq!(exit_code(&e.context("bounds")), 3);
        let e: anyhow::Error = AppError::ValidationFailed {
            failed: 1,
            total: 2,
        }
        .into();
        assert_eq!(exit_code(&e), 4);
        let e = std::fs::read("/nonexistent/file").context("reading");
        assert_eq!(exit_code(&e.unwrap_err()), 1);
    }
}

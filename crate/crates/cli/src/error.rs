use thiserror::Error;

/// Failures surfaced by the command-line driver, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    SizeGuard(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 2,
            CliError::SizeGuard(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<adsignal::Error> for CliError {
    fn from(err: adsignal::Error) -> Self {
        let msg = err.to_string();
        if err.is_size_guard() {
            CliError::SizeGuard(msg)
        } else if err.is_numerical() || matches!(err, adsignal::Error::Inconsistent { .. }) {
            CliError::Numerical(msg)
        } else {
            CliError::Validation(msg)
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let lp = adsignal::Error::Numerical {
            stage: "simplex",
            reason: "cycling".into(),
        };
        assert_eq!(CliError::from(lp).exit_code(), 4);
        let big = adsignal::Error::TooLarge {
            what: "samples",
            required: 2.0,
            limit: 1.0,
        };
        assert_eq!(CliError::from(big).exit_code(), 3);
        let bad: adsignal::Error = "sideways".parse::<adsignal::rv::Regime>().unwrap_err();
        assert_eq!(CliError::from(bad).exit_code(), 2);
    }
}

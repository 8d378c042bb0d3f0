use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input outside the domain of a physical formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The simulated state went non-finite.
    #[error("numerical blow-up at control step {step} (t = {time_s:.6} s): {what}")]
    Numerical {
        step: u64,
        time_s: f64,
        what: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed log {}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI, one per error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Domain(_) => 3,
            Error::Numerical { .. } => 4,
            Error::Io { .. } | Error::Parse { .. } => 5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_per_category() {
        let codes = [
            Error::config("x").exit_code(),
            Error::domain("x").exit_code(),
            Error::Numerical {
                step: 3,
                time_s: 1.5e-4,
                what: "speed".into(),
            }
            .exit_code(),
            Error::io("/x", std::io::Error::other("x")).exit_code(),
        ];
        assert_eq!(codes, [2, 3, 4, 5]);
        assert!(codes.iter().all(|&c| c != 0 && c != 1));
    }

    #[test]
    fn numerical_message_names_the_step() {
        let e = Error::Numerical {
            step: 42,
            time_s: 2.1e-3,
            what: "stator current".into(),
        };
        assert!(e.to_string().contains("control step 42"));
    }
}

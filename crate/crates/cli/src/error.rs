use serde_json::json;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown experiment {0:?} (see `chebstep list`)")]
    UnknownExperiment(String),

    #[error("invalid override {key:?}: {reason}")]
    InvalidOverride { key: String, reason: String },

    #[error(transparent)]
    Numeric(#[from] chebstep::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::InvalidOverride {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::UnknownExperiment(_) => "UnknownExperiment",
            CliError::InvalidOverride { .. } => "InvalidOverride",
            CliError::Numeric(e) => numeric_kind(e),
            CliError::Io { .. } => "Io",
            CliError::Usage(_) => "Usage",
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

fn numeric_kind(e: &chebstep::Error) -> &'static str {
    use chebstep::Error::*;
    match e {
        NotSymmetric { .. } => "NotSymmetric",
        NoConvergence { .. } => "NoConvergence",
        DegenerateSpectrum(_) => "DegenerateSpectrum",
        InvalidBounds { .. } => "InvalidBounds",
        DimensionMismatch { .. } => "DimensionMismatch",
        NotSquare { .. } => "NotSquare",
        SizeLimit { .. } => "SizeLimit",
        NonFinite { .. } => "NonFinite",
        SingularMatrix { .. } => "SingularMatrix",
        NegativeDerivative { .. } => "NegativeDerivative",
        ZeroDiagonal { .. } => "ZeroDiagonal",
        StepTooLarge { .. } => "StepTooLarge",
        InvalidSchedule(_) => "InvalidSchedule",
        InvalidArgument(_) => "InvalidArgument",
        Parse(_) => "Parse",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_json_is_machine_readable() {
        let e = CliError::invalid("bogus", "unknown key");
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"], "InvalidOverride");
        assert!(v["message"].as_str().unwrap().contains("bogus"));
    }

    #[test]
    fn numeric_errors_keep_their_variant_name() {
        let e: CliError = chebstep::Error::SizeLimit {
            what: "T",
            value: 11,
            max: 10,
        }
        .into();
        assert_eq!(e.kind(), "SizeLimit");
    }
}

use serde::Serialize;
use serde_json::json;

/// Failures of a run, each with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration or arguments; names the offending key.
    Validation { key: String, message: String },
    /// An iterative method did not converge.
    Numerical { message: String, diagnostic: String },
    /// `verify-all` found defects above tolerance.
    Verification { failed: Vec<String> },
    /// The result could not be written.
    Io { path: String, message: String },
}

impl CliError {
    pub fn validation(key: impl Into<String>, message: impl ToString) -> Self {
        CliError::Validation {
            key: key.into(),
            message: message.to_string(),
        }
    }

    /// Maps an engine error raised while working on `key`.
    pub fn engine(key: &str, e: thermoform::Error) -> Self {
        match e {
            thermoform::Error::NotConverged { ref diagnostic, .. } => CliError::Numerical {
                message: e.to_string(),
                diagnostic: diagnostic.clone(),
            },
            _ => CliError::validation(key, e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification { .. } => 1,
            CliError::Validation { .. } | CliError::Io { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    /// The machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            exit_code: i32,
            #[serde(flatten)]
            detail: serde_json::Value,
        }
        let (kind, detail) = match self {
            CliError::Validation { key, message } => ("validation", json!({ "key": key, "message": message })),
            CliError::Numerical { message, diagnostic } => {
                ("numerical", json!({ "message": message, "diagnostic": diagnostic }))
            }
            CliError::Verification { failed } => ("verification", json!({ "failed": failed })),
            CliError::Io { path, message } => ("io", json!({ "path": path, "message": message })),
        };
        let body = Body {
            kind,
            exit_code: self.exit_code(),
            detail,
        };
        serde_json::to_string(&json!({ "error": body })).expect("error serializes")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation { key, message } => write!(f, "invalid {key}: {message}"),
            CliError::Numerical { message, .. } => write!(f, "{message}"),
            CliError::Verification { failed } => write!(f, "verification failed: {}", failed.join(", ")),
            CliError::Io { path, message } => write!(f, "cannot write {path}: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

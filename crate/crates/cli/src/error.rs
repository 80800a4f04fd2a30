use lrkam::error::{DiophantineError, DynamicsError, KamError, MechanicsError, SeriesError};
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration: exit code 2.
    Usage(String),
    /// The engine refused or failed: exit code 1.
    Engine { kind: &'static str, message: String, detail: Value },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Engine { .. } => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Usage(message) => json!({ "error": "usage", "message": message }),
            CliError::Engine { kind, message, detail } => json!({ "error": kind, "message": message, "detail": detail }),
        }
    }

    fn engine(kind: &'static str, message: String) -> Self {
        CliError::Engine {
            kind,
            message,
            detail: Value::Null,
        }
    }
}

impl From<KamError> for CliError {
    fn from(e: KamError) -> Self {
        let message = e.to_string();
        match e {
            KamError::SmallDivisorViolation { support, l, value, bound } => CliError::Engine {
                kind: "small_divisor_violation",
                message,
                detail: json!({ "A": support, "l": l, "value": value, "bound": bound }),
            },
            KamError::Divergence { stage, norm, limit } => CliError::Engine {
                kind: "divergence",
                message,
                detail: json!({ "stage": stage, "norm": norm, "limit": limit }),
            },
            KamError::ContractionFailure { sup, limit } => CliError::Engine {
                kind: "contraction_failure",
                message,
                detail: json!({ "sup": sup, "limit": limit }),
            },
            KamError::CapsExceeded(_) => CliError::engine("caps_exceeded", message),
            KamError::InvalidSchedule(_) => CliError::engine("invalid_schedule", message),
            KamError::Series(_) => CliError::engine("series", message),
        }
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        CliError::engine("series", e.to_string())
    }
}

impl From<DiophantineError> for CliError {
    fn from(e: DiophantineError) -> Self {
        let kind = match e {
            DiophantineError::Budget { .. } => "budget",
            DiophantineError::Invalid(_) => "invalid_frequency",
        };
        CliError::engine(kind, e.to_string())
    }
}

impl From<MechanicsError> for CliError {
    fn from(e: MechanicsError) -> Self {
        let message = e.to_string();
        match e {
            MechanicsError::Aliasing { tail, tol } => CliError::Engine {
                kind: "aliasing",
                message,
                detail: json!({ "tail": tail, "tol": tol }),
            },
            MechanicsError::Domain(_) => CliError::engine("domain", message),
            MechanicsError::Tolerance(_) => CliError::engine("tolerance", message),
            MechanicsError::Singular(_) => CliError::engine("singular", message),
            MechanicsError::Unsupported(_) => CliError::engine("unsupported", message),
            MechanicsError::Series(_) => CliError::engine("series", message),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        let kind = match e {
            DynamicsError::StepSize { .. } => "step_size",
            _ => "dynamics",
        };
        CliError::engine(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::engine("io", e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::engine("io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::engine("io", e.to_string())
    }
}

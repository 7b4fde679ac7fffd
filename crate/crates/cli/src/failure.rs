//! Error bodies and process exit codes.

use sanov_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Internal,
    Validation,
    Capacity,
    EmptyEvent,
    InfeasibleProjection,
    ChecksFailed,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Internal => 1,
            FailureKind::Validation => 2,
            FailureKind::Capacity => 3,
            FailureKind::EmptyEvent => 4,
            FailureKind::InfeasibleProjection => 5,
            FailureKind::ChecksFailed => 6,
        }
    }
}

/// Serialized to stderr as `{"error": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Failure {
    pub kind: FailureKind,
    pub exit_code: i32,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    /// Index of the first constraint whose addition empties the set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub error: Failure,
}

impl Failure {
    pub fn new(kind: FailureKind, message: String) -> Self {
        Self {
            kind,
            exit_code: kind.exit_code(),
            message,
            field: None,
            certificate_index: None,
        }
    }

    pub fn validation(field: Option<String>, message: String) -> Self {
        Self {
            field,
            ..Self::new(FailureKind::Validation, message)
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.exit_code
    }

    pub fn into_body(self) -> ErrorBody {
        ErrorBody { error: self }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InvalidDistribution(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidConstraint(_)
            | Error::InvalidArgument(_)
            | Error::Precondition(_) => Failure::new(FailureKind::Validation, message),
            Error::Capacity { .. } => Failure::new(FailureKind::Capacity, message),
            Error::EmptyEvent { .. } => Failure::new(FailureKind::EmptyEvent, message),
            Error::Infeasible { index, .. } => Failure {
                certificate_index: Some(index),
                ..Failure::new(FailureKind::InfeasibleProjection, message)
            },
            Error::InfiniteDivergence => Failure::new(FailureKind::InfeasibleProjection, message),
            Error::NotConverged { .. } => Failure::new(FailureKind::Internal, message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(FailureKind::Internal, e.to_string())
    }
}

use std::fmt;
use std::path::Path;

use fame_core::curriculum::CurriculumError;
use fame_core::dynamics::DynamicsError;
use fame_core::estimation::EstimationError;
use fame_core::harness::HarnessError;
use fame_core::model::ModelError;
use fame_core::policy::PolicyError;
use fame_core::reward::RewardError;
use fame_core::sampling::SamplingError;

/// Process exit categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Missing or unparsable input.
    Input = 2,
    /// Dimension mismatch or failed validation.
    Validation = 3,
    /// NaN or infinity in a computation.
    Numeric = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Input,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Validation,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::input(format!("{}: {err}", path.display()))
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn with(kind: Kind, e: impl fmt::Display) -> CliError {
    CliError {
        kind,
        message: e.to_string(),
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let kind = match e {
            ModelError::Validation { .. } => Kind::Validation,
            _ => Kind::Input,
        };
        with(kind, e)
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        let kind = match e {
            DynamicsError::NonFinite { .. } => Kind::Numeric,
            _ => Kind::Validation,
        };
        with(kind, e)
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::Dynamics(d) => d.into(),
            other => with(Kind::Validation, other),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        let kind = match e {
            PolicyError::NonFinite(_) => Kind::Numeric,
            PolicyError::Io { .. } | PolicyError::Manifest(_) => Kind::Input,
            _ => Kind::Validation,
        };
        with(kind, e)
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        let kind = match e {
            RewardError::NonFinite(_) => Kind::Numeric,
            _ => Kind::Validation,
        };
        with(kind, e)
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        with(Kind::Validation, e)
    }
}

impl From<CurriculumError> for CliError {
    fn from(e: CurriculumError) -> Self {
        with(Kind::Validation, e)
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Dynamics(d) => d.into(),
            HarnessError::Estimation(d) => d.into(),
            HarnessError::Policy(d) => d.into(),
            HarnessError::Reward(d) => d.into(),
            HarnessError::Sampling(d) => d.into(),
            HarnessError::Curriculum(d) => d.into(),
            HarnessError::NonFinite { .. } => with(Kind::Numeric, e),
            other => with(Kind::Validation, other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        with(Kind::Input, e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        with(Kind::Input, e)
    }
}

//! Error classification for exit codes.
//!
//! 2: the request itself is malformed (config file, flags, parameter ranges).
//! 3: the request is well-formed but asks about a regime that does not exist
//!    for these parameters (no paradoxical band, wrong sign of b, ...).
//! 4: the computation was valid but failed to complete (integrator bailed,
//!    output could not be written).

use painleve::compliance::ComplianceError;
use painleve::contact::ContactModelError;
use painleve::hybrid::HybridError;
use painleve::iwc::IwcError;
use painleve::ode::OdeError;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Domain(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ContactModelError> for CliError {
    fn from(e: ContactModelError) -> Self {
        match e {
            ContactModelError::InvalidAlpha(_) | ContactModelError::InvalidMu(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ComplianceError> for CliError {
    fn from(e: ComplianceError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IwcError> for CliError {
    fn from(e: IwcError) -> Self {
        match e {
            IwcError::InvalidDelta(_) => CliError::Config(e.to_string()),
            IwcError::Numeric(_) | IwcError::Unresolved { .. } => {
                CliError::Runtime(e.to_string())
            }
            IwcError::Contact(inner) => inner.into(),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<HybridError> for CliError {
    fn from(e: HybridError) -> Self {
        match e {
            HybridError::InvalidInitial(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<OdeError> for CliError {
    fn from(e: OdeError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

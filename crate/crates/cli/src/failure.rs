use resfree_core::Error;
use std::fmt;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CERTIFICATE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_IO,
        }
    }

    /// Wraps a library error with the stage it came from.
    pub fn from_core(stage: &str, e: Error) -> Self {
        let msg = format!("{stage}: {e}");
        match e {
            Error::Argument(_) | Error::Domain(_) | Error::ContractionViolation { .. } | Error::Rejected(_) => {
                Failure::Validation(msg)
            }
            Error::Convergence { .. } | Error::Solver(_) => Failure::Numerical(msg),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

pub trait Stage<T> {
    fn stage(self, name: &str) -> Result<T, Failure>;
}

impl<T> Stage<T> for Result<T, Error> {
    fn stage(self, name: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::from_core(name, e))
    }
}

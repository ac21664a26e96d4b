use std::fmt;

use lipfree_core::Error;

/// Process exit status: 0 success, 1 domain-level failure, 2 input error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    DomainFailure = 1,
    InputError = 2,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// A command error tagged with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            status: Status::InputError,
            error: error.into(),
        }
    }

    pub fn domain(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            status: Status::DomainFailure,
            error: error.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_input_error(&e) {
            Failure::input(e)
        } else {
            Failure::domain(e)
        }
    }
}

/// Errors about malformed or out-of-range input, as opposed to mathematical
/// verdicts about well-formed input.
pub fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse(_)
            | Error::InvalidArgument(_)
            | Error::UnknownLabel(_)
            | Error::UnknownBase(_)
            | Error::DuplicateLabel(_)
            | Error::NotSquare { .. }
            | Error::StageTooLarge { .. }
            | Error::AlphaOutOfRange(_)
            | Error::DimensionTooLargeForExact(_)
            | Error::NotExactlyRepresentable(_)
    )
}

pub type CmdResult<T = Status> = Result<T, Failure>;

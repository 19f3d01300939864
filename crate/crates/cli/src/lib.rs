//! Command-line front end and benchmark harness for the plan rewriting
//! engine. The `pbr` binary is a thin wrapper over this crate.

pub mod bench;
pub mod format;
pub mod setup;

use std::fmt;

/// Process exit status carried as error context. `main` looks it up with
/// `anyhow::Error::downcast_ref`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Unreadable or malformed input.
    Input,
    /// No initial plan could be built.
    NoInitialPlan,
    /// The search ended without a valid plan.
    Budget,
    /// `validate` found violations.
    Invalid,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Input => 1,
            Status::NoInitialPlan => 2,
            Status::Budget => 3,
            Status::Invalid => 4,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Input => "input error",
            Status::NoInitialPlan => "no initial plan",
            Status::Budget => "no valid plan within budget",
            Status::Invalid => "invalid plan",
        })
    }
}

/// Exit code for `err`: the outermost [`Status`] attached, else 1.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    err.downcast_ref::<Status>().map_or(1, |s| s.code())
}

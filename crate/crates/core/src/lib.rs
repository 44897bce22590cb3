//! Digit-string models of qubit and qutrit states.

pub mod angle;
pub mod battery;
pub mod digits;
pub mod error;
pub mod experiments;
pub mod phase;
pub mod reduction;
pub mod states;

pub use error::{Error, Result};

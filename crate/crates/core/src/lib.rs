//! Statevector simulation of amplitude-estimation circuits that compute
//! cyclic cross-correlations and translation-model EMML updates, together
//! with the classical references they are checked against.

pub mod classical;
pub mod crosscorr;
pub mod emml;
pub mod encoding;
mod error;
pub mod fft;
pub mod io;
pub mod qae;
pub mod selftest;
pub mod statevec;

pub use error::{Error, Result};

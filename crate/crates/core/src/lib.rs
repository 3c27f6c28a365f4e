#![forbid(unsafe_code)]

pub mod channel;
pub mod correlations;
pub mod entropy;
pub mod error;
pub mod io;
pub mod linalg;
pub mod markovscan;
pub mod qstate;
pub mod recovery;

pub use error::{Error, Result};
pub use num_complex::Complex64;

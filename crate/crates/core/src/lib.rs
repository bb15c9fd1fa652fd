pub mod diagnostics;
pub mod error;
pub mod flows;
pub mod hamiltonians;
pub mod initial;
pub mod schrodinger;
pub mod spectral;

pub use error::{Error, Result};

pub mod cocycle;
pub mod diffraction;
pub mod error;
pub mod fixtures;
mod expr;
pub mod numberfield;
pub mod oracle;
pub mod output;
pub mod rule;
pub mod substitution;
pub mod svg;
pub mod system;
pub mod windows;

pub use error::{Error, Result};

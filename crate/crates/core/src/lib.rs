pub mod action;
pub mod cli;
pub mod conventions;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod oracle;
pub mod polynomial;
pub mod propagators;
pub mod surface;
pub mod symbols;
pub mod symplectic;

pub use conventions::Orientation;
pub use error::{Error, Result};

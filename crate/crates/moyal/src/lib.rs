pub mod cli;
pub mod element;
pub mod error;
pub mod fock;
pub mod lipschitz;
pub mod optimal;
pub mod solver;
pub mod state;
pub mod symplectic;

pub use error::{Error, Result};

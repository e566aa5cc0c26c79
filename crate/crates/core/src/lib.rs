pub mod equivalence;
pub mod error;
pub mod expansive;
pub mod grid;
pub mod group;
pub mod kernels;
pub mod linalg;
pub mod maximal;

pub use error::{Error, Result};

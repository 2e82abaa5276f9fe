pub mod error;
pub mod experiments;
pub mod bounds;
pub mod certificates;
pub mod feasibility;
pub mod flow;
pub mod spaces;
pub mod transport;

pub use error::{Error, Result};

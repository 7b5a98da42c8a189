pub mod config;
pub mod corrections;
pub mod epsilon;
pub mod error;
pub mod inner;
pub mod numerics;
pub mod outer;
pub mod report;

pub use error::{Error, Result};
pub use numerics::sparse::set_threads;
pub use report::Check;

pub mod arc;
pub mod bipartite;
pub mod engine;
pub mod error;
pub mod io;
pub mod linalg;
pub mod sequential;
pub mod synthesis;
pub mod template;

pub use error::{Error, Result};

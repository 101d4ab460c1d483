pub mod algorithms;
pub mod dense;
pub mod embeddings;
pub mod error;
pub mod experiments;
pub mod field;
pub mod instances;
pub mod output;
pub mod rng;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
pub use field::{FieldTag, Matrix, Scalar};
pub use rng::RngStream;

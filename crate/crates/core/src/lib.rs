pub mod cli;
pub mod dataset_io;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod multilinear;
pub mod pipeline;
pub mod svm;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use tensor::DenseTensor;

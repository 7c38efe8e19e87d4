pub mod error;
pub mod forecast;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod prior;
pub mod process;
pub mod reparam;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::{Mat, Matrix, SpdMatrix};
pub use model::{Trajectory, VarModel};
pub use reparam::{PacfSequence, RmlSequence, UnconstrainedSequence};
pub use scalar::{Dual, Real};

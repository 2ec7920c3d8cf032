//! Dense complex linear algebra and quantum-state primitives.

mod matrix;
mod state;
mod subsystems;

pub use matrix::ComplexMatrix;
pub use state::{DensityMatrix, PureState};
pub use subsystems::Layout;

pub(crate) use state::inner;
pub(crate) use subsystems::check_dims;

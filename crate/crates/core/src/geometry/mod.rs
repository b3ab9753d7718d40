//! Concrete complete metric spaces: Euclidean space and the SPD cone under
//! the trace and Thompson metrics.

mod convexity;
mod linalg;
mod point;
pub mod sample;
mod space;

pub use convexity::{convexity_constant, ConvexityConstant};
pub use linalg::{matrix_function, MatrixFunction, MAX_CONDITION, SPD_EIGEN_FLOOR, SYMMETRY_TOL};
pub use point::Point;
pub use space::{loewner_leq, Geometry, Order, Space};

pub(crate) use linalg::{symmetrize, SymEig};

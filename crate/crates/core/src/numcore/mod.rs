//! Dense linear algebra and seeded randomness shared by every other module.

mod linalg;
mod rng;
mod tensor;

pub use linalg::{inverse_spd, solve_spd, sym_eigenvalues};
pub use rng::{rng_normal, Rng};
pub use tensor::{gram, mat_vec, matmul, xt_vec, Tensor};

//! Numerical primitives shared by the samplers: dense SPD linear algebra,
//! special functions, truncated-normal draws and seeded RNG streams.

mod linalg;
mod rng;
mod special;
mod truncnorm;

pub use linalg::{cholesky, invert_spd, log_det_spd, schur_complement, SpdMatrix};
pub use rng::{stream_rng, ChainRng};
pub use special::{log_gamma, std_normal_cdf, std_normal_quantile, std_normal_sf};
pub use truncnorm::{sample_truncated_normal, TruncationInterval};

//! Two-body interaction integrals over the radial basis.

mod cache;
mod moments;
mod multipole;
mod nuclear;
mod tensor;
mod wigner;

pub use cache::{cache_key, cache_path, load, load_or_build, store, CacheKey};
pub use multipole::{coulomb_tensor, multipole_block, newton_tensor};
pub use nuclear::{gaussian_tensor, nuclear_kernel_w, nuclear_tensor, scaled_bessel_i, NuclearKernel};
pub use tensor::{pair_index, pair_of, TwoBodyTensor};
pub use wigner::{multipole_terms, wigner3j_sq_000};

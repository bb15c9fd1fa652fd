//! Periodic grids, Fourier transforms, multipliers, Sobolev norms and
//! dealiased products.

mod field;
mod grid;
mod norms;
pub mod ops;
mod products;
mod symbol;
mod transform;

pub use field::Field;
pub use grid::Grid;
pub use norms::{h_minus1_norm, sobolev_norm};
pub use products::dealiased_product;
pub use symbol::{apply_multiplier, apply_multiplier_complex, NyquistRule, Symbol};
pub use transform::{forward_transform, inverse_transform, Spectrum};

pub(crate) use norms::{h1k, hm1k};
pub(crate) use products::{product_unchecked, triple_product};
pub(crate) use transform::{fft, ifft};

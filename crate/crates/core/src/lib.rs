//! Numerical experiments on quantized open baker's maps: fractal Weyl laws,
//! spectral gaps and propagation through fattened Cantor sets.

pub mod baker;
pub mod cantor;
pub mod cutoff;
pub mod dft;
pub mod error;
pub mod experiments;
pub mod matrix;
pub mod propagation;
mod quad;
pub mod spectral;

pub use baker::{BakerOperator, BakerSpec, TrimmedOperator};
pub use cutoff::{make_cutoff, CutoffFunction};
pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, ComplexVector, C64};
pub use spectral::{eigenvalues, Spectrum};

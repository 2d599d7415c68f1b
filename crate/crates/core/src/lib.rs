pub mod cauchy;
pub mod elliptic;
mod error;
pub mod experiment;
pub mod field;
pub mod interpolation;
pub mod landis;
pub mod multiplier;
pub mod random;
pub mod similarity;
pub mod stream;
pub mod ucpf;

pub use error::{Error, Result};
pub use field::{ComplexField, Field, Grid, Margin, RealField, Region, C64};

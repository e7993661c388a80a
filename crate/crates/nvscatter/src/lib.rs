//! Inverse scattering for the Novikov-Veselov (NV) and modified
//! Novikov-Veselov (mNV) equations on a periodic desk-scale grid.

pub mod cgo;
pub mod dsii;
pub mod error;
pub mod evolution;
pub mod expansion;
pub mod field;
pub mod grid;
pub mod io;
pub mod krylov;
pub mod miura;
pub mod oracle;
pub mod schrodinger;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{ComplexField, C64};
pub use grid::{Grid, Role};

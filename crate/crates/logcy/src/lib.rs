//! Log Calabi–Yau surfaces from toric models: tropical pairs, canonical
//! scattering diagrams, broken lines and theta function algebras.

pub mod broken_lines;
pub mod curve_classes;
pub mod cyclic_quotient;
pub mod error;
pub mod formal;
pub mod lattice;
pub mod rational;
pub mod scattering;
pub mod series_ring;
pub mod theta;
pub mod tropical_pair;

pub use error::{Error, Result};

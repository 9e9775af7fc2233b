//! Spectra and scattering matrices of metric quantum graphs, symmetry
//! quotients built from one-dimensional group representations, and the
//! cross-graph comparisons that check isospectrality and isoscattering.

mod assembly;
pub mod graph;
pub mod linalg;
pub mod spectral;
pub mod scattering;
pub mod symmetry;
pub mod builtin;
pub mod analysis;
pub mod export;

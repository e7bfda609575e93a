//! qsymp — a numerical laboratory for quasiperiodically forced symplectic
//! twist maps.
//!
//! The crate builds exact-symplectic maps of R^{2d} from scalar generating
//! functions or from time-periodic Hamiltonian flows driven along an
//! embedded quasiperiodic orbit, enumerates their fixed points as critical
//! points of a pulled-back potential, and cross-validates the fixed-point
//! density through three independent estimators: direct box counting, a
//! smoothed counting integral sampled by Monte Carlo, and a surface integral
//! over the zero level set of the gradient.

pub mod annulus;
pub mod config;
pub mod critical;
pub mod density;
pub mod error;
pub mod exec;
pub mod field;
pub mod flow;
pub mod output;
pub mod runner;
pub mod twist;

pub use error::QsympError;

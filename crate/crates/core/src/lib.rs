//! Quantum-trajectory simulation of a control atom next to a blockaded
//! Rydberg ensemble.
//!
//! The numerical core is generic over [`scalar::Real`] (`f64` or `f32`);
//! the aliases below fix the precision for common use.

pub mod collective;
pub mod config;
pub mod disorder;
pub mod hilbert;
pub mod linalg;
pub mod mcwf;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod params;
pub mod scalar;
pub mod sweep;

pub use hilbert::{AtomLevel, AtomSelector, Basis, BasisMode, Configuration};
pub use params::SimParams;

pub type Operator = hilbert::SparseOperator<f64>;
pub type State = hilbert::StateVector<f64>;
pub type Matrix = linalg::DenseMatrix<f64>;
pub type Model = model::ModelOperators<f64>;
pub type Observables = observables::ObservableSet<f64>;

pub type Operator32 = hilbert::SparseOperator<f32>;
pub type State32 = hilbert::StateVector<f32>;
pub type Matrix32 = linalg::DenseMatrix<f32>;
pub type Model32 = model::ModelOperators<f32>;
pub type Observables32 = observables::ObservableSet<f32>;

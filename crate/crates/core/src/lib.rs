pub mod amplitudes;
pub mod beamsplitter;
pub mod error;
pub mod fock;
pub mod geometry;
pub mod mode_space;
pub mod observables;
pub mod quadrature;
pub mod verify;

pub use amplitudes::{Convention, FieldConfiguration, TwoPortFieldConfiguration};
pub use beamsplitter::{SplitterCoefficients, TwoPortModeVectors};
pub use error::{Error, Result};
pub use fock::{FockSpace, ScatteringOperator};
pub use geometry::{BeamGeometry, ModeIndex};
pub use mode_space::{ModeBasis, ModeVector};
pub use observables::RSurface;
pub use quadrature::QuadratureRule;

//! Spectral computations for diagonal composition operators on the Hardy
//! space of the infinite polydisk, and finite-section checks for
//! one-variable symbols.

pub mod bounds;
pub mod cone;
pub mod error;
pub mod matrixlab;
pub mod rearrange;
pub mod schatten;
pub mod weights;

pub use cone::{LatticePoint, MultiIndex};
pub use error::{Error, Result};
pub use matrixlab::{SpectrumSet, TruncatedOperator, C64};
pub use rearrange::{ApproximationNumber, EigenvalueStream};
pub use schatten::{LogProduct, Membership, SchattenReport};
pub use weights::{WeightKind, WeightSequence};

//! Finite-dimensional local-rigidity toolkit for unitary group actions.
//!
//! The crate builds the two-step cochain complex `C⁰ → C¹ → C²` of a finite
//! presentation with coefficients in a unitary module, splits it, measures
//! spectral gaps and tame constants on graded module families, and solves the
//! conjugacy equation `u π u⁻¹ = π′` by a Newton iteration driven by the
//! splitting of the adjoint complex.

pub mod cochain;
pub mod error;
pub mod fpgroup;
pub mod gaps;
pub mod linalg;
pub mod rigidity;
pub mod scenario;
pub mod tame;
pub mod unirep;

pub use error::{Error, Result};
pub use fpgroup::{Letter, Presentation, Word};
pub use unirep::{GradedModule, Rotation, Spin, TorusElement, UnitaryRep};

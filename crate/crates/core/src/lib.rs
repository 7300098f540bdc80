//! Exact-arithmetic toolkit for toric vector bundles presented as piecewise
//! linear maps into buildings: fans, prevaluations, Klyachko filtrations and
//! the compatibility solver, positivity via wall splitting, equivariant
//! Chern classes, reductions to orthogonal and symplectic groups, and
//! transition cocycles.

pub mod building;
pub mod chern;
pub mod classical;
pub mod cocycle;
pub mod error;
pub mod fan;
pub mod fixtures;
pub mod linalg;
pub mod plmap;
pub mod positivity;
pub mod rat;

pub use building::{Frame, Prevaluation};
pub use error::{Error, Incompatibility, IncompatibilityKind};
pub use fan::{Fan, Wall};
pub use linalg::Subspace;
pub use plmap::{
    compatibility_solve, compatibility_solve_seq, compatibility_solve_with, ConePiece,
    Integrality, PLMap, RayFiltration, RayFiltrationData,
};
pub use rat::{Int, Rat};

//! Tools for studying the non-m-positive dimension `ν_m(Φ)` of positive
//! linear maps between matrix algebras.
//!
//! Choi matrices follow `J(Φ) = Σ_ij E_ij ⊗ Φ(E_ij)` with the input factor
//! first, flat indices are row-major over subsystems, and subsystem indices
//! are 0-based throughout.

pub mod bounds;
pub mod error;
pub mod maps;
pub mod multipartite;
pub mod reproduce;
pub mod sdp;
pub mod search;
pub mod tensor;

pub use error::{Error, Result};
pub use maps::{catalog_map, HPMap, MapSpec};
pub use tensor::{CMat, CVec, DimVec, HermOp, Inertia, C64};

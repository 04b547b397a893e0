//! Effective elasticity tensors from embedded corrector problems.
//!
//! A heterogeneous tensor field on the unit ball `B` is embedded in an
//! infinite homogeneous medium of tensor `A`. The energy of the resulting
//! corrector problem, as a function of `A`, drives four approximations of
//! the homogenized tensor (see [`schemes`]). Energies come either from the
//! closed-form Eshelby solution ([`eshelby`]) or from a voxel finite-element
//! solver on a truncated box ([`fem`]).

pub mod concavity;
pub mod error;
pub mod eshelby;
pub mod fem;
pub mod layer_potentials;
pub mod microstructure;
pub mod par;
pub mod schemes;
pub mod tensor;
pub mod validation;

pub use error::{Error, Result};
pub use par::Exec;
pub use tensor::{
    canonical_basis, canonical_loads, iso_to_full, ElasticTensor, EllipticityBand, IsoModuli,
    SymMat,
};

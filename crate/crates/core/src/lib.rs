//! Exact diagonalization and closed-form analytics for a qubit coupled to a
//! bosonic mode through an auxiliary mode.
//!
//! Layering: [`hilbert`] (operators) → [`hamiltonians`] (models and frame
//! coefficients) → [`criticality`] (closed forms) → [`eigen`] / [`spectra`]
//! (numerics) → [`tomography`] → [`sweep`].

pub mod criticality;
pub mod eigen;
pub mod error;
pub mod hamiltonians;
pub mod hilbert;
pub mod spectra;
pub mod sweep;
pub mod tomography;

pub use criticality::{Branch, NpSolution, OrderParameterForm, PhaseLabel, SpSolution};
pub use eigen::{lowest_eigenpairs, Method, SolverOptions, SpectralResult};
pub use error::{Error, Result};
pub use hamiltonians::{A2Params, AnisotropicParams, DimensionlessCouplings, EffectiveParams, ModelParams};
pub use hilbert::{BasisDescriptor, Factor, Operator, Truncation, C64};
pub use spectra::{GroundStateResult, Model, Rescaling};

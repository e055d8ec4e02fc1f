//! Discrete boundary triples for elliptic grid models: gamma fields,
//! Dirichlet-to-Neumann maps (Q-functions), and the Krein resolvent and
//! trace identities they satisfy — all as exactly verifiable dense matrix
//! identities.
//!
//! A model is a Hermitian matrix with an interior/boundary (or
//! interior/interface/exterior) index partition. On it the crate evaluates
//! the gamma field `Γ(λ) = -(H_II - λ)^{-1} H_IB`, the Q-function
//! `Q(λ) = -(H_BB + H_BI Γ(λ))`, Stieltjes/Nevanlinna structure, and the
//! Krein formula `(A_D-λ)^{-1} - (A_N-λ)^{-1} = Γ(λ) Q(λ)^{-1} Γ(λ̄)*`
//! together with its coupled (transmission) analogue, each with residuals
//! that vanish to solver precision.

pub mod assembly;
pub mod coupling;
pub mod error;
pub mod gamma;
pub mod krein;
pub mod model;
pub mod numerics;
pub mod presets;
pub mod qfunction;
pub mod rng;
pub mod stieltjes;

pub use error::{Error, Result};
pub use gamma::GammaField;
pub use krein::{KreinReport, Site, TraceFormula};
pub use model::{Partition, PartitionedHermitian};
pub use numerics::{CMatrix, CVector, Complex64, HermitianEigen};
pub use qfunction::{BoundarySide, NevanlinnaReport, NevanlinnaSample, QFunction};
pub use stieltjes::{CharacterizationReport, StieltjesData};

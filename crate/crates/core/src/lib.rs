//! Entropy and relative entropy of quantum channels, superchannels acting on
//! them through representing maps, recovery maps, and a harness that checks
//! the associated inequalities numerically.
//!
//! Conventions used throughout:
//!
//! * A map `N: L(A) → L(B)` is stored by its unnormalized Choi operator
//!   `Ĉ_N = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` on `A ⊗ B` (input factor first).
//! * Logarithms are base 2.
//! * A pure input `|Ψ⟩ = (A_Ψ ⊗ 1) Σ_i |ii⟩` on `R ⊗ A` is stored by `A_Ψ`.

pub mod bounds;
pub mod channels;
pub mod config;
pub mod divergences;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod random;
pub mod recovery;
pub mod report;
pub mod superchannels;

pub use channels::{Channel, TeleCovariantSpec, ThermalMap};
pub use config::{OptimizerOpts, Quadrature, RunConfig, Tolerances};
pub use divergences::{DivergenceResult, PureBipartiteState};
pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use recovery::{RecoveryMap, RecoverySupermap};
pub use report::{Report, Summary, VerificationRecord};
pub use superchannels::{GeneralizedRepMap, Superchannel, TpFixedMap};

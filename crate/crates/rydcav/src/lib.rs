//! Simulator for two Rydberg atoms trapped in a pair of coupled optical
//! cavities.
//!
//! Photon hopping between the cavities creates two delocalized normal modes
//! split by `2J`. When the Rydberg pair shift `V_dd` is tuned near `±2J`, the
//! atoms undergo a two-photon transition between the collective ground state
//! `|G>` and the doubly excited state `|R>`, absorbing or emitting a photon
//! pair from one normal mode while the other stays dark. The crate builds the
//! Hamiltonian hierarchy for this system, evolves quantum states, and extracts
//! the observables behind the absorption/emission figures, the NOON-state
//! protocol, and the projective quantum filter that turns a coherent field
//! into a nonclassical one.
//!
//! Units: the cavity coupling `g` sets the frequency scale (`g = 1`), all
//! rates are dimensionless multiples of `g`, and time is measured in `1/g`.
//!
//! Basis ordering is lexicographic in `(atom1, atom2, n_a1, n_a2)` with
//! `|g> = 0`, `|r> = 1`; see [`hilbert::HilbertSpace`]. All modules share it.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod hilbert;
pub mod model;
pub mod recipes;
pub mod states;
pub mod tomography;
pub mod validate;

mod linalg;

pub use hilbert::{HilbertSpace, OperatorMatrix};
pub use model::{Branch, DerivedCouplings, SystemParams};
pub use states::QuantumState;

use thiserror::Error;

/// Errors shared across the simulator modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("photon cutoff n_max = {0} too small; the two-photon physics needs n_max >= 2")]
    CutoffTooSmall(usize),
    #[error("invalid cavity mode index {0}; expected 1 or 2")]
    InvalidMode(usize),
    #[error("invalid atom index {0}; expected 1 or 2")]
    InvalidAtom(usize),
    #[error("photon number {n} exceeds the cutoff n_max = {n_max}")]
    PhotonAboveCutoff { n: usize, n_max: usize },
    #[error("normal-mode quanta n_c1 + n_c2 = {total} exceed the cutoff n_max = {n_max}")]
    QuantaExceedCutoff { total: usize, n_max: usize },
    #[error("truncated coherent tail probability {tail:.3e} exceeds 1e-6; raise n_max")]
    CoherentTail { tail: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("single-photon detuning delta must be nonzero")]
    ZeroDetuning,
    #[error("photon hopping rate J must be nonzero")]
    ZeroHopping,
    #[error("coupling g must be positive (got {0})")]
    NonPositiveCoupling(f64),
    #[error("decay rate {name} must be nonnegative (got {value})")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("projection probability {p:.3e} is below 1e-12; the measurement branch is empty")]
    ProjectionUnderflow { p: f64 },
    #[error("state is not a pure state vector")]
    NotPure,
    #[error("time grid invalid: {0}")]
    BadGrid(String),
    #[error("step-size violation: {0}")]
    StepSize(String),
    #[error("averaging window undefined for n = {0}; the per-photon window needs n >= 1")]
    WindowUndefined(usize),
    #[error(
        "Wigner grid too small: integrated W = {integral:.6} deviates from trace by more than 0.01"
    )]
    GridTooSmall { integral: f64 },
    #[error("protocol fidelity ceiling {fidelity:.3} below 0.5; wrong parameter regime")]
    WrongRegime { fidelity: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

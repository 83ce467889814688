//! Simulator and verification harness for two-qubit Grover search in cavity QED.
//!
//! Two atoms coupled to a single cavity mode and driven by a strong classical
//! field realize, in the dispersive strong-driving regime, an effective
//! two-qubit evolution that is independent of the cavity photon number.
//! Sandwiched between single-atom Ramsey pulses, one timed interaction window
//! acts as the Grover oracle for a chosen two-atom basis state and a second
//! window acts as the inversion-about-average transform, so a single query
//! finds the marked state of the four-element search space with certainty.
//!
//! The crate builds this system three ways and checks them against each other:
//! the exact interaction-picture dynamics (numerically propagated), the
//! closed-form effective unitary, and the ideal 4x4 gate algebra.
//!
//! Modules, bottom up:
//! - [`hilbert`]: two-qubit x truncated-Fock state and operator algebra.
//! - [`models`]: physical parameters, Hamiltonians, the closed-form effective
//!   unitary, and the drive-strength quantization rules.
//! - [`propagator`]: exact unitary integration of the time-dependent dynamics.
//! - [`gates`]: ideal gate matrices and Grover pulse schedules.
//! - [`grover`]: end-to-end searches, ideal and exact, with pulse error and
//!   general cavity initial states.
//! - [`experiments`]: reproducible fidelity sweeps and convergence audits.
//! - [`cli`]: command-line front end with config files and CSV output.

pub mod cli;
pub mod experiments;
pub mod gates;
pub mod grover;
pub mod hilbert;
pub mod models;
pub mod propagator;
mod scalar;

pub use scalar::Real;

/// Complex amplitude over `f64`.
pub type C64 = num_complex::Complex<f64>;
/// Complex amplitude over `f32`.
pub type C32 = num_complex::Complex<f32>;

/// Default-precision aliases for the core domain types.
pub type StateVector64 = hilbert::StateVector<f64>;
pub type Operator64 = hilbert::Operator<f64>;
pub type DensityMatrix464 = hilbert::DensityMatrix4<f64>;
pub type PhysicalParams64 = models::PhysicalParams<f64>;
pub type IntegratorConfig64 = propagator::IntegratorConfig<f64>;
pub type PulseSchedule64 = gates::PulseSchedule<f64>;
pub type SearchResult64 = grover::SearchResult<f64>;
pub type SweepRow64 = experiments::SweepRow<f64>;

/// Crate-wide error type. Measured quantities are reported as `f64` regardless
/// of the scalar type in use.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("fock number {n} exceeds the truncation n_cut = {n_cut}")]
    FockOutOfRange { n: usize, n_cut: usize },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("state norm {norm} deviates from 1 by more than {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },
    #[error("invalid {name}: {value} (must be finite and non-negative)")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("{name} = {value} must be strictly positive here")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("invalid integrator config: {reason}")]
    InvalidIntegratorConfig { reason: String },
    #[error("time interval end {t1} precedes start {t0}")]
    InvalidInterval { t0: f64, t1: f64 },
    #[error("integration norm drift {drift:e} exceeds unitarity tolerance {tol:e}")]
    NormDrift { drift: f64, tol: f64 },
    #[error("propagator unitarity defect {defect:e} exceeds tolerance {tol:e}")]
    UnitarityDefect { defect: f64, tol: f64 },
    #[error("matrix exponential series did not converge within {max_terms} terms")]
    ExpmNoConvergence { max_terms: usize },
    #[error("truncation too small: initial cavity state needs n_cut >= {needed}, got {got}")]
    Truncation { needed: usize, got: usize },
    #[error("coherent-state tail mass {tail:e} beyond n_cut = {n_cut} exceeds {tol:e}")]
    CoherentTail { tail: f64, n_cut: usize, tol: f64 },
    #[error("pulse error must be greater than -1, got {eps}")]
    InvalidPulseError { eps: f64 },
    #[error("unknown target `{0}` (expected gg, ge, eg, or ee)")]
    UnknownTarget(String),
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

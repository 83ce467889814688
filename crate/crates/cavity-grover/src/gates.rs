//! Ideal 4x4 gate algebra and Grover pulse schedules.
//!
//! The quarter-period interaction window realizes the diffusion transform
//! directly, and the same window sandwiched between Hadamards (plus NOT
//! conjugation on atom 2 for the mixed targets) realizes each of the four
//! marking oracles. One Grover iteration is exact for a four-item search, so
//! the ideal schedule transfers the full population to the target.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::hilbert::{sigma_x, tensor, AtomLevel, Operator};
use crate::models::{
    effective_unitary_quarter, select_omega, OmegaClass, OmegaClassKind, PhysicalParams,
};
use crate::{Error, Real, Result};

/// The marked two-atom basis state. The letters name atom 1 then atom 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    GG,
    GE,
    EG,
    EE,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::EE, Target::EG, Target::GE, Target::GG];

    /// Position in the fixed |ee>, |eg>, |ge>, |gg> ordering.
    pub fn index(self) -> usize {
        match self {
            Target::EE => 0,
            Target::EG => 1,
            Target::GE => 2,
            Target::GG => 3,
        }
    }

    pub fn atoms(self) -> (AtomLevel, AtomLevel) {
        match self {
            Target::EE => (AtomLevel::E, AtomLevel::E),
            Target::EG => (AtomLevel::E, AtomLevel::G),
            Target::GE => (AtomLevel::G, AtomLevel::E),
            Target::GG => (AtomLevel::G, AtomLevel::G),
        }
    }

    /// Targets that differ between the atoms need the NOT conjugation on
    /// atom 2.
    pub fn is_mixed(self) -> bool {
        matches!(self, Target::GE | Target::EG)
    }

    /// Drive quantization class of the marking window. The window marks |gg>
    /// (h = 4m+1) or |ee> (h = 4m+3); NOT2 conjugation converts those into
    /// the mixed-target oracles without changing the class.
    pub fn oracle_class_kind(self) -> OmegaClassKind {
        match self {
            Target::GG | Target::GE => OmegaClassKind::Class1,
            Target::EE | Target::EG => OmegaClassKind::Class3,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Target::EE => "ee",
            Target::EG => "eg",
            Target::GE => "ge",
            Target::GG => "gg",
        };
        f.write_str(s)
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gg" => Ok(Target::GG),
            "ge" => Ok(Target::GE),
            "eg" => Ok(Target::EG),
            "ee" => Ok(Target::EE),
            other => Err(Error::UnknownTarget(other.to_string())),
        }
    }
}

/// Single-atom Hadamard: |g> -> (|g>+|e>)/sqrt(2), |e> -> (|g>-|e>)/sqrt(2),
/// written in the (|e>, |g>) ordering.
pub fn hadamard1<T: Real>() -> Operator<T> {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    Operator::from_fn(2, |r, c| {
        let sign = if r == 0 && c == 0 { -s } else { s };
        Complex::new(sign, T::zero())
    })
}

const H1_SIGNS: [[i8; 2]; 2] = [[-1, 1], [1, 1]];

/// Two-qubit Hadamard H tensor H. Entries are written directly as exact
/// machine halves rather than products of 1/sqrt(2), so that ideal schedule
/// replays compose without rounding.
pub fn hadamard2<T: Real>() -> Operator<T> {
    let half = T::lit(0.5);
    Operator::from_fn(4, |r, c| {
        let sign = H1_SIGNS[r / 2][c / 2] * H1_SIGNS[r % 2][c % 2];
        Complex::new(if sign > 0 { half } else { -half }, T::zero())
    })
}

/// NOT gate on atom 2 alone.
pub fn not2<T: Real>() -> Operator<T> {
    tensor(&Operator::identity(2), &sigma_x())
}

/// Inversion about the average: D_ij = 2/N - delta_ij with N = 4. The
/// quarter-period window realizes -D.
pub fn diffusion<T: Real>() -> Operator<T> {
    let half = T::lit(0.5);
    Operator::from_fn(4, |r, c| {
        Complex::new(if r == c { -half } else { half }, T::zero())
    })
}

/// The marking oracle: diagonal with -1 exactly at the target state.
pub fn oracle<T: Real>(t: Target) -> Operator<T> {
    let marked = t.index();
    Operator::from_fn(4, |r, c| {
        let v = if r != c {
            T::zero()
        } else if r == marked {
            -T::one()
        } else {
            T::one()
        };
        Complex::new(v, T::zero())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateId {
    H2,
    Not2,
}

/// One element of a pulse sequence: an idealized zero-duration single-qubit
/// operation, or a timed interaction window at a quantized drive setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseStep<T: Real> {
    IdealGate(GateId),
    InteractionWindow { duration: T, omega_class: OmegaClass },
}

/// A time-ordered pulse sequence with exactly two interaction windows.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule<T: Real> {
    steps: Vec<PulseStep<T>>,
}

impl<T: Real> PulseSchedule<T> {
    pub fn new(steps: Vec<PulseStep<T>>) -> Result<Self> {
        let mut windows = 0usize;
        for step in &steps {
            if let PulseStep::InteractionWindow { duration, .. } = step {
                if !(*duration > T::zero()) {
                    return Err(Error::InvalidParameter {
                        name: "window duration",
                        value: duration.as_f64(),
                    });
                }
                windows += 1;
            }
        }
        if windows != 2 {
            return Err(Error::InvalidParameter {
                name: "interaction window count",
                value: windows as f64,
            });
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[PulseStep<T>] {
        &self.steps
    }

    /// Sum of the interaction window durations; the single-qubit operations
    /// are treated as instantaneous.
    pub fn total_interaction_time(&self) -> T {
        self.steps
            .iter()
            .fold(T::zero(), |acc, step| match step {
                PulseStep::InteractionWindow { duration, .. } => acc + *duration,
                PulseStep::IdealGate(_) => acc,
            })
    }
}

/// Builds the search sequence for a target: preparation Hadamard, the marking
/// window sandwiched in Hadamards (conjugated by NOT2 for mixed targets), and
/// the closing diffusion window. Both windows last a quarter period pi/(4
/// lambda); their drive settings come from the quantization classes.
pub fn grover_schedule<T: Real>(
    t: Target,
    p: &PhysicalParams<T>,
) -> Result<PulseSchedule<T>> {
    p.validate_strict()?;
    let tau = T::PI() / (T::lit(4.0) * p.lambda());
    let (_, marking_class) = select_omega(p, t.oracle_class_kind(), p.h())?;
    let (_, diffusion_class) = select_omega(p, OmegaClassKind::Class1, p.h())?;
    let mut steps = vec![PulseStep::IdealGate(GateId::H2)];
    if t.is_mixed() {
        steps.push(PulseStep::IdealGate(GateId::Not2));
    }
    steps.push(PulseStep::IdealGate(GateId::H2));
    steps.push(PulseStep::InteractionWindow {
        duration: tau,
        omega_class: marking_class,
    });
    steps.push(PulseStep::IdealGate(GateId::H2));
    if t.is_mixed() {
        steps.push(PulseStep::IdealGate(GateId::Not2));
    }
    steps.push(PulseStep::InteractionWindow {
        duration: tau,
        omega_class: diffusion_class,
    });
    PulseSchedule::new(steps)
}

/// Collapses a schedule to its ideal 4x4 matrix, replacing every window by
/// the closed-form quarter-period unitary for its class. The factors are all
/// exact dyadic matrices, so the product is free of rounding.
pub fn ideal_schedule_matrix<T: Real>(schedule: &PulseSchedule<T>) -> Operator<T> {
    let mut total = Operator::identity(4);
    for step in schedule.steps() {
        let gate = match step {
            PulseStep::IdealGate(GateId::H2) => hadamard2(),
            PulseStep::IdealGate(GateId::Not2) => not2(),
            PulseStep::InteractionWindow { omega_class, .. } => {
                effective_unitary_quarter(omega_class.kind())
            }
        };
        total = gate.mul(&total);
    }
    total
}

/// Max-norm distance between U and V after aligning the global phase that
/// minimizes the Frobenius distance. Probabilities are phase-free, so gate
/// comparisons use this metric.
pub fn distance_up_to_global_phase<T: Real>(u: &Operator<T>, v: &Operator<T>) -> T {
    assert_eq!(u.dim(), v.dim(), "operator dimensions differ");
    let mut overlap = Complex::new(T::zero(), T::zero());
    for r in 0..u.dim() {
        for c in 0..u.dim() {
            overlap = overlap + u.get(r, c) * v.get(r, c).conj();
        }
    }
    if overlap.norm() == T::zero() {
        return u.max_abs_diff(v);
    }
    let phase = overlap / Complex::new(overlap.norm(), T::zero());
    u.max_abs_diff(&v.scaled(phase))
}

//! Physical parameters, Hamiltonians, and the closed-form effective unitary.
//!
//! The driven two-atom/cavity system in the interaction picture is
//!
//! ```text
//! H(t) = sum_j [ Omega (sigma_j^+ + sigma_j^-)
//!              + g (e^{-i delta t} a^dag sigma_j^- + e^{i delta t} a sigma_j^+) ]
//! ```
//!
//! In the regime Omega >> delta >> g the dynamics factors into a drive term
//! H0 = 2 Omega J_x and an effective atom-atom coupling H_e = 2 lambda J_x^2
//! with lambda = g^2 / (2 delta), giving the closed-form window unitary
//! U(b, h) = exp(-i b h J_x) exp(-i b J_x^2) with b = 2 lambda t, h = Omega / lambda.
//! The photon-number dependent Stark shifts cancel, so U acts on the atoms
//! alone; this module provides both the exact H(t) and the closed form.

use num_complex::Complex;

use crate::hilbert::{
    creation, sigma_minus, sigma_plus, sigma_x, tensor, Operator,
};
use crate::{Error, Real, Result};

/// Coupling g, detuning delta, and drive Rabi frequency Omega, all in
/// angular rad/s. Derived: lambda = g^2/(2 delta) and h = Omega/lambda.
///
/// Construction accepts non-negative values so that limiting cases (undriven,
/// resonant, uncoupled) can be propagated in tests; the search paths call
/// [`PhysicalParams::validate_strict`] first, which requires all three rates
/// to be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T: Real> {
    g: T,
    delta: T,
    omega_rabi: T,
}

impl<T: Real> PhysicalParams<T> {
    pub fn new(g: T, delta: T, omega_rabi: T) -> Result<Self> {
        for (name, v) in [("g", g), ("delta", delta), ("omega_rabi", omega_rabi)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v.as_f64(),
                });
            }
        }
        Ok(Self {
            g,
            delta,
            omega_rabi,
        })
    }

    pub fn g(&self) -> T {
        self.g
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn omega_rabi(&self) -> T {
        self.omega_rabi
    }

    /// Requires g, delta, omega_rabi all strictly positive.
    pub fn validate_strict(&self) -> Result<()> {
        for (name, v) in [
            ("g", self.g),
            ("delta", self.delta),
            ("omega_rabi", self.omega_rabi),
        ] {
            if !(v > T::zero()) {
                return Err(Error::NonPositiveParameter {
                    name,
                    value: v.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Effective coupling lambda = g^2 / (2 delta). Requires delta > 0.
    pub fn lambda(&self) -> T {
        assert!(
            self.delta > T::zero(),
            "lambda undefined for delta = 0; this path requires detuned parameters"
        );
        self.g * self.g / (T::lit(2.0) * self.delta)
    }

    /// Dimensionless drive ratio h = Omega / lambda.
    pub fn h(&self) -> T {
        self.omega_rabi / self.lambda()
    }

    /// Same coupling and detuning with a different drive strength.
    pub fn with_omega(&self, omega_rabi: T) -> Self {
        Self {
            omega_rabi,
            ..*self
        }
    }

    /// Non-fatal audit of the validity regime Omega >> delta >> g. Returns one
    /// message per violated separation; empty in the intended regime.
    pub fn regime_warnings(&self) -> Vec<String> {
        let ten = T::lit(10.0);
        let mut warnings = Vec::new();
        if self.g > T::zero() && self.delta / self.g < ten {
            warnings.push(format!(
                "delta/g = {:.3} is below 10; the dispersive elimination of the cavity degrades",
                (self.delta / self.g).as_f64()
            ));
        }
        if self.delta > T::zero() && self.omega_rabi / self.delta < ten {
            warnings.push(format!(
                "omega/delta = {:.3} is below 10; the strong-drive averaging degrades",
                (self.omega_rabi / self.delta).as_f64()
            ));
        }
        warnings
    }
}

/// Which quantization class the drive ratio h = Omega/lambda is tuned to.
/// h = 4m+1 realizes the conditional phase gate marking |gg> (and, conjugated,
/// |ge>); h = 4m+3 marks |ee> (and |eg>).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmegaClass {
    Class1 { m: u64 },
    Class3 { m: u64 },
}

impl OmegaClass {
    pub fn kind(self) -> OmegaClassKind {
        match self {
            OmegaClass::Class1 { .. } => OmegaClassKind::Class1,
            OmegaClass::Class3 { .. } => OmegaClassKind::Class3,
        }
    }

    pub fn m(self) -> u64 {
        match self {
            OmegaClass::Class1 { m } | OmegaClass::Class3 { m } => m,
        }
    }

    /// The exact integer drive ratio h.
    pub fn h_int(self) -> u64 {
        match self {
            OmegaClass::Class1 { m } => 4 * m + 1,
            OmegaClass::Class3 { m } => 4 * m + 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmegaClassKind {
    Class1,
    Class3,
}

/// Collective spin J_x = (1/2) sum_j (sigma_j^+ + sigma_j^-) on the 4-dim
/// atomic space.
pub fn jx<T: Real>() -> Operator<T> {
    let sx = sigma_x::<T>();
    let i2 = Operator::identity(2);
    tensor(&sx, &i2)
        .add(&tensor(&i2, &sx))
        .scaled(Complex::new(T::lit(0.5), T::zero()))
}

/// Drive part of the effective evolution: H0 = 2 Omega J_x.
pub fn hamiltonian_h0<T: Real>(p: &PhysicalParams<T>) -> Operator<T> {
    jx::<T>().scaled(Complex::new(T::lit(2.0) * p.omega_rabi(), T::zero()))
}

/// Effective atom-atom coupling, written in its literal sum form
/// lambda [ I + (sigma_1^+ sigma_2^+ + sigma_1^+ sigma_2^- + h.c.) ];
/// algebraically equal to 2 lambda J_x^2.
pub fn hamiltonian_he<T: Real>(p: &PhysicalParams<T>) -> Operator<T> {
    let sp = sigma_plus::<T>();
    let sm = sigma_minus::<T>();
    let flips = tensor(&sp, &sp)
        .add(&tensor(&sp, &sm))
        .add(&tensor(&sm, &sp))
        .add(&tensor(&sm, &sm));
    Operator::identity(4)
        .add(&flips)
        .scaled(Complex::new(p.lambda(), T::zero()))
}

/// Static pieces of the interaction Hamiltonian: the drive term and the
/// coupling term whose phase rotates at the detuning,
/// H(t) = drive + e^{-i delta t} v + e^{+i delta t} v^dag.
fn interaction_pieces<T: Real>(
    p: &PhysicalParams<T>,
    n_cut: usize,
) -> (Operator<T>, Operator<T>) {
    let i2 = Operator::identity(2);
    let sx = sigma_x::<T>();
    let sm = sigma_minus::<T>();
    let sx_sum = tensor(&sx, &i2).add(&tensor(&i2, &sx));
    let sm_sum = tensor(&sm, &i2).add(&tensor(&i2, &sm));
    let i_f = Operator::identity(n_cut + 1);
    let ad = creation::<T>(n_cut);
    let drive = tensor(&sx_sum, &i_f).scaled(Complex::new(p.omega_rabi(), T::zero()));
    let v = tensor(&sm_sum, &ad).scaled(Complex::new(p.g(), T::zero()));
    (drive, v)
}

/// The interaction-picture Hamiltonian at time t on the truncated composite
/// space; Hermitian by construction.
pub fn hamiltonian_interaction<T: Real>(
    t: T,
    p: &PhysicalParams<T>,
    n_cut: usize,
) -> Operator<T> {
    let (drive, v) = interaction_pieces(p, n_cut);
    let ph = Complex::from_polar(T::one(), -p.delta() * t);
    drive.add(&v.scaled(ph)).add(&v.dagger().scaled(ph.conj()))
}

/// Closed-form effective window unitary U(b, h) in the atomic basis. The fast
/// phase b h is evaluated with a compensated product so that the physically
/// large ratios h ~ 10^4 do not lose the quadrant of cos(b h).
pub fn effective_unitary<T: Real>(b: T, h: T) -> Operator<T> {
    let prod = b * h;
    let residual = b.mul_add(h, -prod);
    let (sp, cp) = prod.sin_cos();
    let cbh = cp - sp * residual;
    let sbh = sp + cp * residual;
    let eb = Complex::from_polar(T::one(), -b);
    let half = T::lit(0.5);
    let d = Complex::new(half, T::zero()) + eb.scale(half * cbh);
    let e = Complex::new(-half, T::zero()) + eb.scale(half * cbh);
    let o = eb * Complex::new(T::zero(), -half * sbh);
    Operator::from_fn(4, |r, c| {
        if r == c {
            d
        } else if r + c == 3 {
            e
        } else {
            o
        }
    })
}

/// U(b = pi/2, h) for a quantized class, with the quarter-period trig values
/// substituted exactly: cos(bh) = 0, sin(bh) = +-1, e^{-ib} = -i. All entries
/// are exact machine halves, which keeps ideal schedule replays free of
/// rounding.
pub fn effective_unitary_quarter<T: Real>(kind: OmegaClassKind) -> Operator<T> {
    let half = T::lit(0.5);
    let o = match kind {
        OmegaClassKind::Class1 => -half,
        OmegaClassKind::Class3 => half,
    };
    Operator::from_fn(4, |r, c| {
        let re = if r == c {
            half
        } else if r + c == 3 {
            -half
        } else {
            o
        };
        Complex::new(re, T::zero())
    })
}

/// Adjusts Omega to the nearest quantized ratio at or above `target_ratio`:
/// the smallest h = 4m+1 (Class1) or 4m+3 (Class3) with h >= target_ratio.
/// Rounding is always upward to preserve the strong-drive regime.
pub fn select_omega<T: Real>(
    p: &PhysicalParams<T>,
    kind: OmegaClassKind,
    target_ratio: T,
) -> Result<(PhysicalParams<T>, OmegaClass)> {
    if !(target_ratio > T::zero()) || !target_ratio.is_finite() {
        return Err(Error::InvalidParameter {
            name: "target_ratio",
            value: target_ratio.as_f64(),
        });
    }
    if !(p.delta() > T::zero()) {
        return Err(Error::NonPositiveParameter {
            name: "delta",
            value: p.delta().as_f64(),
        });
    }
    let c = match kind {
        OmegaClassKind::Class1 => 1u64,
        OmegaClassKind::Class3 => 3u64,
    };
    let excess = (target_ratio - T::from_count(c as usize)) / T::lit(4.0);
    let m = if excess <= T::zero() {
        0u64
    } else {
        excess.ceil().as_f64() as u64
    };
    let class = match kind {
        OmegaClassKind::Class1 => OmegaClass::Class1 { m },
        OmegaClassKind::Class3 => OmegaClass::Class3 { m },
    };
    let omega = T::from_count(class.h_int() as usize) * p.lambda();
    Ok((p.with_omega(omega), class))
}

/// Compressed sparse rows over the nonzero entries of a dense operator; the
/// workhorse of the matrix-free Hamiltonian action (the interaction
/// Hamiltonian has ~5 nonzeros per row, so dense products would waste most of
/// the integrator's time).
pub(crate) struct Csr<T: Real> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex<T>>,
}

impl<T: Real> Csr<T> {
    pub(crate) fn from_dense(op: &Operator<T>) -> Self {
        let dim = op.dim();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for c in 0..dim {
                let z = op.get(r, c);
                if z.norm_sqr() != T::zero() {
                    cols.push(c);
                    vals.push(z);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    /// y += scale * (A x)
    #[inline]
    pub(crate) fn apply_scaled_add(
        &self,
        x: &[Complex<T>],
        scale: Complex<T>,
        y: &mut [Complex<T>],
    ) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            if lo == hi {
                continue;
            }
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in lo..hi {
                acc = acc + self.vals[k] * x[self.cols[k]];
            }
            y[r] = y[r] + scale * acc;
        }
    }
}

/// Prebuilt sparse split of H(t) for fast repeated application inside the
/// integrator: H(t) x = drive x + e^{-i delta t} (v x) + e^{+i delta t} (v^dag x).
pub(crate) struct InteractionParts<T: Real> {
    pub(crate) dim: usize,
    delta: T,
    drive: Csr<T>,
    v: Csr<T>,
    vdag: Csr<T>,
}

impl<T: Real> InteractionParts<T> {
    pub(crate) fn new(p: &PhysicalParams<T>, n_cut: usize) -> Self {
        let (drive, v) = interaction_pieces(p, n_cut);
        Self {
            dim: drive.dim(),
            delta: p.delta(),
            drive: Csr::from_dense(&drive),
            vdag: Csr::from_dense(&v.dagger()),
            v: Csr::from_dense(&v),
        }
    }

    /// y = H(t) x
    pub(crate) fn apply_into(&self, t: T, x: &[Complex<T>], y: &mut [Complex<T>]) {
        let zero = Complex::new(T::zero(), T::zero());
        y.fill(zero);
        self.drive
            .apply_scaled_add(x, Complex::new(T::one(), T::zero()), y);
        let ph = Complex::from_polar(T::one(), -self.delta * t);
        self.v.apply_scaled_add(x, ph, y);
        self.vdag.apply_scaled_add(x, ph.conj(), y);
    }
}

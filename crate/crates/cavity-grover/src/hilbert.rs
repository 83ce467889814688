//! Composite Hilbert-space algebra for two atoms and one truncated cavity mode.
//!
//! Basis ordering: atomic states |ee>, |eg>, |ge>, |gg> tensored with Fock
//! states |0> .. |n_cut>, Fock index innermost. The flat index of |a1 a2, n>
//! is `(2 code(a1) + code(a2)) (n_cut + 1) + n` with code(e) = 0, code(g) = 1,
//! so atomic gates act block-wise and the cavity ladder acts within blocks.

use num_complex::Complex;

use crate::{Error, Real, Result};

/// Norm tolerance for checked state construction.
pub const NORM_TOL: f64 = 1e-9;

/// Level of a single atom: excited |e> or ground |g>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomLevel {
    E,
    G,
}

impl AtomLevel {
    /// Basis code: e -> 0, g -> 1.
    pub fn code(self) -> usize {
        match self {
            AtomLevel::E => 0,
            AtomLevel::G => 1,
        }
    }
}

/// Index of the atomic configuration (a1, a2) in the |ee>,|eg>,|ge>,|gg> order.
pub fn atomic_index(a1: AtomLevel, a2: AtomLevel) -> usize {
    2 * a1.code() + a2.code()
}

/// Flat basis index of |a1 a2, n> for truncation `n_cut`.
pub fn basis_index(a1: AtomLevel, a2: AtomLevel, n: usize, n_cut: usize) -> Result<usize> {
    if n > n_cut {
        return Err(Error::FockOutOfRange { n, n_cut });
    }
    Ok(atomic_index(a1, a2) * (n_cut + 1) + n)
}

/// Normalized state of the two-atom/cavity system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    amp: Vec<Complex<T>>,
    n_cut: usize,
}

impl<T: Real> StateVector<T> {
    /// Builds a state from amplitudes, checking length and normalization.
    pub fn new(amp: Vec<Complex<T>>, n_cut: usize) -> Result<Self> {
        let dim = 4 * (n_cut + 1);
        if amp.len() != dim {
            return Err(Error::DimensionMismatch {
                context: format!("state length {} != 4 (n_cut + 1) = {}", amp.len(), dim),
            });
        }
        let state = Self { amp, n_cut };
        let norm = state.norm();
        if (norm - T::one()).abs() > T::lit(NORM_TOL) {
            return Err(Error::NotNormalized {
                norm: norm.as_f64(),
                tol: NORM_TOL,
            });
        }
        Ok(state)
    }

    /// Builds without checks; for internal evolution steps whose norm is
    /// audited separately.
    pub(crate) fn from_raw(amp: Vec<Complex<T>>, n_cut: usize) -> Self {
        debug_assert_eq!(amp.len(), 4 * (n_cut + 1));
        Self { amp, n_cut }
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amp
    }

    /// Amplitude of the basis state |a1 a2, n>.
    pub fn amplitude(&self, a1: AtomLevel, a2: AtomLevel, n: usize) -> Result<Complex<T>> {
        Ok(self.amp[basis_index(a1, a2, n, self.n_cut)?])
    }

    pub fn norm(&self) -> T {
        self.amp
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * *b
            })
    }

    /// Populations of the four atomic configurations, cavity traced out.
    pub fn atomic_populations(&self) -> [T; 4] {
        let per = self.n_cut + 1;
        let mut p = [T::zero(); 4];
        for (block, slot) in p.iter_mut().enumerate() {
            for n in 0..per {
                *slot += self.amp[block * per + n].norm_sqr();
            }
        }
        p
    }

    /// Applies an operator of matching dimension. The caller is expected to
    /// pass a unitary; no renormalization is performed.
    pub fn apply(&self, op: &Operator<T>) -> Result<Self> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: format!("operator dim {} vs state dim {}", op.dim(), self.dim()),
            });
        }
        Ok(Self::from_raw(op.matvec(&self.amp), self.n_cut))
    }
}

/// Dense complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<T: Real> {
    dim: usize,
    data: Vec<Complex<T>>, // row-major, entry (r, c) at r * dim + c
}

impl<T: Real> Operator<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.data[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        op
    }

    /// Builds entrywise from a closure over (row, col).
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[r * self.dim + c] = v;
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![Complex::new(T::zero(), T::zero()); self.dim];
        for r in 0..self.dim {
            let row = &self.data[r * self.dim..(r + 1) * self.dim];
            let mut acc = Complex::new(T::zero(), T::zero());
            for (a, b) in row.iter().zip(x.iter()) {
                acc = acc + *a * *b;
            }
            y[r] = acc;
        }
        y
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for c in 0..d {
                    out.data[r * d + c] = out.data[r * d + c] + a * rhs.data[k * d + c];
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        Self::from_fn(d, |r, c| self.data[c * d + r].conj())
    }

    pub fn scaled(&self, k: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| *z * k).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scaled(Complex::new(-T::one(), T::zero())))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest entrywise difference to another operator.
    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(rhs.data.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    /// Unitarity audit: max-norm of U^dag U - I.
    pub fn unitarity_defect(&self) -> T {
        let udu = self.dagger().mul(self);
        let mut defect = T::zero();
        for r in 0..self.dim {
            for c in 0..self.dim {
                let expect = if r == c { T::one() } else { T::zero() };
                let d = (udu.get(r, c) - Complex::new(expect, T::zero())).norm();
                defect = defect.max(d);
            }
        }
        defect
    }

    /// Hermiticity audit: max-norm of A - A^dag.
    pub fn hermiticity_defect(&self) -> T {
        let mut defect = T::zero();
        for r in 0..self.dim {
            for c in 0..self.dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                defect = defect.max(d);
            }
        }
        defect
    }
}

/// Kronecker product with A's index slowest: (A tensor B)[(i,k),(j,l)] = A[i,j] B[k,l].
pub fn tensor<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Operator<T> {
    let (da, db) = (a.dim(), b.dim());
    Operator::from_fn(da * db, |r, c| {
        a.get(r / db, c / db) * b.get(r % db, c % db)
    })
}

/// Lifts a 4x4 atomic operator to the full space: op4 tensor I_{n_cut+1}.
pub fn embed_atomic<T: Real>(op4: &Operator<T>, n_cut: usize) -> Result<Operator<T>> {
    if op4.dim() != 4 {
        return Err(Error::DimensionMismatch {
            context: format!("embed_atomic expects a 4x4 operator, got {}", op4.dim()),
        });
    }
    Ok(tensor(op4, &Operator::identity(n_cut + 1)))
}

/// Reduced 4x4 atomic density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4<T: Real> {
    data: [Complex<T>; 16],
}

impl<T: Real> DensityMatrix4<T> {
    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * 4 + j]
    }

    pub fn trace(&self) -> Complex<T> {
        self.entry(0, 0) + self.entry(1, 1) + self.entry(2, 2) + self.entry(3, 3)
    }

    /// Outcome probabilities of state-selective detection, ordered ee, eg, ge, gg.
    pub fn diagonal(&self) -> [T; 4] {
        [
            self.entry(0, 0).re,
            self.entry(1, 1).re,
            self.entry(2, 2).re,
            self.entry(3, 3).re,
        ]
    }

    /// Checks the reduced-state invariants: unit trace, hermiticity, and
    /// non-negative diagonal (a proxy for positivity adequate here because the
    /// matrix is formed as a Gram matrix).
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - T::one()).abs() > T::lit(1e-9) || tr.im.abs() > T::lit(1e-9) {
            return Err(Error::NotNormalized {
                norm: tr.re.as_f64(),
                tol: 1e-9,
            });
        }
        for i in 0..4 {
            for j in 0..4 {
                let d = (self.entry(i, j) - self.entry(j, i).conj()).norm();
                if d > T::lit(1e-10) {
                    return Err(Error::DimensionMismatch {
                        context: format!("reduced state not Hermitian: defect {}", d.as_f64()),
                    });
                }
            }
        }
        for i in 0..4 {
            if self.entry(i, i).re < -T::lit(1e-9) {
                return Err(Error::DimensionMismatch {
                    context: format!("negative population at {}", i),
                });
            }
        }
        Ok(())
    }
}

/// Traces out the cavity mode: rho[i][j] = sum_n amp[(i,n)] conj(amp[(j,n)]).
pub fn partial_trace_field<T: Real>(state: &StateVector<T>) -> DensityMatrix4<T> {
    let per = state.n_cut() + 1;
    let amp = state.amplitudes();
    let mut data = [Complex::new(T::zero(), T::zero()); 16];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex::new(T::zero(), T::zero());
            for n in 0..per {
                acc = acc + amp[i * per + n] * amp[j * per + n].conj();
            }
            data[i * 4 + j] = acc;
        }
    }
    DensityMatrix4 { data }
}

/// Raising operator sigma^+ = |e><g| of one atom.
pub fn sigma_plus<T: Real>() -> Operator<T> {
    let mut op = Operator::zeros(2);
    op.set(0, 1, Complex::new(T::one(), T::zero()));
    op
}

/// Lowering operator sigma^- = |g><e| of one atom.
pub fn sigma_minus<T: Real>() -> Operator<T> {
    let mut op = Operator::zeros(2);
    op.set(1, 0, Complex::new(T::one(), T::zero()));
    op
}

/// Pauli x of one atom, sigma^+ + sigma^-.
pub fn sigma_x<T: Real>() -> Operator<T> {
    sigma_plus::<T>().add(&sigma_minus())
}

/// Pauli z of one atom, |e><e| - |g><g|.
pub fn sigma_z<T: Real>() -> Operator<T> {
    let mut op = Operator::zeros(2);
    op.set(0, 0, Complex::new(T::one(), T::zero()));
    op.set(1, 1, Complex::new(-T::one(), T::zero()));
    op
}

/// Cavity annihilation operator on the truncated Fock space: a|n> = sqrt(n)|n-1>.
pub fn annihilation<T: Real>(n_cut: usize) -> Operator<T> {
    let mut op = Operator::zeros(n_cut + 1);
    for n in 1..=n_cut {
        op.set(n - 1, n, Complex::new(T::from_count(n).sqrt(), T::zero()));
    }
    op
}

/// Cavity creation operator truncated at n_cut.
pub fn creation<T: Real>(n_cut: usize) -> Operator<T> {
    annihilation::<T>(n_cut).dagger()
}

/// Total excitation number sum_j sigma_j^+ sigma_j^- + a^dag a on the full
/// space; diagonal in the product basis.
pub fn excitation_number<T: Real>(n_cut: usize) -> Operator<T> {
    let per = n_cut + 1;
    Operator::from_fn(4 * per, |r, c| {
        if r != c {
            return Complex::new(T::zero(), T::zero());
        }
        let block = r / per;
        let n = r % per;
        let excited = 2 - block.count_ones() as usize;
        Complex::new(T::from_count(excited + n), T::zero())
    })
}

/// Basis state |a1 a2, n> as a full-space unit vector.
pub fn fock_state<T: Real>(
    a1: AtomLevel,
    a2: AtomLevel,
    n: usize,
    n_cut: usize,
) -> Result<StateVector<T>> {
    let idx = basis_index(a1, a2, n, n_cut)?;
    let mut amp = vec![Complex::new(T::zero(), T::zero()); 4 * (n_cut + 1)];
    amp[idx] = Complex::new(T::one(), T::zero());
    Ok(StateVector::from_raw(amp, n_cut))
}

/// Thermal photon-number weights p_n proportional to nbar^n / (1+nbar)^(n+1),
/// renormalized over the truncation 0..=n_cut.
pub fn thermal_weights<T: Real>(nbar: T, n_cut: usize) -> Result<Vec<T>> {
    if !(nbar >= T::zero()) || !nbar.is_finite() {
        return Err(Error::InvalidParameter {
            name: "nbar",
            value: nbar.as_f64(),
        });
    }
    let ratio = nbar / (T::one() + nbar);
    let mut w = Vec::with_capacity(n_cut + 1);
    let mut cur = T::one() / (T::one() + nbar);
    for _ in 0..=n_cut {
        w.push(cur);
        cur = cur * ratio;
    }
    let total = w.iter().fold(T::zero(), |a, b| a + *b);
    for v in &mut w {
        *v = *v / total;
    }
    Ok(w)
}

/// Atoms in |a1 a2>, cavity in the coherent state |alpha> truncated at n_cut.
/// Errors if the discarded tail mass exceeds `tail_tol`; the retained
/// amplitudes are renormalized.
pub fn coherent_state<T: Real>(
    a1: AtomLevel,
    a2: AtomLevel,
    alpha: Complex<T>,
    n_cut: usize,
    tail_tol: T,
) -> Result<StateVector<T>> {
    let per = n_cut + 1;
    // c_n = exp(-|alpha|^2 / 2) alpha^n / sqrt(n!), built iteratively
    let mut coeff = Vec::with_capacity(per);
    let c0 = (-alpha.norm_sqr() / T::lit(2.0)).exp();
    let mut cur = Complex::new(c0, T::zero());
    for n in 0..per {
        coeff.push(cur);
        cur = cur * alpha / Complex::new(T::from_count(n + 1).sqrt(), T::zero());
    }
    let kept: T = coeff.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    let tail = T::one() - kept;
    if tail > tail_tol {
        return Err(Error::CoherentTail {
            tail: tail.as_f64(),
            n_cut,
            tol: tail_tol.as_f64(),
        });
    }
    let scale = Complex::new(T::one() / kept.sqrt(), T::zero());
    let mut amp = vec![Complex::new(T::zero(), T::zero()); 4 * per];
    let block = atomic_index(a1, a2);
    for (n, c) in coeff.iter().enumerate() {
        amp[block * per + n] = *c * scale;
    }
    Ok(StateVector::from_raw(amp, n_cut))
}

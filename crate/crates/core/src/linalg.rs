//! Dense complex matrices, density operators and the few spectral routines the
//! solvers need.
//!
//! Two-level basis convention: index 0 is the excited state |e⟩ and index 1 the
//! ground state |g⟩, so `σ_z = diag(+1, −1)` and `σ_− = |g⟩⟨e|`.

use std::fmt;
use std::ops::{Add, AddAssign, Deref, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square, dense, row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        ComplexMatrix { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows; fails unless the rows form a non-empty square
    /// array of finite numbers.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::usage("matrix must have at least one row"));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::usage("matrix rows must form a square array"));
        }
        let data: Vec<C64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|z| !z.is_finite()) {
            return Err(Error::usage("matrix entries must be finite"));
        }
        Ok(ComplexMatrix { dim, data })
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        ComplexMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        ComplexMatrix { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |m_ij − conj(m_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                err = err.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Largest entrywise difference to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    fn check_same_dim(&self, other: &Self, op: &str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::usage(format!(
                "{op}: dimension mismatch ({} vs {})",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let b = &rhs.data[k * n..(k + 1) * n];
                for (o, bv) in row.iter_mut().zip(b) {
                    *o += a * bv;
                }
            }
        }
        ComplexMatrix { dim: n, data: out }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> =
                (0..self.dim).map(|j| format!("{:.6}", self[(i, j)])).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, s: C64) -> ComplexMatrix {
        self.scale(s)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, s: f64) -> ComplexMatrix {
        self.scale_real(s)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sum");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix difference");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// `ab − ba`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.check_same_dim(b, "commutator")?;
    Ok(&(a * b) - &(b * a))
}

/// `ab + ba`.
pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.check_same_dim(b, "anticommutator")?;
    Ok(&(a * b) + &(b * a))
}

// Infallible variant for callers that have already validated dimensions.
pub(crate) fn comm(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    &(a * b) - &(b * a)
}

pub mod pauli {
    use super::*;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_raw(2, vec![ZERO, ONE, ONE, ZERO])
    }

    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_raw(2, vec![ZERO, -I, I, ZERO])
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_raw(2, vec![ONE, ZERO, ZERO, -ONE])
    }

    /// `σ_+ = |e⟩⟨g|`.
    pub fn sigma_plus() -> ComplexMatrix {
        ComplexMatrix::from_raw(2, vec![ZERO, ONE, ZERO, ZERO])
    }

    /// `σ_− = |g⟩⟨e|`.
    pub fn sigma_minus() -> ComplexMatrix {
        ComplexMatrix::from_raw(2, vec![ZERO, ZERO, ONE, ZERO])
    }
}

/// Harmonic-oscillator operators on the lowest `n` Fock states (ħ = m = 1).
pub mod oscillator {
    use super::*;

    pub fn annihilation(n: usize) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(n);
        for k in 1..n {
            a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
        }
        a
    }

    /// `q = (a + a†)/√2`.
    pub fn position(n: usize) -> ComplexMatrix {
        let a = annihilation(n);
        (&a + &a.dagger()).scale_real(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// `p = i(a† − a)/√2`.
    pub fn momentum(n: usize) -> ComplexMatrix {
        let a = annihilation(n);
        (&a.dagger() - &a).scale(I * std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Fock amplitudes of the coherent state |α⟩, truncated to `n` levels.
    pub fn coherent_amplitudes(alpha: C64, n: usize) -> Vec<C64> {
        let mut amps = Vec::with_capacity(n);
        let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for k in 0..n {
            amps.push(c);
            c = c * alpha / ((k + 1) as f64).sqrt();
        }
        amps
    }
}

/// Hermitian, unit-trace matrix. Positivity is deliberately not checked.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;

    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::usage("density operator has non-finite entries"));
        }
        let herm = matrix.hermiticity_error();
        if herm > Self::HERMITICITY_TOL {
            return Err(Error::usage(format!("density operator is not Hermitian (error {herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::usage(format!("density operator trace is {tr}, expected 1")));
        }
        Ok(DensityOperator { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || (norm - 1.0).abs() > 1e-10 {
            return Err(Error::usage(format!("state vector must be normalized (|ψ|² = {norm})")));
        }
        Self::new(ComplexMatrix::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator { matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    /// `½(I + x σ_x + y σ_y + z σ_z)`; the Bloch vector may be longer than one.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Self {
        let m = ComplexMatrix::from_raw(
            2,
            vec![
                C64::new(0.5 * (1.0 + z), 0.0),
                C64::new(0.5 * x, -0.5 * y),
                C64::new(0.5 * x, 0.5 * y),
                C64::new(0.5 * (1.0 - z), 0.0),
            ],
        );
        DensityOperator { matrix: m }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

impl Deref for DensityOperator {
    type Target = ComplexMatrix;
    fn deref(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Eigenvalues (ascending) and matching eigenvectors (columns of the returned
/// matrix) of a Hermitian matrix, by cyclic complex Jacobi rotations.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    const MAX_SWEEPS: usize = 50;

    if !m.is_finite() {
        return Err(Error::usage("eigenvalue input has non-finite entries"));
    }
    let scale = m.max_abs().max(1.0);
    let herm = m.hermiticity_error();
    if herm > 1e-8 * scale {
        return Err(Error::usage(format!("eigenvalue input is not Hermitian (error {herm:.3e})")));
    }

    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    let off_target = (f64::EPSILON * norm).powi(2);

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s
    };

    let mut converged = off_norm(&a) <= off_target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                // Unitary U = diag-phase · real rotation, chosen so (U†AU)_pq = 0.
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let ph_conj = phase.conj();

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * ph_conj * s;
                    a[(k, q)] = akp * s + akq * ph_conj * c;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ph_conj * s;
                    v[(k, q)] = vkp * s + vkq * ph_conj * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
        converged = off_norm(&a) <= off_target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |row, col| v[(row, order[col])]);
    Ok((values, vectors))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(m).map(|(values, _)| values)
}

/// `½ Σ |λ_i(r1 − r2)|`.
pub fn trace_distance(r1: &DensityOperator, r2: &DensityOperator) -> Result<f64> {
    r1.check_same_dim(r2, "trace_distance")?;
    let diff = r1.matrix() - r2.matrix();
    // Summing sorted moduli makes the result exactly symmetric in (r1, r2).
    let mut moduli: Vec<f64> = hermitian_eigenvalues(&diff)?.iter().map(|l| l.abs()).collect();
    moduli.sort_by(f64::total_cmp);
    Ok(0.5 * moduli.iter().sum::<f64>())
}

/// `(Tr σ_x ρ, Tr σ_y ρ, Tr σ_z ρ)` for a two-level operator.
pub fn bloch_vector(r: &ComplexMatrix) -> Result<[f64; 3]> {
    if r.dim() != 2 {
        return Err(Error::usage(format!("Bloch vector needs a 2x2 operator, got {}x{}", r.dim(), r.dim())));
    }
    Ok([
        r.trace_product(&pauli::sigma_x()).re,
        r.trace_product(&pauli::sigma_y()).re,
        r.trace_product(&pauli::sigma_z()).re,
    ])
}

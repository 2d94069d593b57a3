//! Right-hand sides `dρ/dt` of the Markov and post-Markov master equations.
//!
//! With a single coupling operator `L` (which carries the coupling strength)
//! and coefficients `g0, g1, g2` from [`crate::bath`], the generic generator is
//!
//! ```text
//! ρ̇ = −i[H, ρ]
//!     + g0 [Lρ, L†]                 + H.c.
//!     + i g1 [L†, [H, L] ρ]         + H.c.
//!     + g2 [L†, [L†, L] L ρ]        + H.c.
//! ```
//!
//! The first dissipative line is placed so that `Im g0` produces a level shift
//! `−i γ Im g0 [L†L, ρ]`; for a real kernel the placement is immaterial.

use crate::bath::{self, CoefficientSet, CorrelationKernel};
use crate::error::{Error, Result};
use crate::linalg::{comm, pauli, ComplexMatrix, C64, I};

/// Hermiticity tolerance for system Hamiltonians.
const HERMITIAN_TOL: f64 = 1e-10;

/// Hamiltonian and coupling operator of a finite-dimensional open system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    h: ComplexMatrix,
    l: ComplexMatrix,
}

impl SystemSpec {
    pub fn new(h: ComplexMatrix, l: ComplexMatrix) -> Result<Self> {
        if h.dim() != l.dim() {
            return Err(Error::usage(format!("H is {}-dimensional but L is {}-dimensional", h.dim(), l.dim())));
        }
        if !h.is_finite() || !l.is_finite() {
            return Err(Error::usage("H and L must be finite"));
        }
        let herr = h.hermiticity_error();
        if herr > HERMITIAN_TOL {
            return Err(Error::usage(format!("Hamiltonian is not Hermitian (error {herr:.3e})")));
        }
        Ok(SystemSpec { h, l })
    }

    /// Damped two-level atom: `H = (ω/2)σ_z`, `L = √γ σ_−`.
    pub fn tls(omega: f64, gamma: f64) -> Result<Self> {
        check_real("omega", omega)?;
        check_rate(gamma)?;
        Self::new(pauli::sigma_z().scale_real(omega / 2.0), pauli::sigma_minus().scale_real(gamma.sqrt()))
    }

    /// Spin-boson model: `H = −(ω/2)σ_x + (Ω/2)σ_z`, `L = √γ σ_z`.
    pub fn spin_boson(omega: f64, bias: f64, gamma: f64) -> Result<Self> {
        check_real("omega", omega)?;
        check_real("Omega", bias)?;
        check_rate(gamma)?;
        let h = &pauli::sigma_x().scale_real(-omega / 2.0) + &pauli::sigma_z().scale_real(bias / 2.0);
        Self::new(h, pauli::sigma_z().scale_real(gamma.sqrt()))
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn l(&self) -> &ComplexMatrix {
        &self.l
    }

    fn check_state(&self, rho: &ComplexMatrix) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::usage(format!(
                "state is {}-dimensional but the system is {}-dimensional",
                rho.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

fn check_real(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!("{name} must be finite, got {v}")))
    }
}

fn check_rate(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("gamma must be non-negative and finite, got {gamma}")))
    }
}

fn check_two_level(rho: &ComplexMatrix) -> Result<()> {
    if rho.dim() != 2 {
        return Err(Error::usage(format!("two-level generator needs a 2x2 state, got {}", rho.dim())));
    }
    Ok(())
}

fn check_coefficients(c: &CoefficientSet) -> Result<()> {
    if c.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!("non-finite coefficients at t = {}", c.t)))
    }
}

/// First and second moments of an oscillator state (`ħ = 1`, unit mass).
///
/// `sqp` is the symmetrized covariance `½⟨{q,p}⟩ − ⟨q⟩⟨p⟩`. The same struct
/// holds time derivatives of the moments, which need not be positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianState {
    pub mq: f64,
    pub mp: f64,
    pub sqq: f64,
    pub spp: f64,
    pub sqp: f64,
}

impl GaussianState {
    /// Validated state; the uncertainty relation is not enforced.
    pub fn new(mq: f64, mp: f64, sqq: f64, spp: f64, sqp: f64) -> Result<Self> {
        let s = GaussianState { mq, mp, sqq, spp, sqp };
        if !s.is_finite() {
            return Err(Error::usage("Gaussian moments must be finite"));
        }
        if !(sqq > 0.0 && spp > 0.0) {
            return Err(Error::usage(format!("variances must be positive, got sqq = {sqq}, spp = {spp}")));
        }
        Ok(s)
    }

    pub fn vacuum() -> Self {
        GaussianState { mq: 0.0, mp: 0.0, sqq: 0.5, spp: 0.5, sqp: 0.0 }
    }

    pub fn coherent(mq: f64, mp: f64) -> Self {
        GaussianState { mq, mp, ..Self::vacuum() }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.mq, self.mp, self.sqq, self.spp, self.sqp]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        GaussianState { mq: a[0], mp: a[1], sqq: a[2], spp: a[3], sqp: a[4] }
    }
}

/// Dynamical state: a density matrix or a set of Gaussian moments.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Matrix(ComplexMatrix),
    Gaussian(GaussianState),
}

impl State {
    /// Number of real coordinates.
    pub fn len(&self) -> usize {
        match self {
            State::Matrix(m) => 2 * m.dim() * m.dim(),
            State::Gaussian(_) => 5,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Real coordinates: interleaved `(re, im)` of the row-major matrix, or
    /// the five moments.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.write_coords(&mut out);
        out
    }

    pub fn write_coords(&self, out: &mut [f64]) {
        match self {
            State::Matrix(m) => {
                for (pair, z) in out.chunks_exact_mut(2).zip(m.as_slice()) {
                    pair[0] = z.re;
                    pair[1] = z.im;
                }
            }
            State::Gaussian(g) => out.copy_from_slice(&g.to_array()),
        }
    }

    /// State of the same shape as `self` holding `coords`.
    pub fn with_coords(&self, coords: &[f64]) -> State {
        assert_eq!(coords.len(), self.len(), "coordinate length mismatch");
        match self {
            State::Matrix(m) => {
                let data = coords.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
                State::Matrix(ComplexMatrix::from_raw(m.dim(), data))
            }
            State::Gaussian(_) => {
                State::Gaussian(GaussianState::from_array([coords[0], coords[1], coords[2], coords[3], coords[4]]))
            }
        }
    }

    pub fn as_matrix(&self) -> Option<&ComplexMatrix> {
        match self {
            State::Matrix(m) => Some(m),
            State::Gaussian(_) => None,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianState> {
        match self {
            State::Gaussian(g) => Some(g),
            State::Matrix(_) => None,
        }
    }
}

/// `X + X†`.
fn plus_hc(x: &ComplexMatrix) -> ComplexMatrix {
    x + &x.dagger()
}

/// Markov (Lindblad) generator `−i[H,ρ] + ½([L, ρL†] + [Lρ, L†])`.
pub fn lindblad_rhs(sys: &SystemSpec, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    sys.check_state(rho)?;
    let (h, l) = (&sys.h, &sys.l);
    let ld = l.dagger();
    let mut out = comm(h, rho).scale(-I);
    let rho_ld = rho * &ld;
    let l_rho = l * rho;
    out += &(&comm(l, &rho_ld) + &comm(&l_rho, &ld)).scale_real(0.5);
    Ok(out)
}

/// The four lines of the generic post-Markov generator, each Hermitian.
#[derive(Clone, Debug)]
pub struct PostMarkovTerms {
    pub hamiltonian: ComplexMatrix,
    pub g0_line: ComplexMatrix,
    pub g1_line: ComplexMatrix,
    pub g2_line: ComplexMatrix,
}

impl PostMarkovTerms {
    pub fn sum(&self) -> ComplexMatrix {
        let mut out = self.hamiltonian.clone();
        out += &self.g0_line;
        out += &self.g1_line;
        out += &self.g2_line;
        out
    }
}

pub fn post_markov_terms(sys: &SystemSpec, c: &CoefficientSet, rho: &ComplexMatrix) -> Result<PostMarkovTerms> {
    sys.check_state(rho)?;
    check_coefficients(c)?;
    let (h, l) = (&sys.h, &sys.l);
    let ld = l.dagger();
    let l_rho = l * rho;

    let hamiltonian = comm(h, rho).scale(-I);
    let g0_line = plus_hc(&comm(&l_rho, &ld).scale(c.g0));
    let h_l_rho = &comm(h, l) * rho;
    let g1_line = plus_hc(&comm(&ld, &h_l_rho).scale(I * c.g1));
    let ldl = comm(&ld, l);
    let g2_line = plus_hc(&comm(&ld, &(&ldl * &l_rho)).scale(c.g2));

    Ok(PostMarkovTerms { hamiltonian, g0_line, g1_line, g2_line })
}

/// Generic post-Markov generator for arbitrary `H`, `L`.
pub fn post_markov_rhs(sys: &SystemSpec, c: &CoefficientSet, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(post_markov_terms(sys, c, rho)?.sum())
}

/// Post-Markov generator of the damped two-level atom (`H = (ω/2)σ_z`,
/// `L = √γ σ_−`), written in Lindblad form:
///
/// ```text
/// ρ̇ = −i(ω/2)[σ_z, ρ] − iΔ[σ_+σ_−, ρ] + Γ(2σ_−ρσ_+ − {σ_+σ_−, ρ})
/// Δ = ωγ Re g1 + γ Im g0 + γ² Im g2
/// Γ = γ Re g0 + γ² Re g2 − ωγ Im g1
/// ```
///
/// For a real kernel `Δ = ωγ g1` and `Γ = γ(g0 + γ g2)`.
pub fn tls_post_markov_rhs(omega: f64, gamma: f64, c: &CoefficientSet, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_two_level(rho)?;
    check_coefficients(c)?;
    let shift = omega * gamma * c.g1.re + gamma * c.g0.im + gamma * gamma * c.g2.im;
    let rate = gamma * c.g0.re + gamma * gamma * c.g2.re - omega * gamma * c.g1.im;

    // Entrywise in the basis (|e⟩, |g⟩), where σ_+σ_− = |e⟩⟨e|.
    let (ree, reg, rge) = (rho[(0, 0)], rho[(0, 1)], rho[(1, 0)]);
    let decay = ree * (2.0 * rate);
    let coherence = C64::new(-rate, -(omega + shift));
    let mut out = ComplexMatrix::zeros(2);
    out[(0, 0)] = -decay;
    out[(1, 1)] = decay;
    out[(0, 1)] = coherence * reg;
    out[(1, 0)] = coherence.conj() * rge;
    Ok(out)
}

/// Post-Markov generator of the spin-boson model
/// (`H = −(ω/2)σ_x + (Ω/2)σ_z`, `L = √γ σ_z`):
///
/// ```text
/// ρ̇ = −i[H, ρ] + (γ g0 σ_zρσ_z − γ g0 ρ + H.c.) + (iωγ g1 σ_xρ + ωγ g1 σ_yρσ_z + H.c.)
/// ```
pub fn spin_boson_rhs(omega: f64, bias: f64, gamma: f64, c: &CoefficientSet, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_two_level(rho)?;
    check_coefficients(c)?;
    let (sx, sy, sz) = (pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z());
    let h = &sx.scale_real(-omega / 2.0) + &sz.scale_real(bias / 2.0);

    let a = c.g0 * gamma;
    let b = c.g1 * (omega * gamma);
    let mut x = (&(&sz * rho) * &sz).scale(a);
    x -= &rho.scale(a);
    x += &(&sx * rho).scale(I * b);
    x += &(&(&sy * rho) * &sz).scale(b);

    let mut out = comm(&h, rho).scale(-I);
    out += &plus_hc(&x);
    Ok(out)
}

/// Moment equations of quantum Brownian motion in `V(q) = ½ω0²q²` with
/// `L = √γ q`. With `Ω² = ω0² + 2γ Im g0`:
///
/// ```text
/// d⟨q⟩/dt = ⟨p⟩
/// d⟨p⟩/dt = −Ω²⟨q⟩ + 2γ Im g1 ⟨p⟩
/// dsqq/dt = 2 sqp
/// dspp/dt = −2Ω² sqp + 4γ Im g1 spp + 2γ Re g0
/// dsqp/dt = spp − Ω² sqq + 2γ Im g1 sqp + γ Re g1
/// ```
pub fn qbm_moment_rhs(omega0: f64, gamma: f64, c: &CoefficientSet, s: &GaussianState) -> Result<GaussianState> {
    if !s.is_finite() {
        return Err(Error::usage("non-finite Gaussian state"));
    }
    check_coefficients(c)?;
    let w2 = omega0 * omega0 + 2.0 * gamma * c.g0.im;
    let damp = 2.0 * gamma * c.g1.im;
    Ok(GaussianState {
        mq: s.mp,
        mp: -w2 * s.mq + damp * s.mp,
        sqq: 2.0 * s.sqp,
        spp: -2.0 * w2 * s.sqp + 2.0 * damp * s.spp + 2.0 * gamma * c.g0.re,
        sqp: s.spp - w2 * s.sqq + damp * s.sqp + gamma * c.g1.re,
    })
}

/// Which master equation to evaluate.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorKind {
    /// Markov generator; coefficients are ignored.
    Lindblad,
    /// Generic post-Markov generator on an arbitrary [`SystemSpec`].
    PostMarkov,
    TlsPostMarkov { omega: f64, gamma: f64 },
    SpinBoson { omega: f64, bias: f64, gamma: f64 },
    QbmGaussian { omega0: f64, gamma: f64 },
}

/// How the coefficients `g_i` are supplied over time.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientMode {
    /// `g0 = 1/2`, `g1 = g2 = 0` at all times.
    Markov,
    /// The kernel's `g_i(t)`, including the initial slip.
    TimeDependent(CorrelationKernel),
    /// The kernel's `t → ∞` values from `t = 0` on.
    FrozenAsymptotic(CorrelationKernel),
}

/// Immutable description of a generator: equation, coefficient source and,
/// for matrix-valued kinds, the system.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    kind: GeneratorKind,
    mode: CoefficientMode,
    system: Option<SystemSpec>,
    frozen: Option<CoefficientSet>,
    quad_tol: f64,
}

/// Default absolute tolerance for coefficients computed by quadrature.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;

impl GeneratorSpec {
    /// Markov evolution of `sys`.
    pub fn lindblad(sys: SystemSpec) -> Self {
        GeneratorSpec { kind: GeneratorKind::Lindblad, mode: CoefficientMode::Markov, system: Some(sys), frozen: None, quad_tol: DEFAULT_QUADRATURE_TOL }
    }

    /// Generic post-Markov evolution of `sys`.
    pub fn post_markov(sys: SystemSpec, mode: CoefficientMode) -> Result<Self> {
        Self::build(GeneratorKind::PostMarkov, mode, Some(sys))
    }

    pub fn tls(omega: f64, gamma: f64, mode: CoefficientMode) -> Result<Self> {
        let sys = SystemSpec::tls(omega, gamma)?;
        Self::build(GeneratorKind::TlsPostMarkov { omega, gamma }, mode, Some(sys))
    }

    pub fn spin_boson(omega: f64, bias: f64, gamma: f64, mode: CoefficientMode) -> Result<Self> {
        let sys = SystemSpec::spin_boson(omega, bias, gamma)?;
        Self::build(GeneratorKind::SpinBoson { omega, bias, gamma }, mode, Some(sys))
    }

    pub fn qbm(omega0: f64, gamma: f64, mode: CoefficientMode) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::usage(format!("omega0 must be positive and finite, got {omega0}")));
        }
        check_rate(gamma)?;
        Self::build(GeneratorKind::QbmGaussian { omega0, gamma }, mode, None)
    }

    fn build(kind: GeneratorKind, mode: CoefficientMode, system: Option<SystemSpec>) -> Result<Self> {
        let frozen = match &mode {
            CoefficientMode::Markov => None,
            CoefficientMode::TimeDependent(k) => {
                k.validate()?;
                None
            }
            CoefficientMode::FrozenAsymptotic(k) => Some(bath::asymptotic_coefficients(k)?),
        };
        Ok(GeneratorSpec { kind, mode, system, frozen, quad_tol: DEFAULT_QUADRATURE_TOL })
    }

    /// Tolerance for coefficients that have no closed form.
    pub fn with_quadrature_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::usage(format!("quadrature tolerance must be positive, got {tol}")));
        }
        self.quad_tol = tol;
        Ok(self)
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn mode(&self) -> &CoefficientMode {
        &self.mode
    }

    pub fn system(&self) -> Option<&SystemSpec> {
        self.system.as_ref()
    }

    /// Dimension of matrix states, `None` for Gaussian moments.
    pub fn dim(&self) -> Option<usize> {
        self.system.as_ref().map(SystemSpec::dim)
    }

    /// Coefficients in force at time `t`.
    pub fn coefficients(&self, t: f64) -> Result<CoefficientSet> {
        if matches!(self.kind, GeneratorKind::Lindblad) {
            return Ok(CoefficientSet::markov(t));
        }
        match &self.mode {
            CoefficientMode::Markov => Ok(CoefficientSet::markov(t)),
            CoefficientMode::TimeDependent(k) => bath::coefficients(k, t, self.quad_tol),
            CoefficientMode::FrozenAsymptotic(_) => Ok(self.frozen.expect("frozen coefficients").at(t)),
        }
    }

    /// Time derivative of `state` at time `t`.
    pub fn rhs(&self, t: f64, state: &State) -> Result<State> {
        let c = self.coefficients(t)?;
        self.rhs_with(&c, state)
    }

    /// Time derivative of `state` under explicitly supplied coefficients.
    pub fn rhs_with(&self, c: &CoefficientSet, state: &State) -> Result<State> {
        match (&self.kind, state) {
            (GeneratorKind::QbmGaussian { omega0, gamma }, State::Gaussian(g)) => {
                Ok(State::Gaussian(qbm_moment_rhs(*omega0, *gamma, c, g)?))
            }
            (GeneratorKind::QbmGaussian { .. }, State::Matrix(_)) => {
                Err(Error::usage("moment generator needs a Gaussian state"))
            }
            (_, State::Gaussian(_)) => Err(Error::usage("matrix generator needs a density matrix")),
            (kind, State::Matrix(rho)) => {
                let sys = self.system.as_ref().expect("matrix kinds carry a system");
                let out = match kind {
                    GeneratorKind::Lindblad => lindblad_rhs(sys, rho)?,
                    GeneratorKind::PostMarkov => post_markov_rhs(sys, c, rho)?,
                    GeneratorKind::TlsPostMarkov { omega, gamma } => tls_post_markov_rhs(*omega, *gamma, c, rho)?,
                    GeneratorKind::SpinBoson { omega, bias, gamma } => spin_boson_rhs(*omega, *bias, *gamma, c, rho)?,
                    GeneratorKind::QbmGaussian { .. } => unreachable!(),
                };
                Ok(State::Matrix(out))
            }
        }
    }
}

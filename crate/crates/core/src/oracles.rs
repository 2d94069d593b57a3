//! Reference solutions used to validate the master equations.
//!
//! * The damped two-level atom with the zero-temperature exponential kernel is
//!   exactly solvable in its single-excitation sector. The excited-state
//!   amplitude `G(t)` obeys
//!   `Ġ(t) = −γ ∫₀ᵗ α(t−s) e^{iω(t−s)} G(s) ds`, `G(0) = 1`,
//!   which for `α(u) = e^{−u/τ}/(2τ)` is equivalent to
//!   `G̈ + κĠ + (γ/2τ)G = 0`, `Ġ(0) = 0`, with `κ = 1/τ − iω`.
//! * Quantum Brownian motion is integrated directly in a truncated Fock basis.

use crate::bath::CorrelationKernel;
use crate::error::{Error, Result};
use crate::generators::{CoefficientMode, GaussianState, GeneratorSpec, State};
use crate::integrator::{integrate_adaptive, OdeState};
use crate::linalg::{oscillator, ComplexMatrix, DensityOperator, C64, ONE};

/// Largest deviation tolerated between the two amplitude routes.
pub const ROUTE_CONSISTENCY_LIMIT: f64 = 1e-6;
/// Volterra step as a fraction of the memory time.
const VOLTERRA_STEPS_PER_TAU: f64 = 200.0;
/// Beyond this many Volterra steps the cross-check is skipped.
pub const VOLTERRA_MAX_STEPS: usize = 1 << 22;

/// `(e^z − 1)/z`.
fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        ONE + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Exact excited-state amplitude of the damped two-level atom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TlsExactSolution {
    omega: f64,
    gamma: f64,
    tau: f64,
    /// Roots of `r² + κr + γ/(2τ) = 0`, `|r_big| ≥ |r_small|`.
    r_small: C64,
    r_big: C64,
}

impl TlsExactSolution {
    pub fn new(omega: f64, gamma: f64, tau: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::usage(format!("omega must be finite, got {omega}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::usage(format!("gamma must be non-negative, got {gamma}")));
        }
        CorrelationKernel::exponential(tau)?;
        let kappa = C64::new(1.0 / tau, -omega);
        let k0 = 0.5 / tau;
        let root = (kappa * kappa - 4.0 * gamma * k0).sqrt();
        let d = if (kappa + root).norm() >= (kappa - root).norm() { root } else { -root };
        let r_big = -(kappa + d) * 0.5;
        let r_small = gamma * k0 / r_big;
        Ok(TlsExactSolution { omega, gamma, tau, r_small, r_big })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `G(t)` from the second-order equation:
    /// `G = e^{r_s t}[1 − r_s t·φ((r_b − r_s)t)]` with `φ(z) = (e^z − 1)/z`.
    pub fn amplitude(&self, t: f64) -> C64 {
        if t == 0.0 || self.gamma == 0.0 {
            return ONE;
        }
        let (rs, rb) = (self.r_small, self.r_big);
        (rs * t).exp() * (ONE - rs * t * phi1((rb - rs) * t))
    }

    fn kernel_factor(&self) -> (C64, f64) {
        (C64::new(1.0 / self.tau, -self.omega), 0.5 / self.tau)
    }

    /// Trapezoidal Volterra solution with `n` uniform steps to time `t`.
    ///
    /// The memory sum `S_m = Σ_{j<m} w_j K(t_m − t_j) G_j` is carried
    /// recursively, `S_{m+1} = e^{−κh}(S_m + w_m K₀ G_m)`, and the implicit
    /// trapezoid update is solved exactly since it is linear in `G_{m+1}`.
    fn volterra_trapezoid(&self, t: f64, n: usize) -> C64 {
        let (kappa, k0) = self.kernel_factor();
        let h = t / n as f64;
        let decay = (-kappa * h).exp();
        let g = self.gamma;
        let mut gm = ONE;
        let mut fm = C64::new(0.0, 0.0);
        let mut s = C64::new(0.0, 0.0);
        let denom = 1.0 + 0.5 * h * g * h * 0.5 * k0;
        for m in 0..n {
            let w = if m == 0 { 0.5 } else { 1.0 };
            s = decay * (s + gm * (w * k0));
            let next = (gm + (fm - s * (g * h)) * (0.5 * h)) / denom;
            fm = -(s + next * (0.5 * k0)) * (g * h);
            gm = next;
        }
        gm
    }

    /// Number of Volterra steps to reach `t` at step `≤ τ/200`.
    fn volterra_steps(&self, t: f64) -> usize {
        ((t / self.tau * VOLTERRA_STEPS_PER_TAU).ceil() as usize).max(1)
    }

    /// `G(t)` from the Volterra equation: trapezoid at step `h ≤ τ/200` and at
    /// `h/2`, combined by one Richardson extrapolation.
    ///
    /// Returns `None` when the grid would exceed [`VOLTERRA_MAX_STEPS`].
    pub fn amplitude_volterra(&self, t: f64) -> Option<C64> {
        if t == 0.0 || self.gamma == 0.0 {
            return Some(ONE);
        }
        let n = self.volterra_steps(t);
        if 2 * n > VOLTERRA_MAX_STEPS {
            return None;
        }
        let coarse = self.volterra_trapezoid(t, n);
        let fine = self.volterra_trapezoid(t, 2 * n);
        Some((fine * 4.0 - coarse) / 3.0)
    }

    /// Largest deviation between the two routes over `times`; errors if it
    /// exceeds [`ROUTE_CONSISTENCY_LIMIT`]. Times beyond the Volterra step cap
    /// are not compared.
    pub fn verify(&self, times: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &t in times {
            if let Some(v) = self.amplitude_volterra(t) {
                worst = worst.max((v - self.amplitude(t)).norm());
            }
        }
        if worst > ROUTE_CONSISTENCY_LIMIT {
            return Err(Error::Inconsistent { deviation: worst });
        }
        Ok(worst)
    }
}

/// `G(t)` by the closed-form route, cross-checked against the Volterra route.
pub fn exact_tls_amplitude(omega: f64, gamma: f64, tau: f64, t: f64) -> Result<C64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::usage(format!("time must be finite and non-negative, got {t}")));
    }
    let sol = TlsExactSolution::new(omega, gamma, tau)?;
    sol.verify(&[t])?;
    Ok(sol.amplitude(t))
}

/// Exact state at time `t` from the pure initial state `a|e⟩ + b|g⟩`.
pub fn exact_tls_state(sol: &TlsExactSolution, psi0: [C64; 2], t: f64) -> Result<DensityOperator> {
    let norm = psi0[0].norm_sqr() + psi0[1].norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::usage(format!("initial state has norm² {norm}, expected 1")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::usage(format!("time must be finite and non-negative, got {t}")));
    }
    let [a, b] = psi0;
    let g = sol.amplitude(t);
    let ree = a.norm_sqr() * g.norm_sqr();
    let reg = a * b.conj() * g * C64::new(0.0, -sol.omega * t).exp();
    let mut m = ComplexMatrix::zeros(2);
    m[(0, 0)] = C64::new(ree, 0.0);
    m[(1, 1)] = C64::new(1.0 - ree, 0.0);
    m[(0, 1)] = reg;
    m[(1, 0)] = reg.conj();
    DensityOperator::new(m)
}

/// Sparse operator as `(row, col, value)` triples.
struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn from_dense(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Sparse { entries }
    }

    /// `S·X`.
    fn left(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let n = x.dim();
        let mut out = ComplexMatrix::zeros(n);
        for &(i, k, v) in &self.entries {
            for j in 0..n {
                out[(i, j)] += v * x[(k, j)];
            }
        }
        out
    }

    /// `X·S`.
    fn right(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let n = x.dim();
        let mut out = ComplexMatrix::zeros(n);
        for &(k, j, v) in &self.entries {
            for i in 0..n {
                out[(i, j)] += x[(i, k)] * v;
            }
        }
        out
    }

    fn comm(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.left(x) - &self.right(x)
    }

    fn anticomm(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.left(x) + &self.right(x)
    }
}

/// Oscillator operators in an `n`-level Fock truncation.
struct FockOperators {
    q: Sparse,
    p: Sparse,
    q2: Sparse,
    h: Sparse,
}

impl FockOperators {
    fn new(omega0: f64, n: usize) -> Self {
        let q = oscillator::position(n);
        let p = oscillator::momentum(n);
        let q2 = &q * &q;
        let h = &(&p * &p).scale_real(0.5) + &q2.scale_real(0.5 * omega0 * omega0);
        FockOperators { q: Sparse::from_dense(&q), p: Sparse::from_dense(&p), q2: Sparse::from_dense(&q2), h: Sparse::from_dense(&h) }
    }
}

/// Moments of `q`, `p` in a state given on the Fock basis (the truncation is
/// inferred from the dimension).
pub fn gaussian_moments(rho: &ComplexMatrix) -> GaussianState {
    let n = rho.dim();
    let q = oscillator::position(n);
    let p = oscillator::momentum(n);
    let ev = |a: &ComplexMatrix| a.trace_product(rho).re;
    let (mq, mp) = (ev(&q), ev(&p));
    let sym = (&(&q * &p) + &(&p * &q)).scale_real(0.5);
    GaussianState {
        mq,
        mp,
        sqq: ev(&(&q * &q)) - mq * mq,
        spp: ev(&(&p * &p)) - mp * mp,
        sqp: ev(&sym) - mq * mp,
    }
}

/// Density matrix of the coherent state with moments `(mq, mp)` in an
/// `n`-level truncation.
pub fn coherent_density(mq: f64, mp: f64, n: usize) -> Result<DensityOperator> {
    let alpha = C64::new(mq, mp) / std::f64::consts::SQRT_2;
    let mut psi = oscillator::coherent_amplitudes(alpha, n);
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    DensityOperator::pure(&psi)
}

/// Default Fock truncation.
pub const DEFAULT_FOCK_LEVELS: usize = 30;
/// Largest truncation the automatic doubling will try.
pub const MAX_FOCK_LEVELS: usize = 120;
/// Top-level population above which the truncation is declared too small.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

/// Moments of a Fock-space run of the Brownian-motion master equation.
#[derive(Clone, Debug)]
pub struct FockMoments {
    pub n_trunc: usize,
    pub moments: Vec<GaussianState>,
    pub max_trace_error: f64,
    pub max_top_population: f64,
}

/// Integrates the Brownian-motion master equation with `L = √γ q`,
/// `V(q) = ½ω0²q²`,
///
/// ```text
/// ρ̇ = −i[H,ρ] − γ Re g0 [q,[q,ρ]] − iγ Im g0 [q²,ρ] + γ Re g1 [q,[p,ρ]] + iγ Im g1 [q,{p,ρ}]
/// ```
///
/// in the truncation of `rho0`, starting at `grid[0]`, and returns the moments
/// at every grid time.
pub fn qbm_fock_moments(
    omega0: f64,
    gamma: f64,
    mode: &CoefficientMode,
    rho0: &DensityOperator,
    grid: &[f64],
    tol: f64,
) -> Result<FockMoments> {
    let n = rho0.dim();
    if n < 10 {
        return Err(Error::usage(format!("Fock truncation must have at least 10 levels, got {n}")));
    }
    let tail: f64 = (n / 2 + 1..n).map(|k| rho0[(k, k)].re).sum();
    if tail > 1e-8 {
        return Err(Error::usage(format!("initial state has {tail:.3e} population above level {}", n / 2)));
    }
    let (&t0, &t1) = match (grid.first(), grid.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::usage("output grid is empty")),
    };

    let coeffs = GeneratorSpec::qbm(omega0, gamma, mode.clone())?;
    let ops = FockOperators::new(omega0, n);
    let mut f = |t: f64, s: &State| -> Result<State> {
        let rho = s.as_matrix().expect("matrix state");
        let c = coeffs.coefficients(t)?;
        let mut out = ops.h.comm(rho).scale(-crate::linalg::I);
        out -= &ops.q.comm(&ops.q.comm(rho)).scale_real(gamma * c.g0.re);
        out -= &ops.q2.comm(rho).scale(C64::new(0.0, gamma * c.g0.im));
        out += &ops.q.comm(&ops.p.comm(rho)).scale_real(gamma * c.g1.re);
        out += &ops.q.comm(&ops.p.anticomm(rho)).scale(C64::new(0.0, gamma * c.g1.im));
        Ok(State::Matrix(out))
    };

    let s0 = OdeState::new(t0, State::Matrix(rho0.matrix().clone()));
    let mut states = vec![s0.clone()];
    if grid.len() > 1 {
        states.extend(integrate_adaptive(&mut f, &s0, t1, tol, &grid[1..])?);
    }

    let mut max_trace_error = 0.0f64;
    let mut max_top_population = 0.0f64;
    let mut moments = Vec::with_capacity(states.len());
    for s in &states {
        let rho = s.state.as_matrix().expect("matrix state");
        max_trace_error = max_trace_error.max((rho.trace() - 1.0).norm());
        max_top_population = max_top_population.max(rho[(n - 1, n - 1)].re.abs());
        moments.push(gaussian_moments(rho));
    }
    if max_top_population > LEAKAGE_LIMIT {
        return Err(Error::Truncation { n_trunc: n, population: max_top_population });
    }
    Ok(FockMoments { n_trunc: n, moments, max_trace_error, max_top_population })
}

/// [`qbm_fock_moments`] from the coherent state with moments `(mq, mp)`,
/// starting at [`DEFAULT_FOCK_LEVELS`] and doubling the truncation on leakage
/// up to [`MAX_FOCK_LEVELS`].
pub fn qbm_fock_moments_auto(
    omega0: f64,
    gamma: f64,
    mode: &CoefficientMode,
    mq: f64,
    mp: f64,
    grid: &[f64],
    tol: f64,
) -> Result<FockMoments> {
    let mut n = DEFAULT_FOCK_LEVELS;
    loop {
        let rho0 = coherent_density(mq, mp, n)?;
        match qbm_fock_moments(omega0, gamma, mode, &rho0, grid, tol) {
            Err(Error::Truncation { .. }) if 2 * n <= MAX_FOCK_LEVELS => n *= 2,
            Err(Error::Usage(_)) if 2 * n <= MAX_FOCK_LEVELS => n *= 2,
            other => return other,
        }
    }
}

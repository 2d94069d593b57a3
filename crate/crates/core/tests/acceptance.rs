//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p postmarkov --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use postmarkov::bath::{self, asymptotic_coefficients, coefficients_closed_form, coefficients_quadrature};
use postmarkov::generators::{
    post_markov_rhs, post_markov_terms, qbm_moment_rhs, spin_boson_rhs, tls_post_markov_rhs, CoefficientMode,
    GaussianState, GeneratorSpec, State, SystemSpec,
};
use postmarkov::integrator::{evolve, uniform_grid, Trajectory};
use postmarkov::linalg::{bloch_vector, trace_distance, ComplexMatrix, DensityOperator, C64};
use postmarkov::oracles::{exact_tls_state, qbm_fock_moments_auto, TlsExactSolution};
use postmarkov::{CoefficientSet, CorrelationKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-10;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn minus_state() -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(s, 0.0), C64::new(-s, 0.0)]
}

fn plus_state() -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(s, 0.0), C64::new(s, 0.0)]
}

fn excited_state() -> [C64; 2] {
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

fn pure(psi: [C64; 2]) -> State {
    State::Matrix(DensityOperator::pure(&psi).unwrap().into_matrix())
}

fn density(s: &State) -> DensityOperator {
    DensityOperator::new(s.as_matrix().unwrap().clone()).unwrap()
}

fn sigma_y(s: &State) -> f64 {
    bloch_vector(s.as_matrix().unwrap()).unwrap()[1]
}

fn tls_run(mode: Option<CoefficientMode>, gamma: f64, psi: [C64; 2], grid: &[f64]) -> Trajectory {
    let spec = match mode {
        None => GeneratorSpec::lindblad(SystemSpec::tls(gamma, gamma).unwrap()),
        Some(m) => GeneratorSpec::tls(gamma, gamma, m).unwrap(),
    };
    evolve(&spec, &pure(psi), grid, TOL).unwrap()
}

fn max_distance_to_exact(traj: &Trajectory, sol: &TlsExactSolution, psi: [C64; 2]) -> f64 {
    traj.samples
        .iter()
        .map(|s| trace_distance(&density(&s.state), &exact_tls_state(sol, psi, s.t).unwrap()).unwrap())
        .fold(0.0, f64::max)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Lindblad reduction at γτ = 1e-6.
fn ac1() -> Outcome {
    let gamma = 1.0;
    let k = CorrelationKernel::exponential(1e-6 / gamma).unwrap();
    let grid = uniform_grid(5.0 / gamma, 201).unwrap();
    let mut worst = 0.0f64;
    for psi in [minus_state(), excited_state()] {
        let pm = tls_run(Some(CoefficientMode::TimeDependent(k.clone())), gamma, psi, &grid);
        let mk = tls_run(None, gamma, psi, &grid);
        for (a, b) in pm.samples.iter().zip(&mk.samples) {
            worst = worst.max(trace_distance(&density(&a.state), &density(&b.state)).unwrap());
        }
    }
    outcome(worst <= 1e-4, format!("max trace distance post-Markov vs Markov = {worst:.3e} (limit 1e-4)"))
}

/// First-order accuracy, and the curve ordering at γτ = 0.2.
fn ac2() -> Outcome {
    let gamma = 1.0;
    let grid = uniform_grid(5.0 / gamma, 201).unwrap();
    let psi = minus_state();
    let taus = [0.0125, 0.025, 0.05, 0.1];
    let mut d_markov = Vec::new();
    let mut d_post = Vec::new();
    for &gt in &taus {
        let tau = gt / gamma;
        let sol = TlsExactSolution::new(gamma, gamma, tau).unwrap();
        let k = CorrelationKernel::exponential(tau).unwrap();
        d_markov.push(max_distance_to_exact(&tls_run(None, gamma, psi, &grid), &sol, psi));
        d_post.push(max_distance_to_exact(&tls_run(Some(CoefficientMode::TimeDependent(k)), gamma, psi, &grid), &sol, psi));
    }
    let s_markov = slope(&taus, &d_markov);
    let s_post = slope(&taus, &d_post);

    let tau = 0.2 / gamma;
    let sol = TlsExactSolution::new(gamma, gamma, tau).unwrap();
    let k = CorrelationKernel::exponential(tau).unwrap();
    let mk = tls_run(None, gamma, psi, &grid);
    let pm = tls_run(Some(CoefficientMode::TimeDependent(k)), gamma, psi, &grid);
    let dt = grid[1] - grid[0];
    let l2 = |traj: &Trajectory| {
        let sq: f64 = traj
            .samples
            .iter()
            .map(|s| (sigma_y(&s.state) - sigma_y(&State::Matrix(exact_tls_state(&sol, psi, s.t).unwrap().into_matrix()))).powi(2))
            .sum();
        (sq * dt).sqrt()
    };
    let (l2_markov, l2_post) = (l2(&mk), l2(&pm));

    let passed = (s_markov - 1.0).abs() <= 0.3 && (s_post - 2.0).abs() <= 0.4 && l2_post < l2_markov;
    outcome(
        passed,
        format!(
            "slopes Markov {s_markov:.3} (1.0 ± 0.3), post-Markov {s_post:.3} (2.0 ± 0.4); \
             <σy> L2 at γτ=0.2: post-Markov {l2_post:.4} vs Markov {l2_markov:.4}"
        ),
    )
}

fn max_bloch(traj: &Trajectory) -> f64 {
    traj.samples.iter().map(|s| s.diagnostics.bloch_norm.unwrap()).fold(0.0, f64::max)
}

/// Positivity violation of the frozen-asymptotic spin-boson equation.
fn ac3() -> Outcome {
    let omega = 1.0;
    let tau = 0.01 / omega;
    let kernel = CorrelationKernel::ohmic(20.0 / tau, 1.0 / tau).unwrap();
    let gamma = 0.3 * omega;
    let grid = uniform_grid(10.0 * tau, 1001).unwrap();
    let mut frozen = Vec::new();
    let mut full = Vec::new();
    for psi in [plus_state(), excited_state()] {
        let f = GeneratorSpec::spin_boson(omega, 0.0, gamma, CoefficientMode::FrozenAsymptotic(kernel.clone())).unwrap();
        let t = GeneratorSpec::spin_boson(omega, 0.0, gamma, CoefficientMode::TimeDependent(kernel.clone())).unwrap();
        frozen.push(max_bloch(&evolve(&f, &pure(psi), &grid, TOL).unwrap()));
        full.push(max_bloch(&evolve(&t, &pure(psi), &grid, TOL).unwrap()));
    }
    let violated = frozen.iter().any(|&b| b > 1.0 + 1e-3);
    let preserved = full.iter().all(|&b| b <= 1.0 + 1e-6);
    outcome(
        violated && preserved,
        format!(
            "max |Bloch| frozen: σx-eigenstate 1{:+.3e}, excited 1{:+.3e} (need > 1+1e-3 for one); \
             time-dependent: 1{:+.3e}, 1{:+.3e} (need <= 1+1e-6 for both)",
            frozen[0] - 1.0,
            frozen[1] - 1.0,
            full[0] - 1.0,
            full[1] - 1.0
        ),
    )
}

fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let a = random_matrix(rng, dim);
    let p = &a * &a.dagger();
    let tr = p.trace().re;
    p.scale_real(1.0 / tr)
}

fn random_coefficients(rng: &mut ChaCha8Rng) -> CoefficientSet {
    let mut z = || C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    CoefficientSet::new(0.0, z(), z(), z())
}

/// Trace and Hermiticity along trajectories of every matrix-valued generator.
fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let exp = CorrelationKernel::exponential(0.2).unwrap();
    let ohm = CorrelationKernel::ohmic(5.0, 10.0).unwrap();
    let grid = uniform_grid(5.0, 101).unwrap();

    let h = random_matrix(&mut rng, 3).hermitian_part();
    let l = random_matrix(&mut rng, 3).scale_real(0.5);
    let generic = SystemSpec::new(h, l).unwrap();
    let rho3 = State::Matrix(random_density(&mut rng, 3));
    let rho2 = State::Matrix(random_density(&mut rng, 2));

    let runs: Vec<(&str, GeneratorSpec, &State)> = vec![
        ("lindblad", GeneratorSpec::lindblad(generic.clone()), &rho3),
        ("post-Markov generic", GeneratorSpec::post_markov(generic.clone(), CoefficientMode::TimeDependent(exp.clone())).unwrap(), &rho3),
        ("post-Markov generic frozen", GeneratorSpec::post_markov(generic, CoefficientMode::FrozenAsymptotic(exp.clone())).unwrap(), &rho3),
        ("two-level", GeneratorSpec::tls(1.0, 1.0, CoefficientMode::TimeDependent(exp.clone())).unwrap(), &rho2),
        ("two-level frozen", GeneratorSpec::tls(1.0, 1.0, CoefficientMode::FrozenAsymptotic(exp)).unwrap(), &rho2),
        ("spin-boson", GeneratorSpec::spin_boson(1.0, 0.5, 0.3, CoefficientMode::TimeDependent(ohm.clone())).unwrap(), &rho2),
        ("spin-boson frozen", GeneratorSpec::spin_boson(1.0, 0.5, 0.3, CoefficientMode::FrozenAsymptotic(ohm)).unwrap(), &rho2),
    ];

    let mut worst_trace = 0.0f64;
    let mut worst_herm = 0.0f64;
    let mut failing = Vec::new();
    for (name, spec, init) in &runs {
        let traj = evolve(spec, init, &grid, TOL).unwrap();
        for s in &traj.samples {
            let (tr, he) = (s.diagnostics.trace_error.unwrap(), s.diagnostics.hermiticity_error.unwrap());
            worst_trace = worst_trace.max(tr);
            worst_herm = worst_herm.max(he);
            if tr > 1e-8 || he > 1e-8 {
                failing.push(*name);
                break;
            }
        }
    }
    outcome(
        failing.is_empty(),
        format!(
            "{} generators, max |Tr-1| = {worst_trace:.1e}, max Hermiticity error = {worst_herm:.1e} (limit 1e-8){}",
            runs.len(),
            if failing.is_empty() { String::new() } else { format!("; failing: {failing:?}") }
        ),
    )
}

/// Specialization identities and the vanishing g2 line.
fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_tls = 0.0f64;
    let mut worst_sb = 0.0f64;
    let mut g2_nonzero = 0usize;
    for _ in 0..1000 {
        let rho = random_density(&mut rng, 2);
        let c = random_coefficients(&mut rng);
        let omega = rng.gen_range(-3.0..3.0);
        let bias = rng.gen_range(-3.0..3.0);
        let gamma = rng.gen_range(0.0..2.0);

        let tls = SystemSpec::tls(omega, gamma).unwrap();
        let a = tls_post_markov_rhs(omega, gamma, &c, &rho).unwrap();
        worst_tls = worst_tls.max(a.max_abs_diff(&post_markov_rhs(&tls, &c, &rho).unwrap()));

        let sb = SystemSpec::spin_boson(omega, bias, gamma).unwrap();
        let b = spin_boson_rhs(omega, bias, gamma, &c, &rho).unwrap();
        let terms = post_markov_terms(&sb, &c, &rho).unwrap();
        worst_sb = worst_sb.max(b.max_abs_diff(&terms.sum()));

        let dim = rng.gen_range(2..5);
        let h = random_matrix(&mut rng, dim).hermitian_part();
        let l = random_matrix(&mut rng, dim).hermitian_part();
        let r = random_density(&mut rng, dim);
        let generic = post_markov_terms(&SystemSpec::new(h, l).unwrap(), &c, &r).unwrap();
        for line in [&terms.g2_line, &generic.g2_line] {
            if line.as_slice().iter().any(|z| z.re != 0.0 || z.im != 0.0) {
                g2_nonzero += 1;
            }
        }
    }
    outcome(
        worst_tls <= 1e-12 && worst_sb <= 1e-12 && g2_nonzero == 0,
        format!(
            "1000 samples: two-level max diff {worst_tls:.1e}, spin-boson max diff {worst_sb:.1e} (limit 1e-12); \
             non-zero g2 lines for L = L†: {g2_nonzero}"
        ),
    )
}

/// Coefficient quadrature, closed forms and asymptotics.
fn ac6() -> Outcome {
    let mut worst_quad = 0.0f64;
    let mut worst_asym = 0.0f64;
    for tau in [0.01, 0.2, 1.0, 3.0] {
        let k = CorrelationKernel::exponential(tau).unwrap();
        for i in 0..=100 {
            let t = 0.5 * i as f64 * tau;
            let q = coefficients_quadrature(&k, t, 1e-10).unwrap();
            let c = coefficients_closed_form(&k, t).unwrap().unwrap();
            worst_quad = worst_quad.max(q.max_abs_diff(&c));
        }
        let at50 = coefficients_closed_form(&k, 50.0 * tau).unwrap().unwrap();
        let want = CoefficientSet::new(at50.t, C64::new(0.5, 0.0), C64::new(tau / 2.0, 0.0), C64::new(tau / 4.0, 0.0));
        worst_asym = worst_asym.max(at50.max_abs_diff(&want));
        worst_asym = worst_asym.max(asymptotic_coefficients(&k).unwrap().at(at50.t).max_abs_diff(&want));
    }
    let mut worst_ohmic = 0.0f64;
    for (kt, lam) in [(2000.0, 100.0), (5.0, 2.0), (0.3, 7.0)] {
        let k = CorrelationKernel::ohmic(kt, lam).unwrap();
        let late = bath::coefficients(&k, 50.0 / lam, 1e-10).unwrap();
        let asym = asymptotic_coefficients(&k).unwrap();
        for c in [late, asym] {
            worst_ohmic = worst_ohmic.max((c.g0.re - kt).abs()).max((c.g1.im + 0.5).abs());
        }
    }
    outcome(
        worst_quad <= 1e-8 && worst_asym <= 1e-6 && worst_ohmic <= 1e-6,
        format!(
            "quadrature vs closed form {worst_quad:.1e} (1e-8); exponential asymptotics {worst_asym:.1e} (1e-6); \
             Ohmic Re g0 -> kT, Im g1 -> -1/2 {worst_ohmic:.1e} (1e-6)"
        ),
    )
}

/// Gaussian moments against the Fock-space integration, and the
/// Caldeira-Leggett damping rate.
fn ac7() -> Outcome {
    let omega0 = 1.0;
    let gamma = 0.1 * omega0;
    let mode = CoefficientMode::TimeDependent(CorrelationKernel::exponential(0.1 / omega0).unwrap());
    let grid = uniform_grid(10.0 / omega0, 201).unwrap();
    let (q0, p0) = (1.0, 0.5);

    let spec = GeneratorSpec::qbm(omega0, gamma, mode.clone()).unwrap();
    let gauss = evolve(&spec, &State::Gaussian(GaussianState::coherent(q0, p0)), &grid, TOL).unwrap();
    let fock = qbm_fock_moments_auto(omega0, gamma, &mode, q0, p0, &grid, TOL).unwrap();

    let g: Vec<[f64; 5]> = gauss.states().map(|s| s.as_gaussian().unwrap().to_array()).collect();
    let f: Vec<[f64; 5]> = fock.moments.iter().map(GaussianState::to_array).collect();
    let mut worst_rel = 0.0f64;
    for m in 0..5 {
        let peak = g.iter().map(|v| v[m].abs()).fold(0.0, f64::max);
        let diff = g.iter().zip(&f).map(|(a, b)| (a[m] - b[m]).abs()).fold(0.0, f64::max);
        worst_rel = worst_rel.max(diff / peak);
    }

    let ohm = CorrelationKernel::ohmic(3.0, 40.0).unwrap();
    let asym = asymptotic_coefficients(&ohm).unwrap();
    let base = GaussianState::new(0.0, 0.0, 0.7, 0.4, 0.1).unwrap();
    let d1 = qbm_moment_rhs(omega0, gamma, &asym, &GaussianState { mp: 1.0, ..base }).unwrap();
    let d0 = qbm_moment_rhs(omega0, gamma, &asym, &base).unwrap();
    let rate = d1.mp - d0.mp;
    let rate_err = (rate - 2.0 * gamma * asym.g1.im).abs().max((rate + gamma).abs());

    outcome(
        worst_rel <= 1e-4 && rate_err <= 1e-9 && fock.max_trace_error <= 1e-6,
        format!(
            "max relative moment deviation {worst_rel:.1e} (1e-4) at n_trunc = {}, Fock |Tr-1| {:.1e}; \
             damping coefficient {rate:.12} vs 2γ Im g1(∞) = {:.12}",
            fock.n_trunc,
            fock.max_trace_error,
            2.0 * gamma * asym.g1.im
        ),
    )
}

/// Route agreement of the exact amplitude and its Markov limit.
fn ac8() -> Outcome {
    let gamma = 1.0;
    let times: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64 / gamma).collect();
    let mut worst_route = 0.0f64;
    for gt in [0.05, 0.2, 1.0] {
        let sol = TlsExactSolution::new(gamma, gamma, gt / gamma).unwrap();
        worst_route = worst_route.max(sol.verify(&times).unwrap());
    }
    let sol = TlsExactSolution::new(gamma, gamma, 1e-4 / gamma).unwrap();
    let worst_markov = times
        .iter()
        .map(|&t| (sol.amplitude(t).norm() - (-gamma * t / 2.0).exp()).abs())
        .fold(0.0, f64::max);
    outcome(
        worst_route <= 1e-8 && worst_markov <= 1e-3,
        format!("route deviation {worst_route:.1e} (1e-8); |G| vs e^(-γt/2) at γτ = 1e-4: {worst_markov:.1e} (1e-3)"),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome, Option<Duration>); 8] = [
        ("AC1", "Lindblad reduction", ac1, Some(Duration::from_secs(1))),
        ("AC2", "first-order accuracy", ac2, Some(Duration::from_secs(10))),
        ("AC3", "frozen-coefficient positivity violation", ac3, Some(Duration::from_secs(10))),
        ("AC4", "conservation", ac4, None),
        ("AC5", "specialization identities", ac5, None),
        ("AC6", "coefficients", ac6, None),
        ("AC7", "Brownian-motion oracle equivalence", ac7, None),
        ("AC8", "exact-amplitude self-consistency", ac8, None),
    ];

    let mut failures = 0;
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let (mut passed, mut detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if let Some(b) = budget {
            if elapsed > b {
                passed = false;
                detail.push_str(&format!("; runtime {:.2}s exceeds {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()));
            }
        }
        if !passed {
            failures += 1;
        }
        println!(
            "[{}] {id} {name}: {detail} [{:.2}s]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 8 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

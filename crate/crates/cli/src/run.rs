//! Running scenarios and laying the results out as CSV tables.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::thread;

use postmarkov::bath;
use postmarkov::diagnostics::diagnose;
use postmarkov::generators::{CoefficientMode, GeneratorSpec, State, SystemSpec};
use postmarkov::integrator::{evolve, uniform_grid, Sample, Trajectory};
use postmarkov::linalg::{bloch_vector, hermitian_eigenvalues, ComplexMatrix};
use postmarkov::oracles::{exact_tls_state, TlsExactSolution};
use postmarkov::{CorrelationKernel, DensityOperator, C64};

use crate::error::{CliError, ConfigError};
use crate::scenario::{InitialConfig, Method, ModelConfig, NamedState, ScenarioConfig, TimeConfig};

/// Coefficient tolerance relative to the integrator tolerance.
const QUADRATURE_TOL_FACTOR: f64 = 0.01;

const COEFFICIENT_COLUMNS: [&str; 6] = ["g0_re", "g0_im", "g1_re", "g1_im", "g2_re", "g2_im"];
const TWO_LEVEL_COLUMNS: [&str; 7] = ["sx", "sy", "sz", "bloch_norm", "trace_err", "herm_err", "min_eig"];
const GAUSSIAN_COLUMNS: [&str; 6] = ["mq", "mp", "sqq", "spp", "sqp", "rs_value"];

/// Column-labelled numeric table, one row per output time.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Writes the table as CSV with 13 significant digits per value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|x| format!("{x:.12e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Writes to `path`, or to stdout when `None`.
pub fn write_table(table: &Table, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            table.write_csv(io::BufWriter::new(f))
        }
        None => table.write_csv(io::stdout().lock()),
    }
}

fn quadrature_tol(time: &TimeConfig) -> f64 {
    time.tol * QUADRATURE_TOL_FACTOR
}

fn initial_state(cfg: &ScenarioConfig) -> Result<State, CliError> {
    match &cfg.initial {
        InitialConfig::Moments(g) => Ok(State::Gaussian(*g)),
        init => {
            let [(er, ei), (gr, gi)] = init.amplitudes().expect("two-level initial state");
            let rho = DensityOperator::pure(&[C64::new(er, ei), C64::new(gr, gi)])?;
            Ok(State::Matrix(rho.into_matrix()))
        }
    }
}

fn kernel(cfg: &ScenarioConfig) -> Result<&CorrelationKernel, CliError> {
    cfg.kernel.as_ref().ok_or_else(|| ConfigError::Missing { section: "kernel".into(), key: "type".into() }.into())
}

fn generator(cfg: &ScenarioConfig) -> Result<GeneratorSpec, CliError> {
    let mode = match cfg.method {
        Method::Markov => CoefficientMode::Markov,
        Method::PostMarkov => CoefficientMode::TimeDependent(kernel(cfg)?.clone()),
        Method::PostMarkovAsymptotic => CoefficientMode::FrozenAsymptotic(kernel(cfg)?.clone()),
        Method::Exact => unreachable!("exact runs do not use a generator"),
    };
    let markov = cfg.method == Method::Markov;
    let spec = match cfg.model {
        ModelConfig::Tls { omega, gamma } if markov => GeneratorSpec::lindblad(SystemSpec::tls(omega, gamma)?),
        ModelConfig::Tls { omega, gamma } => GeneratorSpec::tls(omega, gamma, mode)?,
        ModelConfig::SpinBoson { omega, bias, gamma } if markov => {
            GeneratorSpec::lindblad(SystemSpec::spin_boson(omega, bias, gamma)?)
        }
        ModelConfig::SpinBoson { omega, bias, gamma } => GeneratorSpec::spin_boson(omega, bias, gamma, mode)?,
        ModelConfig::Qbm { omega0, gamma } => GeneratorSpec::qbm(omega0, gamma, mode)?,
    };
    Ok(spec.with_quadrature_tol(quadrature_tol(&cfg.time))?)
}

fn exact_trajectory(cfg: &ScenarioConfig, grid: Vec<f64>) -> Result<Trajectory, CliError> {
    let (ModelConfig::Tls { omega, gamma }, Some(k @ CorrelationKernel::ExponentialZeroT { tau })) = (&cfg.model, &cfg.kernel)
    else {
        return Err(ConfigError::Combination("method exact needs model tls with an exponential kernel".into()).into());
    };
    let sol = TlsExactSolution::new(*omega, *gamma, *tau)?;
    if cfg.time.t_end > 0.0 {
        // Cross-checks the closed form against the integral-equation route.
        sol.verify(&[cfg.time.t_end])?;
    }
    let [(er, ei), (gr, gi)] = cfg.initial.amplitudes().expect("two-level initial state");
    let psi0 = [C64::new(er, ei), C64::new(gr, gi)];
    let qtol = quadrature_tol(&cfg.time);
    let samples = grid
        .iter()
        .map(|&t| {
            let state = State::Matrix(exact_tls_state(&sol, psi0, t)?.into_matrix());
            Ok(Sample { t, coefficients: bath::coefficients(k, t, qtol)?, diagnostics: diagnose(&state)?, state })
        })
        .collect::<Result<Vec<_>, postmarkov::Error>>()?;
    Ok(Trajectory { grid, samples })
}

/// Evolves the scenario and returns the sampled trajectory.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Trajectory, CliError> {
    let grid = uniform_grid(cfg.time.t_end, cfg.time.n_samples)?;
    if cfg.method == Method::Exact {
        return exact_trajectory(cfg, grid);
    }
    let spec = generator(cfg)?;
    Ok(evolve(&spec, &initial_state(cfg)?, &grid, cfg.time.tol)?)
}

fn observable_columns(two_level: bool) -> &'static [&'static str] {
    if two_level {
        &TWO_LEVEL_COLUMNS
    } else {
        &GAUSSIAN_COLUMNS
    }
}

fn observables(s: &Sample) -> Result<Vec<f64>, CliError> {
    match &s.state {
        State::Matrix(r) => {
            let [x, y, z] = bloch_vector(r)?;
            let d = &s.diagnostics;
            let get = |v: Option<f64>| v.unwrap_or(f64::NAN);
            Ok(vec![
                x,
                y,
                z,
                (x * x + y * y + z * z).sqrt(),
                get(d.trace_error),
                get(d.hermiticity_error),
                get(d.min_eigenvalue),
            ])
        }
        State::Gaussian(g) => {
            let mut v = g.to_array().to_vec();
            v.push(s.diagnostics.rs_value.unwrap_or(f64::NAN));
            Ok(v)
        }
    }
}

fn coefficient_values(s: &Sample) -> [f64; 6] {
    let c = &s.coefficients;
    [c.g0.re, c.g0.im, c.g1.re, c.g1.im, c.g2.re, c.g2.im]
}

/// `t`, the six coefficient columns, then the state observables.
pub fn trajectory_table(model: &ModelConfig, traj: &Trajectory) -> Result<Table, CliError> {
    let mut header = vec!["t".to_string()];
    header.extend(COEFFICIENT_COLUMNS.iter().map(|s| s.to_string()));
    header.extend(observable_columns(model.is_two_level()).iter().map(|s| s.to_string()));
    let mut table = Table::new(header);
    for s in &traj.samples {
        let mut row = vec![s.t];
        row.extend(coefficient_values(s));
        row.extend(observables(s)?);
        table.rows.push(row);
    }
    Ok(table)
}

/// Runs one scenario and tabulates it.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Trajectory, Table), CliError> {
    let traj = simulate(cfg)?;
    let table = trajectory_table(&cfg.model, &traj)?;
    Ok((traj, table))
}

/// Column prefixes; repeated methods get `_2`, `_3`, ... appended.
fn method_labels(methods: &[Method]) -> Vec<String> {
    methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let seen = methods[..i].iter().filter(|&&p| p == *m).count();
            if seen == 0 {
                m.name().to_string()
            } else {
                format!("{}_{}", m.name(), seen + 1)
            }
        })
        .collect()
}

fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, CliError> {
    let diff = (a - b).hermitian_part();
    Ok(0.5 * hermitian_eigenvalues(&diff)?.iter().map(|l| l.abs()).sum::<f64>())
}

/// Runs the scenario under each method on its own thread and joins the
/// observables column-wise. With `exact` among the methods, two-level runs
/// also get `td_<method>_exact` trace-distance columns.
pub fn compare_scenarios(cfg: &ScenarioConfig, methods: &[Method]) -> Result<Table, CliError> {
    if methods.is_empty() {
        return Err(CliError::Usage("no methods to compare".into()));
    }
    let configs = methods.iter().map(|&m| cfg.with_method(m)).collect::<Result<Vec<_>, _>>()?;
    let trajectories: Vec<Trajectory> = thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|c| scope.spawn(move || simulate(c))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect::<Result<Vec<_>, _>>()
    })?;

    let labels = method_labels(methods);
    let columns = observable_columns(cfg.model.is_two_level());
    let exact = methods.iter().position(|&m| m == Method::Exact).filter(|_| cfg.model.is_two_level());
    let mut header = vec!["t".to_string()];
    for label in &labels {
        header.extend(columns.iter().map(|c| format!("{label}_{c}")));
    }
    if let Some(e) = exact {
        for (i, label) in labels.iter().enumerate() {
            if i != e && methods[i] != Method::Exact {
                header.push(format!("td_{label}_exact"));
            }
        }
    }

    let mut table = Table::new(header);
    for (k, &t) in trajectories[0].grid.iter().enumerate() {
        let mut row = vec![t];
        for traj in &trajectories {
            row.extend(observables(&traj.samples[k])?);
        }
        if let Some(e) = exact {
            let reference = trajectories[e].samples[k].state.as_matrix().expect("two-level state");
            for (i, traj) in trajectories.iter().enumerate() {
                if i != e && methods[i] != Method::Exact {
                    let m = traj.samples[k].state.as_matrix().expect("two-level state");
                    row.push(trace_distance(m, reference)?);
                }
            }
        }
        table.rows.push(row);
    }
    Ok(table)
}

/// The kernel's `g_i(t)` on `n_samples` times from 0 to `t_max`.
pub fn coefficient_table(cfg: &ScenarioConfig, t_max: f64) -> Result<Table, CliError> {
    let k = kernel(cfg)?;
    let grid = uniform_grid(t_max, cfg.time.n_samples)?;
    let qtol = quadrature_tol(&cfg.time);
    let mut header = vec!["t".to_string()];
    header.extend(COEFFICIENT_COLUMNS.iter().map(|s| s.to_string()));
    let mut table = Table::new(header);
    for t in grid {
        let c = bath::coefficients(k, t, qtol)?;
        table.rows.push(vec![t, c.g0.re, c.g0.im, c.g1.re, c.g1.im, c.g2.re, c.g2.im]);
    }
    Ok(table)
}

/// Built-in scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Damped two-level atom at `γτ = 0.2` from `|−⟩`: Markov, post-Markov
    /// and exact evolution side by side.
    DampedAtom,
    /// Strongly coupled high-temperature spin-boson model over the first
    /// 0.1 time units: Bloch norms with time-dependent and with frozen
    /// coefficients, from `|+⟩` and from `|e⟩`.
    SpinBosonPositivity,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Preset> {
        match s {
            "fig1" | "damped_atom" => Some(Preset::DampedAtom),
            "fig2" | "spin_boson_positivity" => Some(Preset::SpinBosonPositivity),
            _ => None,
        }
    }

    /// Scenario behind the preset; `initial` is the first of its states.
    pub fn scenario(self) -> ScenarioConfig {
        match self {
            Preset::DampedAtom => ScenarioConfig {
                model: ModelConfig::Tls { omega: 1.0, gamma: 1.0 },
                method: Method::PostMarkov,
                kernel: Some(CorrelationKernel::ExponentialZeroT { tau: 0.2 }),
                initial: InitialConfig::Named(NamedState::Minus),
                time: TimeConfig { t_end: 5.0, n_samples: 501, tol: 1e-10 },
                output: None,
            },
            Preset::SpinBosonPositivity => ScenarioConfig {
                model: ModelConfig::SpinBoson { omega: 1.0, bias: 0.0, gamma: 0.3 },
                method: Method::PostMarkov,
                kernel: Some(CorrelationKernel::OhmicHighTemp { kt: 2000.0, cutoff: 100.0 }),
                initial: InitialConfig::Named(NamedState::Plus),
                time: TimeConfig { t_end: 0.1, n_samples: 1001, tol: 1e-10 },
                output: None,
            },
        }
    }

    pub fn run(self) -> Result<Table, CliError> {
        let cfg = self.scenario();
        match self {
            Preset::DampedAtom => compare_scenarios(&cfg, &[Method::Markov, Method::PostMarkov, Method::Exact]),
            Preset::SpinBosonPositivity => {
                let methods = [Method::PostMarkov, Method::PostMarkovAsymptotic];
                let mut out: Option<Table> = None;
                for state in [NamedState::Plus, NamedState::E] {
                    let c = ScenarioConfig { initial: InitialConfig::Named(state), ..cfg.clone() };
                    let full = compare_scenarios(&c, &methods)?;
                    let cols: Vec<usize> =
                        methods.iter().map(|m| full.column_index(&format!("{}_bloch_norm", m.name())).expect("column")).collect();
                    let t = out.get_or_insert_with(|| Table {
                        header: vec!["t".into()],
                        rows: full.rows.iter().map(|r| vec![r[0]]).collect(),
                    });
                    for (m, &i) in methods.iter().zip(&cols) {
                        t.header.push(format!("{}_{}_bloch_norm", state.name(), m.name()));
                        for (row, src) in t.rows.iter_mut().zip(&full.rows) {
                            row.push(src[i]);
                        }
                    }
                }
                Ok(out.expect("at least one initial state"))
            }
        }
    }
}

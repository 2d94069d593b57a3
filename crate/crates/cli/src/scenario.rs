//! Scenario files: a small line-oriented INI dialect.
//!
//! ```text
//! # damped two-level atom
//! [model]
//! type = tls
//! method = post_markov
//! omega = 1
//! gamma = 1
//!
//! [kernel]
//! type = exponential
//! tau = 0.2
//!
//! [initial]
//! state = minus
//!
//! [time]
//! t_end = 5
//! ```
//!
//! Unknown sections and keys are errors. Defaults: `n_samples = 500`,
//! `tol = 1e-10`, output to stdout, and the vacuum as the Brownian-motion
//! initial state.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use postmarkov::generators::GaussianState;
use postmarkov::CorrelationKernel;

use crate::error::ConfigError;

pub const DEFAULT_N_SAMPLES: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Allowed deviation of explicit amplitudes from unit norm.
pub const AMPLITUDE_NORM_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelConfig {
    Tls { omega: f64, gamma: f64 },
    SpinBoson { omega: f64, bias: f64, gamma: f64 },
    Qbm { omega0: f64, gamma: f64 },
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Tls { .. } => "tls",
            ModelConfig::SpinBoson { .. } => "spin_boson",
            ModelConfig::Qbm { .. } => "qbm",
        }
    }

    pub fn is_two_level(&self) -> bool {
        !matches!(self, ModelConfig::Qbm { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Markov,
    PostMarkov,
    PostMarkovAsymptotic,
    Exact,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Markov, Method::PostMarkov, Method::PostMarkovAsymptotic, Method::Exact];

    pub fn name(self) -> &'static str {
        match self {
            Method::Markov => "markov",
            Method::PostMarkov => "post_markov",
            Method::PostMarkovAsymptotic => "post_markov_asymptotic",
            Method::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    /// Upper σ_z eigenstate.
    E,
    /// Lower σ_z eigenstate.
    G,
    /// `(|e⟩ + |g⟩)/√2`.
    Plus,
    /// `(|e⟩ − |g⟩)/√2`.
    Minus,
}

impl NamedState {
    pub fn name(self) -> &'static str {
        match self {
            NamedState::E => "e",
            NamedState::G => "g",
            NamedState::Plus => "plus",
            NamedState::Minus => "minus",
        }
    }

    fn parse(s: &str) -> Option<NamedState> {
        [NamedState::E, NamedState::G, NamedState::Plus, NamedState::Minus].into_iter().find(|n| n.name() == s)
    }

    /// Amplitudes `(a_e, a_g)`.
    pub fn amplitudes(self) -> [(f64, f64); 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            NamedState::E => [(1.0, 0.0), (0.0, 0.0)],
            NamedState::G => [(0.0, 0.0), (1.0, 0.0)],
            NamedState::Plus => [(s, 0.0), (s, 0.0)],
            NamedState::Minus => [(s, 0.0), (-s, 0.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialConfig {
    Named(NamedState),
    /// Explicit `(re, im)` amplitudes of `|e⟩` and `|g⟩`, kept as written.
    Amplitudes { a_e: (f64, f64), a_g: (f64, f64) },
    Moments(GaussianState),
}

impl InitialConfig {
    /// Normalized two-level amplitudes.
    pub fn amplitudes(&self) -> Option<[(f64, f64); 2]> {
        match *self {
            InitialConfig::Named(n) => Some(n.amplitudes()),
            InitialConfig::Amplitudes { a_e, a_g } => {
                let norm = (a_e.0 * a_e.0 + a_e.1 * a_e.1 + a_g.0 * a_g.0 + a_g.1 * a_g.1).sqrt();
                Some([(a_e.0 / norm, a_e.1 / norm), (a_g.0 / norm, a_g.1 / norm)])
            }
            InitialConfig::Moments(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub n_samples: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    pub method: Method,
    /// Required by every method except `markov`.
    pub kernel: Option<CorrelationKernel>,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    /// `None` writes to stdout.
    pub output: Option<String>,
}

impl ScenarioConfig {
    /// Same scenario run with another method, checked for consistency.
    pub fn with_method(&self, method: Method) -> Result<ScenarioConfig, ConfigError> {
        let cfg = ScenarioConfig { method, ..self.clone() };
        cfg.check_method()?;
        Ok(cfg)
    }

    fn check_method(&self) -> Result<(), ConfigError> {
        let m = self.method.name();
        match self.method {
            Method::Markov => Ok(()),
            Method::Exact => {
                if !matches!(self.model, ModelConfig::Tls { .. }) {
                    return Err(ConfigError::Combination(format!("method exact is only available for model tls, not {}", self.model.name())));
                }
                match self.kernel {
                    Some(CorrelationKernel::ExponentialZeroT { .. }) => Ok(()),
                    _ => Err(ConfigError::Combination("method exact needs kernel type exponential".into())),
                }
            }
            Method::PostMarkov => match self.kernel {
                Some(_) => Ok(()),
                None => Err(ConfigError::Combination(format!("method {m} needs a [kernel] section"))),
            },
            Method::PostMarkovAsymptotic => match self.kernel {
                Some(CorrelationKernel::DiscreteModes { .. }) => {
                    Err(ConfigError::Combination("discrete kernels have no asymptotic coefficients".into()))
                }
                Some(_) => Ok(()),
                None => Err(ConfigError::Combination(format!("method {m} needs a [kernel] section"))),
            },
        }
    }
}

const SECTIONS: [&str; 5] = ["model", "kernel", "initial", "time", "output"];

fn known_keys(section: &str) -> &'static [&'static str] {
    match section {
        "model" => &["type", "method", "omega", "gamma", "Omega", "omega0"],
        "kernel" => &["type", "tau", "kT", "Lambda", "modes"],
        "initial" => &["state", "a_e", "a_g", "mq", "mp", "sqq", "spp", "sqp"],
        "time" => &["t_end", "n_samples", "tol"],
        "output" => &["path"],
        _ => &[],
    }
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Raw entries of one section.
#[derive(Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    fn require(&mut self, section: &str, key: &str) -> Result<(String, usize), ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::Missing { section: section.into(), key: key.into() })
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take(key).map(|(v, line)| parse_real(key, &v, line)).transpose()
    }

    fn require_real(&mut self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let (v, line) = self.require(section, key)?;
        parse_real(key, &v, line)
    }

    /// Rejects keys that are known to the section but not used by the
    /// selected variant.
    fn reject_unused(&self, section: &str, context: &str) -> Result<(), ConfigError> {
        match self.entries.iter().find(|(_, e)| !e.used) {
            Some((key, e)) => Err(ConfigError::InvalidValue {
                line: e.line,
                key: key.clone(),
                message: format!("key does not apply to {context} in section [{section}]"),
            }),
            None => Ok(()),
        }
    }
}

fn parse_real(key: &str, v: &str, line: usize) -> Result<f64, ConfigError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(ConfigError::InvalidValue { line, key: key.into(), message: format!("expected a finite decimal number, got `{v}`") }),
    }
}

fn positive(key: &str, x: f64, line: usize) -> Result<f64, ConfigError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::InvalidValue { line, key: key.into(), message: format!("must be positive, got {x}") })
    }
}

fn parse_complex(key: &str, v: &str, line: usize) -> Result<(f64, f64), ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(ConfigError::InvalidValue { line, key: key.into(), message: format!("expected `re,im`, got `{v}`") });
    }
    Ok((parse_real(key, parts[0], line)?, parse_real(key, parts[1], line)?))
}

fn parse_modes(v: &str, line: usize) -> Result<Vec<(f64, f64)>, ConfigError> {
    v.split(',')
        .map(|pair| {
            let (g, w) = pair.trim().split_once(':').ok_or_else(|| ConfigError::InvalidValue {
                line,
                key: "modes".into(),
                message: format!("expected `g:w` pairs, got `{}`", pair.trim()),
            })?;
            Ok((parse_real("modes", g.trim(), line)?, parse_real("modes", w.trim(), line)?))
        })
        .collect()
}

/// Splits the text into sections, checking syntax, section names, key names
/// and duplicates.
fn tokenize(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("unterminated section header `{content}`") })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::Syntax { line, message: format!("unknown section [{name}]") });
            }
            if sections.contains_key(name) {
                return Err(ConfigError::Syntax { line, message: format!("duplicate section [{name}]") });
            }
            sections.insert(name.to_string(), Section { line, entries: BTreeMap::new() });
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") })?;
        let (key, value) = (key.trim(), value.trim());
        let section = current
            .as_ref()
            .ok_or_else(|| ConfigError::Syntax { line, message: "entry before any section header".into() })?;
        if !known_keys(section).contains(&key) {
            return Err(ConfigError::UnknownKey { line, section: section.clone(), key: key.to_string() });
        }
        if value.is_empty() {
            return Err(ConfigError::InvalidValue { line, key: key.to_string(), message: "empty value".into() });
        }
        let entries = &mut sections.get_mut(section).expect("current section exists").entries;
        if entries.contains_key(key) {
            return Err(ConfigError::Syntax { line, message: format!("duplicate key `{key}` in section [{section}]") });
        }
        entries.insert(key.to_string(), Entry { value: value.to_string(), line, used: false });
    }
    Ok(sections)
}

fn parse_model(s: &mut Section) -> Result<(ModelConfig, Method), ConfigError> {
    let (ty, ty_line) = s.require("model", "type")?;
    let (method, m_line) = s.require("model", "method")?;
    let method = Method::parse(&method).ok_or_else(|| ConfigError::InvalidValue {
        line: m_line,
        key: "method".into(),
        message: format!("expected markov, post_markov, post_markov_asymptotic or exact, got `{method}`"),
    })?;
    let gamma_line = s.entries.get("gamma").map(|e| e.line).unwrap_or(s.line);
    let gamma = s.require_real("model", "gamma")?;
    if gamma < 0.0 {
        return Err(ConfigError::InvalidValue { line: gamma_line, key: "gamma".into(), message: format!("must be non-negative, got {gamma}") });
    }
    let model = match ty.as_str() {
        "tls" => ModelConfig::Tls { omega: s.require_real("model", "omega")?, gamma },
        "spin_boson" => ModelConfig::SpinBoson {
            omega: s.require_real("model", "omega")?,
            bias: s.real("Omega")?.unwrap_or(0.0),
            gamma,
        },
        "qbm" => {
            let line = s.entries.get("omega0").map(|e| e.line).unwrap_or(s.line);
            ModelConfig::Qbm { omega0: positive("omega0", s.require_real("model", "omega0")?, line)?, gamma }
        }
        other => {
            return Err(ConfigError::InvalidValue {
                line: ty_line,
                key: "type".into(),
                message: format!("expected tls, spin_boson or qbm, got `{other}`"),
            })
        }
    };
    s.reject_unused("model", &format!("model type {ty}"))?;
    Ok((model, method))
}

fn parse_kernel(s: &mut Section) -> Result<CorrelationKernel, ConfigError> {
    let (ty, ty_line) = s.require("kernel", "type")?;
    let line_of = |s: &Section, k: &str| s.entries.get(k).map(|e| e.line).unwrap_or(s.line);
    let kernel = match ty.as_str() {
        "exponential" => {
            let line = line_of(s, "tau");
            CorrelationKernel::ExponentialZeroT { tau: positive("tau", s.require_real("kernel", "tau")?, line)? }
        }
        "ohmic_high_t" => {
            let (l1, l2) = (line_of(s, "kT"), line_of(s, "Lambda"));
            CorrelationKernel::OhmicHighTemp {
                kt: positive("kT", s.require_real("kernel", "kT")?, l1)?,
                cutoff: positive("Lambda", s.require_real("kernel", "Lambda")?, l2)?,
            }
        }
        "discrete" => {
            let (v, line) = s.require("kernel", "modes")?;
            CorrelationKernel::DiscreteModes { modes: parse_modes(&v, line)? }
        }
        other => {
            return Err(ConfigError::InvalidValue {
                line: ty_line,
                key: "type".into(),
                message: format!("expected exponential, ohmic_high_t or discrete, got `{other}`"),
            })
        }
    };
    s.reject_unused("kernel", &format!("kernel type {ty}"))?;
    kernel.validate().map_err(|e| ConfigError::InvalidValue { line: ty_line, key: "type".into(), message: e.to_string() })?;
    Ok(kernel)
}

fn parse_initial(s: Option<&mut Section>, model: &ModelConfig) -> Result<InitialConfig, ConfigError> {
    if !model.is_two_level() {
        let Some(s) = s else {
            return Ok(InitialConfig::Moments(GaussianState::vacuum()));
        };
        let v = GaussianState::vacuum();
        let mq = s.real("mq")?.unwrap_or(v.mq);
        let mp = s.real("mp")?.unwrap_or(v.mp);
        let sqq = s.real("sqq")?.unwrap_or(v.sqq);
        let spp = s.real("spp")?.unwrap_or(v.spp);
        let sqp = s.real("sqp")?.unwrap_or(v.sqp);
        s.reject_unused("initial", "model qbm")?;
        let g = GaussianState::new(mq, mp, sqq, spp, sqp)
            .map_err(|e| ConfigError::InvalidValue { line: s.line, key: "sqq".into(), message: e.to_string() })?;
        return Ok(InitialConfig::Moments(g));
    }

    let s = s.ok_or_else(|| ConfigError::Missing { section: "initial".into(), key: "state".into() })?;
    let context = format!("model {}", model.name());
    if let Some((name, line)) = s.take("state") {
        let n = NamedState::parse(&name).ok_or_else(|| ConfigError::InvalidValue {
            line,
            key: "state".into(),
            message: format!("expected e, g, plus or minus, got `{name}`"),
        })?;
        s.reject_unused("initial", &format!("{context} with a named state"))?;
        return Ok(InitialConfig::Named(n));
    }
    let (ae, line) = s.require("initial", "a_e")?;
    let a_e = parse_complex("a_e", &ae, line)?;
    let (ag, line_g) = s.require("initial", "a_g")?;
    let a_g = parse_complex("a_g", &ag, line_g)?;
    s.reject_unused("initial", &context)?;
    let norm = a_e.0 * a_e.0 + a_e.1 * a_e.1 + a_g.0 * a_g.0 + a_g.1 * a_g.1;
    if (norm - 1.0).abs() > AMPLITUDE_NORM_TOL {
        return Err(ConfigError::InvalidValue { line, key: "a_e".into(), message: format!("amplitudes have norm² {norm}, expected 1") });
    }
    Ok(InitialConfig::Amplitudes { a_e, a_g })
}

fn parse_time(s: &mut Section) -> Result<TimeConfig, ConfigError> {
    let t_line = s.entries.get("t_end").map(|e| e.line).unwrap_or(s.line);
    let t_end = s.require_real("time", "t_end")?;
    if t_end < 0.0 {
        return Err(ConfigError::InvalidValue { line: t_line, key: "t_end".into(), message: format!("must be non-negative, got {t_end}") });
    }
    let n_samples = match s.take("n_samples") {
        Some((v, line)) => match v.parse::<usize>() {
            Ok(n) if n >= 2 || t_end == 0.0 => n,
            _ => {
                return Err(ConfigError::InvalidValue { line, key: "n_samples".into(), message: format!("expected an integer >= 2, got `{v}`") })
            }
        },
        None => DEFAULT_N_SAMPLES,
    };
    let tol = match s.take("tol") {
        Some((v, line)) => positive("tol", parse_real("tol", &v, line)?, line)?,
        None => DEFAULT_TOL,
    };
    Ok(TimeConfig { t_end, n_samples, tol })
}

/// Parses scenario text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut sections = tokenize(text)?;
    let mut model_section =
        sections.remove("model").ok_or_else(|| ConfigError::Missing { section: "model".into(), key: "type".into() })?;
    let (model, method) = parse_model(&mut model_section)?;
    let kernel = sections.remove("kernel").map(|mut s| parse_kernel(&mut s)).transpose()?;
    let mut initial_section = sections.remove("initial");
    let initial = parse_initial(initial_section.as_mut(), &model)?;
    let mut time_section =
        sections.remove("time").ok_or_else(|| ConfigError::Missing { section: "time".into(), key: "t_end".into() })?;
    let time = parse_time(&mut time_section)?;
    let output = match sections.remove("output") {
        Some(mut s) => s.take("path").map(|(p, _)| p),
        None => None,
    };
    let cfg = ScenarioConfig { model, method, kernel, initial, time, output };
    cfg.check_method()?;
    Ok(cfg)
}

fn real(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `cfg` in the scenario grammar; [`parse_scenario`] reads it back
/// unchanged.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    out.push_str("[model]\n");
    let _ = writeln!(out, "type = {}", cfg.model.name());
    let _ = writeln!(out, "method = {}", cfg.method.name());
    match cfg.model {
        ModelConfig::Tls { omega, gamma } => {
            let _ = writeln!(out, "omega = {}\ngamma = {}", real(omega), real(gamma));
        }
        ModelConfig::SpinBoson { omega, bias, gamma } => {
            let _ = writeln!(out, "omega = {}\ngamma = {}\nOmega = {}", real(omega), real(gamma), real(bias));
        }
        ModelConfig::Qbm { omega0, gamma } => {
            let _ = writeln!(out, "omega0 = {}\ngamma = {}", real(omega0), real(gamma));
        }
    }

    if let Some(k) = &cfg.kernel {
        out.push_str("\n[kernel]\n");
        match k {
            CorrelationKernel::ExponentialZeroT { tau } => {
                let _ = writeln!(out, "type = exponential\ntau = {}", real(*tau));
            }
            CorrelationKernel::OhmicHighTemp { kt, cutoff } => {
                let _ = writeln!(out, "type = ohmic_high_t\nkT = {}\nLambda = {}", real(*kt), real(*cutoff));
            }
            CorrelationKernel::DiscreteModes { modes } => {
                let list: Vec<String> = modes.iter().map(|(g, w)| format!("{}:{}", real(*g), real(*w))).collect();
                let _ = writeln!(out, "type = discrete\nmodes = {}", list.join(", "));
            }
        }
    }

    out.push_str("\n[initial]\n");
    match &cfg.initial {
        InitialConfig::Named(n) => {
            let _ = writeln!(out, "state = {}", n.name());
        }
        InitialConfig::Amplitudes { a_e, a_g } => {
            let _ = writeln!(out, "a_e = {},{}\na_g = {},{}", real(a_e.0), real(a_e.1), real(a_g.0), real(a_g.1));
        }
        InitialConfig::Moments(g) => {
            let _ = writeln!(
                out,
                "mq = {}\nmp = {}\nsqq = {}\nspp = {}\nsqp = {}",
                real(g.mq),
                real(g.mp),
                real(g.sqq),
                real(g.spp),
                real(g.sqp)
            );
        }
    }

    out.push_str("\n[time]\n");
    let _ = writeln!(out, "t_end = {}\nn_samples = {}\ntol = {}", real(cfg.time.t_end), cfg.time.n_samples, real(cfg.time.tol));

    if let Some(p) = &cfg.output {
        let _ = writeln!(out, "\n[output]\npath = {p}");
    }
    out
}

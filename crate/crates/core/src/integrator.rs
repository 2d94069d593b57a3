//! Fixed-step RK4 and step-doubling adaptive RK4 on flattened real coordinates,
//! plus [`evolve`], which drives a [`GeneratorSpec`] over an output grid.

use crate::bath::CoefficientSet;
use crate::diagnostics::{diagnose, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, State};

/// Consecutive accepted steps before the step size grows.
const GROW_AFTER: u32 = 5;
const GROW_FACTOR: f64 = 1.5;
/// Largest step as a fraction of the integration span.
const MAX_STEP_FRACTION: f64 = 1.0 / 50.0;
/// Smallest step as a fraction of the integration span.
const MIN_STEP_FRACTION: f64 = 1e-12;

/// A state at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeState {
    pub t: f64,
    pub state: State,
}

impl OdeState {
    pub fn new(t: f64, state: State) -> Self {
        OdeState { t, state }
    }
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }
}

fn eval<F>(f: &mut F, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    f(t, y, dy)?;
    if dy.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

fn rk4_into<F>(f: &mut F, t: f64, y: &[f64], h: f64, out: &mut [f64], w: &mut Workspace) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    eval(f, t, y, &mut w.k1)?;
    for i in 0..n {
        w.tmp[i] = y[i] + 0.5 * h * w.k1[i];
    }
    eval(f, t + 0.5 * h, &w.tmp, &mut w.k2)?;
    for i in 0..n {
        w.tmp[i] = y[i] + 0.5 * h * w.k2[i];
    }
    eval(f, t + 0.5 * h, &w.tmp, &mut w.k3)?;
    for i in 0..n {
        w.tmp[i] = y[i] + h * w.k3[i];
    }
    eval(f, t + h, &w.tmp, &mut w.k4)?;
    for i in 0..n {
        out[i] = y[i] + h / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
    Ok(())
}

/// One classical RK4 step of `ẏ = f(t, y)` on raw coordinates.
pub fn rk4_step_coords<F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::usage(format!("step must be positive, got {h}")));
    }
    let mut out = vec![0.0; y.len()];
    rk4_into(f, t, y, h, &mut out, &mut Workspace::new(y.len()))?;
    Ok(out)
}

/// Coordinate-level closure for a state-valued right-hand side.
fn lift<'a, F>(f: &'a mut F, template: &'a State) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> + 'a
where
    F: FnMut(f64, &State) -> Result<State>,
{
    move |t, y, dy| {
        let d = f(t, &template.with_coords(y))?;
        d.write_coords(dy);
        Ok(())
    }
}

/// One classical RK4 step; `t` advances by `h`.
pub fn rk4_step<F>(f: &mut F, s: &OdeState, h: f64) -> Result<OdeState>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    let y = s.state.coords();
    let out = rk4_step_coords(&mut lift(f, &s.state), s.t, &y, h)?;
    Ok(OdeState { t: s.t + h, state: s.state.with_coords(&out) })
}

fn check_grid(t0: f64, t1: f64, grid: &[f64]) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(Error::usage(format!("need finite t0 <= t1, got [{t0}, {t1}]")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::usage("output grid must be strictly increasing"));
    }
    if grid.iter().any(|&g| !(g >= t0 && g <= t1)) {
        return Err(Error::usage(format!("output grid must lie within [{t0}, {t1}]")));
    }
    Ok(())
}

/// Step-doubling adaptive RK4 on raw coordinates.
///
/// Each trial compares one step of size `h` with two of size `h/2`; it is
/// accepted when the largest coordinate difference is at most `tol`, and the
/// two-half-step result is kept. Rejected steps halve `h`; five consecutive
/// acceptances grow it by 1.5, up to `(t1 − t0)/50`. Steps are shortened to
/// land exactly on each grid time. Returns the state at every grid time.
pub fn integrate_adaptive_coords<F>(f: &mut F, t0: f64, y0: &[f64], t1: f64, tol: f64, grid: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::usage(format!("tolerance must be positive, got {tol}")));
    }
    check_grid(t0, t1, grid)?;
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("initial state must be finite"));
    }

    let n = y0.len();
    let span = t1 - t0;
    let h_max = span * MAX_STEP_FRACTION;
    let h_min = span * MIN_STEP_FRACTION;
    let mut w = Workspace::new(n);
    let mut full = vec![0.0; n];
    let mut mid = vec![0.0; n];
    let mut half = vec![0.0; n];

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = h_max;
    let mut accepted_run = 0u32;
    let mut out = Vec::with_capacity(grid.len());

    for &target in grid {
        while t < target {
            let remaining = target - t;
            let lands = h >= remaining;
            let step = if lands { remaining } else { h };

            rk4_into(f, t, &y, step, &mut full, &mut w)?;
            rk4_into(f, t, &y, 0.5 * step, &mut mid, &mut w)?;
            rk4_into(f, t + 0.5 * step, &mid, 0.5 * step, &mut half, &mut w)?;
            let err = full.iter().zip(&half).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

            if err <= tol {
                t = if lands { target } else { t + step };
                std::mem::swap(&mut y, &mut half);
                accepted_run += 1;
                if accepted_run >= GROW_AFTER {
                    h = (h * GROW_FACTOR).min(h_max);
                    accepted_run = 0;
                }
            } else if err.is_finite() {
                h = 0.5 * step;
                accepted_run = 0;
                if h < h_min {
                    return Err(Error::StepUnderflow { t });
                }
            } else {
                return Err(Error::NonFinite { t });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Adaptive integration of a state-valued right-hand side; one state per grid time.
pub fn integrate_adaptive<F>(f: &mut F, s0: &OdeState, t1: f64, tol: f64, grid: &[f64]) -> Result<Vec<OdeState>>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    let y0 = s0.state.coords();
    let ys = integrate_adaptive_coords(&mut lift(f, &s0.state), s0.t, &y0, t1, tol, grid)?;
    Ok(grid.iter().zip(ys).map(|(&t, y)| OdeState { t, state: s0.state.with_coords(&y) }).collect())
}

/// One output point of an evolution.
#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    pub coefficients: CoefficientSet,
    pub diagnostics: DiagnosticsRecord,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn states(&self) -> impl Iterator<Item = &State> {
        self.samples.iter().map(|s| &s.state)
    }
}

/// `n` equally spaced times from 0 to `t_end` inclusive (`[0]` when `t_end = 0`).
pub fn uniform_grid(t_end: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::usage(format!("t_end must be finite and non-negative, got {t_end}")));
    }
    if t_end == 0.0 {
        return Ok(vec![0.0]);
    }
    if n < 2 {
        return Err(Error::usage(format!("need at least 2 samples for t_end > 0, got {n}")));
    }
    let dt = t_end / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    g[n - 1] = t_end;
    Ok(g)
}

/// Evolves `initial` under `spec` from `grid[0]`, recording coefficients and
/// diagnostics at every grid time.
pub fn evolve(spec: &GeneratorSpec, initial: &State, grid: &[f64], tol: f64) -> Result<Trajectory> {
    let (&t0, &t1) = match (grid.first(), grid.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::usage("output grid is empty")),
    };
    match (spec.dim(), initial) {
        (Some(d), State::Matrix(m)) if m.dim() != d => {
            return Err(Error::usage(format!("initial state is {}-dimensional, system is {d}-dimensional", m.dim())))
        }
        (Some(_), State::Gaussian(_)) | (None, State::Matrix(_)) => {
            return Err(Error::usage("initial state does not match the generator"))
        }
        _ => {}
    }

    let states = if grid.len() == 1 {
        vec![OdeState::new(t0, initial.clone())]
    } else {
        let mut f = |t: f64, s: &State| spec.rhs(t, s);
        let s0 = OdeState::new(t0, initial.clone());
        let mut out = vec![s0.clone()];
        out.extend(integrate_adaptive(&mut f, &s0, t1, tol, &grid[1..])?);
        out
    };

    let samples = states
        .into_iter()
        .map(|s| {
            Ok(Sample {
                t: s.t,
                coefficients: spec.coefficients(s.t)?,
                diagnostics: diagnose(&s.state)?,
                state: s.state,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { grid: grid.to_vec(), samples })
}

//! Adaptive Simpson quadrature for complex-valued integrands.

use crate::linalg::C64;

/// Maximum recursion depth before a subinterval is declared non-convergent.
pub const MAX_DEPTH: u32 = 30;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns `None` if some subinterval fails to meet its share of the tolerance
/// within [`MAX_DEPTH`] bisections.
pub fn adaptive_simpson<F>(f: &mut F, a: f64, b: f64, tol: f64) -> Option<C64>
where
    F: FnMut(f64) -> C64,
{
    if a == b {
        return Some(C64::new(0.0, 0.0));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    refine(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: C64, fm: C64, fb: C64) -> C64 {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(f: &mut F, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> Option<C64>
where
    F: FnMut(f64) -> C64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

//! Scalar root finding on a sign-changing bracket.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootOptions {
    /// Stop once `|f(x)| < residual_tol`.
    pub residual_tol: f64,
    /// Stop once the bracket is narrower than this.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            residual_tol: 1e-10,
            x_tol: 1e-15,
            max_iter: 200,
        }
    }
}

/// Bisection safeguarded secant. Each step tries the secant point and falls
/// back to the midpoint when it leaves the bracket or shrinks it too little.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, opts: &RootOptions) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoRootInBracket { lo: a, hi: b });
    }
    if libm::fabs(fa) < opts.residual_tol {
        return Ok(a);
    }
    if libm::fabs(fb) < opts.residual_tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRootInBracket { lo: a, hi: b });
    }
    let mut last_width = b - a;
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (a + b);
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if secant.is_finite() && secant > a && secant < b {
            secant
        } else {
            mid
        };
        let fx = f(x)?;
        if libm::fabs(fx) < opts.residual_tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        let width = b - a;
        if width > 0.5 * last_width {
            // secant stalled on one side, force a halving
            let m = 0.5 * (a + b);
            let fm = f(m)?;
            if libm::fabs(fm) < opts.residual_tol {
                return Ok(m);
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
        }
        last_width = b - a;
        if last_width <= opts.x_tol * (1.0 + libm::fabs(a)) {
            return Ok(if libm::fabs(fa) < libm::fabs(fb) { a } else { b });
        }
    }
    Err(Error::NoConvergence("bracketed root search".into()))
}

//! Legendre transform of `eta`: saddle point `theta*(x)`, rate function
//! `I(x) = theta* x - eta(theta*)`, and derivatives of `I` for the
//! moderate-deviation expansions.
//!
//! `eta` is strictly convex (`eta'' > 0`) with `eta'` ranging over
//! `(0, ∞)` for every nondegenerate model, so the saddle equation
//! `eta'(theta*) = x` has a unique root for every `x > 0`.

use crate::cgf::Cgf;
use crate::error::{Error, Result};

/// Residual tolerance required of the saddle solve (scaled by `max(1, x)`).
pub const RESIDUAL_TOL: f64 = 1e-10;
/// After meeting [`RESIDUAL_TOL`] the iteration keeps polishing toward this
/// target while it still makes progress; high-order finite differences of
/// `theta*(x)` depend on the extra digits.
const POLISH_TOL: f64 = 1e-14;
const MAX_ITERATIONS: usize = 200;

/// Solved saddle point bundle at one target rate `x`.
#[derive(Debug, Clone, Copy)]
pub struct SaddlePoint {
    /// Target mean rate.
    pub x: f64,
    /// Root of `eta'(theta*) = x`.
    pub theta_star: f64,
    /// Rate function value `I(x) = theta* x - eta(theta*) >= 0`.
    pub rate: f64,
    /// `|eta'(theta*) - x|` actually achieved.
    pub residual: f64,
    /// `eta''(theta*) > 0`.
    pub eta_d2: f64,
    /// `eta'''(theta*)`.
    pub eta_d3: f64,
    /// `eta''''(theta*)`.
    pub eta_d4: f64,
}

impl SaddlePoint {
    /// `I''(x) = 1 / eta''(theta*)` by Legendre duality.
    pub fn rate_d2(&self) -> f64 {
        1.0 / self.eta_d2
    }
}

/// Solve `eta'(theta*) = x` by Newton iteration with a bracketing
/// bisection fallback.
///
/// The bracket starts at `[-1, 1]` and expands dyadically until `eta'`
/// straddles `x`; the initial guess is `log(x / (nu + rho G))` clamped to
/// the bracket.
pub fn solve_saddle(cgf: &Cgf, x: f64) -> Result<SaddlePoint> {
    if cgf.params().is_degenerate() {
        return Err(Error::DegenerateModel);
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!(
            "saddle target x must lie in the range (0, inf) of eta', got {x}"
        )));
    }

    let d1 = |theta: f64| cgf.eta_deriv(theta, 1).expect("order 1 is valid");
    let d2 = |theta: f64| cgf.eta_deriv(theta, 2).expect("order 2 is valid");

    // Dyadic bracket expansion; eta' is increasing with range (0, inf).
    let mut lo = -1.0f64;
    let mut hi = 1.0f64;
    for _ in 0..80 {
        if d1(hi) >= x {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..80 {
        if d1(lo) <= x {
            break;
        }
        lo *= 2.0;
    }
    if !(d1(lo) <= x && d1(hi) >= x) {
        return Err(Error::SaddleNoConvergence { x, residual: f64::INFINITY, iterations: 0 });
    }

    let mut theta = (x / cgf.mean_rate()).ln().clamp(lo, hi);
    let mut residual = f64::INFINITY;
    let mut best = (theta, residual);

    for iteration in 0..MAX_ITERATIONS {
        let f = d1(theta) - x;
        residual = f.abs();
        if residual < best.1 {
            best = (theta, residual);
        }
        if residual <= POLISH_TOL * x.max(1.0) {
            break;
        }
        // Maintain the bracket from the sign of the residual.
        if f > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        let slope = d2(theta);
        let newton = theta - f / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == theta {
            break;
        }
        theta = next;
        if iteration == MAX_ITERATIONS - 1 {
            theta = best.0;
        }
    }

    let (theta_star, residual) = {
        let f = d1(theta) - x;
        if f.abs() <= best.1 {
            (theta, f.abs())
        } else {
            best
        }
    };

    if residual > RESIDUAL_TOL * x.max(1.0) {
        return Err(Error::SaddleNoConvergence { x, residual, iterations: MAX_ITERATIONS });
    }

    let mut rate = theta_star * x - cgf.eta(theta_star);
    if rate < 0.0 {
        debug_assert!(rate > -1e-12 * x.max(1.0), "rate {rate} too negative at x={x}");
        rate = 0.0;
    }

    Ok(SaddlePoint {
        x,
        theta_star,
        rate,
        residual,
        eta_d2: cgf.eta_deriv(theta_star, 2)?,
        eta_d3: cgf.eta_deriv(theta_star, 3)?,
        eta_d4: cgf.eta_deriv(theta_star, 4)?,
    })
}

/// Derivatives `I^(i)(x)` for `i = 2, ..., m - 1`.
///
/// Orders up to four come from the closed chain at `theta*`:
/// `I'' = 1/eta''`, `I''' = -eta'''/(eta'')^3`,
/// `I'''' = (3 (eta''')^2 - eta'' eta'''') / (eta'')^5`.
/// `I'(x) = theta*(x)` by the envelope theorem, so orders five and above
/// are central finite differences of `theta*(x)` (step
/// `1e-3 * max(1, |x|)`, one Richardson extrapolation).
pub fn rate_derivs(cgf: &Cgf, x: f64, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::Domain(format!("rate_derivs needs m >= 2, got {m}")));
    }
    let saddle = solve_saddle(cgf, x)?;
    let mut out = Vec::with_capacity(m - 2);
    for i in 2..m {
        out.push(match i {
            2 => 1.0 / saddle.eta_d2,
            3 => -saddle.eta_d3 / saddle.eta_d2.powi(3),
            4 => {
                (3.0 * saddle.eta_d3 * saddle.eta_d3 - saddle.eta_d2 * saddle.eta_d4)
                    / saddle.eta_d2.powi(5)
            }
            _ => theta_star_derivative(cgf, x, i - 1)?,
        });
    }
    Ok(out)
}

/// `d^n theta* / dx^n` by an order-`n` central difference with one
/// Richardson step (from steps `h` and `2h`).
///
/// The step balances the `h^-n` roundoff amplification of the ~1e-16-level
/// noise in solved `theta*` values against the `h^2` truncation error:
/// `h = 10^(-13/(n+2)) * max(1, |x|)`. A fixed small step (say 1e-3) looks
/// tempting but the stencil noise `2^n eps / h^n` already exceeds the
/// derivative itself at n = 5.
fn theta_star_derivative(cgf: &Cgf, x: f64, n: usize) -> Result<f64> {
    let mut h = 10f64.powf(-13.0 / (n as f64 + 2.0)) * x.abs().max(1.0);
    // Keep every stencil point strictly positive (the widest stencil
    // reaches n/2 * 2h below x).
    let half_span = n as f64 / 2.0;
    if x - (2.0 * half_span + 1.0) * h <= 0.0 {
        h = x / (2.0 * half_span + 2.0);
    }

    let stencil = |h: f64| -> Result<f64> {
        let mut acc = 0.0;
        let mut binom = 1.0f64;
        for k in 0..=n {
            let offset = (half_span - k as f64) * h;
            let theta = solve_saddle(cgf, x + offset)?.theta_star;
            acc += if k % 2 == 0 { binom } else { -binom } * theta;
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
        Ok(acc / h.powi(n as i32))
    };

    let fine = stencil(h)?;
    let coarse = stencil(2.0 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

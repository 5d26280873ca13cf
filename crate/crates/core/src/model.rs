//! Shot-noise kernel shapes and model parameters.
//!
//! Every kernel carries *closed-form* cumulative and tail integrals so that
//! downstream quantities (cumulant functions, saddle points, transform
//! oracles) never stack quadrature error on top of the inner integral:
//!
//! * `l1_norm`      — `G = ∫_0^∞ g(s) ds`
//! * `cum_integral` — `G(u) = ∫_0^u g(s) ds`
//! * `tail_integral`— `T(u) = ∫_u^∞ g(s) ds = G - G(u)`
//! * `double_tail`  — `D(t) = ∫_t^∞ ∫_u^∞ g(s) ds du = ∫_t^∞ (s-t) g(s) ds`

use crate::error::{Error, Result};

/// A nonnegative, integrable shot-noise response kernel `g : [0, ∞) → [0, ∞)`.
///
/// The power-law variant is parameterized as `c / (1+s)^p` (not `c / s^p`)
/// so the kernel stays locally bounded at the origin; its exponent must
/// satisfy `p > 2` so the polynomial decay order `r = p - 2` is positive.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `g(s) = a e^{-b s}` with `a ≥ 0`, `b > 0`.
    Exponential { amplitude: f64, decay: f64 },
    /// `g(s) = c / (1+s)^p` with `c ≥ 0`, `p > 2`.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// `g(s) = h` on `[0, w]`, zero afterwards; `h ≥ 0`, `w > 0`.
    BoxCar { height: f64, width: f64 },
    /// Piecewise-linear interpolation through `(s, g(s))` knots with
    /// strictly increasing abscissas and `g ≥ 0`; zero outside the knot
    /// range. Integrals use exact trapezoid algebra.
    Tabulated { knots: Vec<(f64, f64)> },
    /// `g ≡ 0`.
    Zero,
}

impl Kernel {
    pub fn exponential(amplitude: f64, decay: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponential kernel amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !(decay.is_finite() && decay > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponential kernel decay must be finite and > 0, got {decay}"
            )));
        }
        Ok(Kernel::Exponential { amplitude, decay })
    }

    pub fn power_law(amplitude: f64, exponent: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power-law kernel amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !(exponent.is_finite() && exponent > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "power-law kernel exponent must be > 2 so the decay order p - 2 is positive, got {exponent}"
            )));
        }
        Ok(Kernel::PowerLaw { amplitude, exponent })
    }

    pub fn box_car(height: f64, width: f64) -> Result<Self> {
        if !(height.is_finite() && height >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box-car kernel height must be finite and >= 0, got {height}"
            )));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box-car kernel width must be finite and > 0, got {width}"
            )));
        }
        Ok(Kernel::BoxCar { height, width })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter(
                "tabulated kernel needs at least one knot".into(),
            ));
        }
        for &(s, g) in &knots {
            if !(s.is_finite() && s >= 0.0 && g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated kernel knot ({s}, {g}) must be finite with s >= 0 and g >= 0"
                )));
            }
        }
        for pair in knots.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidParameter(format!(
                    "tabulated kernel abscissas must be strictly increasing, got {} then {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        Ok(Kernel::Tabulated { knots })
    }

    pub fn zero() -> Self {
        Kernel::Zero
    }

    /// Pointwise value `g(s)` for `s ≥ 0`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        check_nonneg(s, "kernel argument")?;
        Ok(match self {
            Kernel::Exponential { amplitude, decay } => amplitude * (-decay * s).exp(),
            Kernel::PowerLaw { amplitude, exponent } => amplitude * (1.0 + s).powf(-exponent),
            Kernel::BoxCar { height, width } => {
                if s <= *width {
                    *height
                } else {
                    0.0
                }
            }
            Kernel::Tabulated { knots } => {
                let first = knots[0].0;
                let last = knots[knots.len() - 1].0;
                if s < first || s > last {
                    0.0
                } else {
                    let idx = knots.partition_point(|&(x, _)| x <= s);
                    if idx == knots.len() {
                        knots[knots.len() - 1].1
                    } else {
                        let (x0, g0) = knots[idx - 1];
                        let (x1, g1) = knots[idx];
                        g0 + (g1 - g0) * (s - x0) / (x1 - x0)
                    }
                }
            }
            Kernel::Zero => 0.0,
        })
    }

    /// `G = ∫_0^∞ g(s) ds`, finite for every admissible kernel.
    pub fn l1_norm(&self) -> f64 {
        match self {
            Kernel::Exponential { amplitude, decay } => amplitude / decay,
            Kernel::PowerLaw { amplitude, exponent } => amplitude / (exponent - 1.0),
            Kernel::BoxCar { height, width } => height * width,
            Kernel::Tabulated { knots } => knots
                .windows(2)
                .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
                .sum(),
            Kernel::Zero => 0.0,
        }
    }

    /// `G(u) = ∫_0^u g(s) ds`; nondecreasing, `G(0) = 0`, `G(u) → G`.
    pub fn cum_integral(&self, u: f64) -> Result<f64> {
        check_nonneg(u, "cum_integral argument")?;
        Ok(match self {
            Kernel::Exponential { amplitude, decay } => {
                -(amplitude / decay) * (-decay * u).exp_m1()
            }
            Kernel::PowerLaw { amplitude, exponent } => {
                amplitude / (exponent - 1.0) * (1.0 - (1.0 + u).powf(1.0 - exponent))
            }
            Kernel::BoxCar { height, width } => height * u.min(*width),
            Kernel::Tabulated { knots } => {
                let mut acc = 0.0;
                for pair in knots.windows(2) {
                    let (x0, g0) = pair[0];
                    let (x1, g1) = pair[1];
                    if u <= x0 {
                        break;
                    }
                    if u >= x1 {
                        acc += 0.5 * (g0 + g1) * (x1 - x0);
                    } else {
                        let slope = (g1 - g0) / (x1 - x0);
                        let du = u - x0;
                        acc += g0 * du + 0.5 * slope * du * du;
                        break;
                    }
                }
                acc
            }
            Kernel::Zero => 0.0,
        })
    }

    /// `T(u) = ∫_u^∞ g(s) ds = G - G(u)`, clamped at zero against roundoff.
    pub fn tail_integral(&self, u: f64) -> Result<f64> {
        check_nonneg(u, "tail_integral argument")?;
        Ok(match self {
            // Direct forms where they are sharper than G - G(u).
            Kernel::Exponential { amplitude, decay } => amplitude / decay * (-decay * u).exp(),
            Kernel::PowerLaw { amplitude, exponent } => {
                amplitude / (exponent - 1.0) * (1.0 + u).powf(1.0 - exponent)
            }
            _ => (self.l1_norm() - self.cum_integral(u)?).max(0.0),
        })
    }

    /// `D(t) = ∫_t^∞ ∫_u^∞ g(s) ds du`; nonincreasing with `D(t) → 0`.
    pub fn double_tail(&self, t: f64) -> Result<f64> {
        check_nonneg(t, "double_tail argument")?;
        Ok(match self {
            Kernel::Exponential { amplitude, decay } => {
                amplitude / (decay * decay) * (-decay * t).exp()
            }
            Kernel::PowerLaw { amplitude, exponent } => {
                amplitude / ((exponent - 1.0) * (exponent - 2.0))
                    * (1.0 + t).powf(2.0 - exponent)
            }
            Kernel::BoxCar { height, width } => {
                if t < *width {
                    0.5 * height * (width - t) * (width - t)
                } else {
                    0.0
                }
            }
            // D(t) = ∫_t^∞ (s - t) g(s) ds by Fubini; exact per linear segment.
            Kernel::Tabulated { knots } => {
                let mut acc = 0.0;
                for pair in knots.windows(2) {
                    let (x0, g0) = pair[0];
                    let (x1, g1) = pair[1];
                    if x1 <= t {
                        continue;
                    }
                    let slope = (g1 - g0) / (x1 - x0);
                    let anti = |s: f64| {
                        g0 * (0.5 * s * s - t * s)
                            + slope * (s * s * s / 3.0 - 0.5 * (x0 + t) * s * s + x0 * t * s)
                    };
                    let lo = x0.max(t);
                    acc += anti(x1) - anti(lo);
                }
                acc.max(0.0)
            }
            Kernel::Zero => 0.0,
        })
    }

    /// Whether `g` is nonincreasing on `[0, ∞)`. Path-mode simulation
    /// requires this so the intensity between shot arrivals is dominated
    /// by its left-endpoint value.
    pub fn is_monotone_nonincreasing(&self) -> bool {
        match self {
            Kernel::Exponential { .. }
            | Kernel::PowerLaw { .. }
            | Kernel::BoxCar { .. }
            | Kernel::Zero => true,
            Kernel::Tabulated { knots } => {
                knots.windows(2).all(|p| p[1].1 <= p[0].1)
                    // A positive value at the first knot with s > 0 jumps up from 0.
                    && (knots[0].0 == 0.0 || knots[0].1 == 0.0)
            }
        }
    }
}

/// Model parameters of the shot-noise Cox process: baseline intensity
/// `nu`, shot arrival rate `rho`, and the response kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub nu: f64,
    pub rho: f64,
    pub kernel: Kernel,
}

impl ModelParams {
    pub fn new(nu: f64, rho: f64, kernel: Kernel) -> Result<Self> {
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "baseline intensity nu must be finite and >= 0, got {nu}"
            )));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "shot rate rho must be finite and >= 0, got {rho}"
            )));
        }
        Ok(ModelParams { nu, rho, kernel })
    }

    /// The process is degenerate (almost surely no events) when `nu = 0`
    /// and `rho ||g|| = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.nu == 0.0 && self.rho * self.kernel.l1_norm() == 0.0
    }
}

fn check_nonneg(v: f64, what: &str) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Domain(format!("{what} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

//! Sharp large- and moderate-deviation estimates for the count `N_t`.
//!
//! Two families, all at leading order (the `order` field is reserved so
//! higher-order coefficients can be added without breaking the API):
//!
//! * point/tail estimates around a fixed rate `x`:
//!   `P(N_t = tx)  ~ e^{-t I(x)} sqrt(I''(x) / 2 pi t) psi(theta*)` and
//!   `P(N_t >= tx) ~` the same with the lattice factor `1/(1 - e^{-theta*})`,
//! * moderate-deviation estimates at `y` standard deviations above the
//!   mean: the Gaussian tail, the saddle form
//!   `e^{-t I(x*)} / (theta* sqrt(2 pi t eta''(theta*)))`, and the
//!   expansion `(1/(y sqrt(2 pi))) exp(-sum_i I^(i)(eta'(0))/i! * ...)`.
//!
//! All values are also exposed in log space so comparisons against exact
//! tail oracles survive underflow.

use statrs::function::erf::erfc;

use crate::cgf::Cgf;
use crate::error::{Error, Result};
use crate::rate::{rate_derivs, solve_saddle, SaddlePoint};

/// Which formula produced a [`DeviationEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PldPoint,
    PldTail,
    MdpGaussian,
    MdpSaddle,
    MdpExpansion,
}

/// A deviation probability estimate with its inputs echoed back.
#[derive(Debug, Clone)]
pub struct DeviationEstimate {
    pub regime: Regime,
    pub value: f64,
    /// `ln(value)`, safe against underflow of `value` itself.
    pub log_value: f64,
    pub t: f64,
    /// The `x` (rate) or `y` (standardized) argument of the regime.
    pub arg: f64,
    /// Expansion truncation `m` where applicable.
    pub m: Option<usize>,
    /// Correction order beyond leading; currently always 0.
    pub order: usize,
    /// Integer threshold `t x` or the moderate-deviation threshold
    /// `(nu + rho G) t + sqrt(t eta''(0)) y` the estimate refers to.
    pub threshold: Option<f64>,
    pub saddle: Option<SaddlePoint>,
    /// Set by [`pld_tail`] when `theta*` is so close to zero that the
    /// lattice prefactor `1/(1 - e^{-theta*})` blows up.
    pub near_mean: bool,
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("horizon t must be finite and > 0, got {t}")));
    }
    Ok(())
}

/// Shared log of the point estimate: `-t I + 0.5 ln(1/(2 pi t eta'')) + rho phi(theta*)`.
fn log_point(cgf: &Cgf, t: f64, saddle: &SaddlePoint) -> Result<f64> {
    let log_psi = cgf.params().rho * cgf.phi(saddle.theta_star)?;
    Ok(-t * saddle.rate
        + 0.5 * (2.0 * std::f64::consts::PI * t * saddle.eta_d2).recip().ln()
        + log_psi)
}

/// Leading-order estimate of the lattice point probability `P(N_t = t x)`.
///
/// Requires `t x` to be an integer (within 1e-9): the count lives on the
/// unit lattice and the formula is a local limit statement.
pub fn pld_point(cgf: &Cgf, t: f64, x: f64) -> Result<DeviationEstimate> {
    check_t(t)?;
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("pld_point needs x > 0, got {x}")));
    }
    let tx = t * x;
    if (tx - tx.round()).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "pld_point needs t*x integer (lattice requirement), got t*x = {tx}"
        )));
    }
    let saddle = solve_saddle(cgf, x)?;
    let log_value = log_point(cgf, t, &saddle)?;
    Ok(DeviationEstimate {
        regime: Regime::PldPoint,
        value: log_value.exp(),
        log_value,
        t,
        arg: x,
        m: None,
        order: 0,
        threshold: Some(tx.round()),
        saddle: Some(saddle),
        near_mean: false,
    })
}

/// Leading-order estimate of the upper tail `P(N_t >= t x)` for
/// `x > nu + rho G` (strictly above the mean rate).
pub fn pld_tail(cgf: &Cgf, t: f64, x: f64) -> Result<DeviationEstimate> {
    check_t(t)?;
    let mean_rate = cgf.mean_rate();
    if !(x.is_finite() && x > mean_rate) {
        return Err(Error::Domain(format!(
            "pld_tail needs x > nu + rho ||g|| = {mean_rate}, got {x}"
        )));
    }
    let saddle = solve_saddle(cgf, x)?;
    // 1 - e^{-theta*}, exact near zero.
    let lattice = -(-saddle.theta_star).exp_m1();
    let log_value = log_point(cgf, t, &saddle)? - lattice.ln();
    Ok(DeviationEstimate {
        regime: Regime::PldTail,
        value: log_value.exp(),
        log_value,
        t,
        arg: x,
        m: None,
        order: 0,
        threshold: Some(t * x),
        saddle: Some(saddle),
        near_mean: saddle.theta_star < 1e-6,
    })
}

/// Gaussian moderate-deviation estimate: `Psi(y)` for the threshold
/// `(nu + rho G) t + sqrt(t eta''(0)) y`.
pub fn mdp_gaussian(cgf: &Cgf, t: f64, y: f64) -> Result<DeviationEstimate> {
    check_t(t)?;
    if !y.is_finite() {
        return Err(Error::Domain(format!("y must be finite, got {y}")));
    }
    let value = normal_tail(y);
    let threshold = cgf.mean_rate() * t + (t * cgf.variance_rate()).sqrt() * y;
    Ok(DeviationEstimate {
        regime: Regime::MdpGaussian,
        value,
        log_value: value.ln(),
        t,
        arg: y,
        m: None,
        order: 0,
        threshold: Some(threshold),
        saddle: None,
        near_mean: false,
    })
}

/// Saddle-form moderate-deviation estimate
/// `e^{-t I(x*)} / (theta* sqrt(2 pi t eta''(theta*)))` at
/// `x* = (nu + rho G) + sqrt(eta''(0)/t) y`, `y > 0`.
pub fn mdp_saddle(cgf: &Cgf, t: f64, y: f64) -> Result<DeviationEstimate> {
    check_t(t)?;
    if !(y.is_finite() && y > 0.0) {
        return Err(Error::Domain(format!(
            "mdp_saddle needs y > 0 (theta* -> 0 divides the prefactor at y = 0), got {y}"
        )));
    }
    let x_star = cgf.mean_rate() + (cgf.variance_rate() / t).sqrt() * y;
    let saddle = solve_saddle(cgf, x_star)?;
    let log_value = -t * saddle.rate
        - saddle.theta_star.ln()
        - 0.5 * (2.0 * std::f64::consts::PI * t * saddle.eta_d2).ln();
    Ok(DeviationEstimate {
        regime: Regime::MdpSaddle,
        value: log_value.exp(),
        log_value,
        t,
        arg: y,
        m: None,
        order: 0,
        threshold: Some(t * x_star),
        saddle: Some(saddle),
        near_mean: false,
    })
}

/// Moderate-deviation expansion. For `m = 4` this is the closed form
/// `(1/(y sqrt(2 pi))) e^{-y^2/2} exp(eta'''(0) y^3 / (6 eta''(0)^{3/2} sqrt(t)))`;
/// other orders go through the general series [`mdp_expansion_series`].
pub fn mdp_expansion(cgf: &Cgf, t: f64, y: f64, m: usize) -> Result<DeviationEstimate> {
    check_expansion_args(t, y, m)?;
    if m != 4 {
        return mdp_expansion_series(cgf, t, y, m);
    }
    let eta2 = cgf.variance_rate();
    let eta3 = cgf.eta_deriv(0.0, 3)?;
    let log_value = -(y * (2.0 * std::f64::consts::PI).sqrt()).ln() - 0.5 * y * y
        + eta3 * y.powi(3) / (6.0 * eta2.powf(1.5) * t.sqrt());
    Ok(estimate_from_log(cgf, t, y, m, log_value))
}

/// General moderate-deviation series
/// `(1/(y sqrt(2 pi))) exp(-sum_{i=2}^{m-1} I^(i)(eta'(0))/i! * eta''(0)^{i/2} y^i / t^{(i-2)/2})`
/// with the rate derivatives taken at the mean.
pub fn mdp_expansion_series(cgf: &Cgf, t: f64, y: f64, m: usize) -> Result<DeviationEstimate> {
    check_expansion_args(t, y, m)?;
    let eta2 = cgf.variance_rate();
    let derivs = rate_derivs(cgf, cgf.mean_rate(), m)?;
    let mut sum = 0.0;
    let mut factorial = 2.0f64;
    for (idx, d) in derivs.iter().enumerate() {
        let i = idx + 2;
        sum += d / factorial * eta2.powf(i as f64 / 2.0) * y.powi(i as i32)
            / t.powf((i as f64 - 2.0) / 2.0);
        factorial *= i as f64 + 1.0;
    }
    let log_value = -(y * (2.0 * std::f64::consts::PI).sqrt()).ln() - sum;
    Ok(estimate_from_log(cgf, t, y, m, log_value))
}

fn check_expansion_args(t: f64, y: f64, m: usize) -> Result<()> {
    check_t(t)?;
    if !(y.is_finite() && y > 0.0) {
        return Err(Error::Domain(format!("mdp_expansion needs y > 0, got {y}")));
    }
    if m < 3 {
        return Err(Error::Domain(format!("mdp_expansion needs m >= 3, got {m}")));
    }
    Ok(())
}

fn estimate_from_log(cgf: &Cgf, t: f64, y: f64, m: usize, log_value: f64) -> DeviationEstimate {
    let threshold = cgf.mean_rate() * t + (t * cgf.variance_rate()).sqrt() * y;
    DeviationEstimate {
        regime: Regime::MdpExpansion,
        value: log_value.exp(),
        log_value,
        t,
        arg: y,
        m: Some(m),
        order: 0,
        threshold: Some(threshold),
        saddle: None,
        near_mean: false,
    }
}

/// Standard normal upper tail `Psi(y)`.
pub fn normal_tail(y: f64) -> f64 {
    0.5 * erfc(y / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Kernel, ModelParams};
    use crate::stats::poisson_sf;
    use statrs::function::gamma::ln_gamma;

    fn standard_model() -> Cgf {
        let kernel = Kernel::exponential(1.0, 1.0).unwrap();
        Cgf::new(ModelParams::new(1.0, 1.0, kernel).unwrap())
    }

    fn poisson_model(nu: f64) -> Cgf {
        Cgf::new(ModelParams::new(nu, 0.0, Kernel::zero()).unwrap())
    }

    fn poisson_log_pmf(lambda: f64, k: u64) -> f64 {
        k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)
    }

    #[test]
    fn pld_point_poisson_oracle() {
        // nu = 1, t = 50, x = 2: exact pmf of Poisson(50) at k = 100.
        let cgf = poisson_model(1.0);
        let est = pld_point(&cgf, 50.0, 2.0).unwrap();
        let ratio = (est.log_value - poisson_log_pmf(50.0, 100)).exp();
        assert!((0.95..=1.05).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pld_point_at_the_mean() {
        // x = eta'(0) with t x integer: value reduces to
        // sqrt(1 / (2 pi t eta''(0))) because I = 0 and psi(0) = 1.
        let cgf = standard_model();
        let t = 50.0;
        let est = pld_point(&cgf, t, cgf.mean_rate()).unwrap();
        let expect = (2.0 * std::f64::consts::PI * t * cgf.variance_rate())
            .recip()
            .sqrt();
        assert!((est.value - expect).abs() < 1e-12 * expect, "{} vs {expect}", est.value);
    }

    #[test]
    fn pld_point_lattice_requirement() {
        let cgf = standard_model();
        assert!(matches!(pld_point(&cgf, 150.0, 2.61), Err(Error::Domain(_))));
        // t = 150, x = 2.6 gives t x = 390 (within fp error) and is accepted.
        assert!(pld_point(&cgf, 150.0, 2.6).is_ok());
    }

    #[test]
    fn pld_tail_poisson_oracle() {
        let cgf = poisson_model(1.0);
        let est = pld_tail(&cgf, 100.0, 1.5).unwrap();
        let exact = poisson_sf(100.0, 150);
        let ratio = est.value / exact;
        assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pld_tail_rejects_below_mean() {
        let cgf = standard_model();
        assert!(matches!(pld_tail(&cgf, 100.0, 1.9), Err(Error::Domain(_))));
        assert!(matches!(pld_tail(&cgf, 100.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn pld_tail_near_mean_is_flagged_and_finite() {
        let cgf = standard_model();
        let est = pld_tail(&cgf, 100.0, cgf.mean_rate() + 1e-9).unwrap();
        assert!(est.near_mean);
        assert!(est.value.is_finite());
        assert!(est.value > 1.0, "prefactor should dominate, got {}", est.value);
    }

    #[test]
    fn tail_point_ratio_identity() {
        // pld_tail / pld_point = 1 / (1 - e^{-theta*}) to 1e-12.
        let cgf = standard_model();
        let t = 150.0;
        let x = 2.6;
        let point = pld_point(&cgf, t, x).unwrap();
        let tail = pld_tail(&cgf, t, x).unwrap();
        let theta = point.saddle.as_ref().unwrap().theta_star;
        let expect = (-(-theta).exp_m1()).recip();
        let ratio = tail.value / point.value;
        assert!(
            ((ratio - expect) / expect).abs() < 1e-12,
            "ratio {ratio} vs {expect}"
        );
    }

    #[test]
    fn mdp_gaussian_values() {
        let cgf = standard_model();
        let half = mdp_gaussian(&cgf, 500.0, 0.0).unwrap();
        assert!((half.value - 0.5).abs() < 1e-12);
        let one = mdp_gaussian(&cgf, 500.0, 1.0).unwrap();
        assert!((one.value - 0.15865525393145707).abs() < 1e-10);
        let threshold = one.threshold.unwrap();
        let expect = 2.0 * 500.0 + (500.0f64 * 3.0).sqrt();
        assert!((threshold - expect).abs() < 1e-9);
    }

    #[test]
    fn mdp_saddle_poisson_oracle() {
        // rho = 0, nu = 1, t = 400, y = 3: threshold 400 + 20*3 = 460.
        let cgf = poisson_model(1.0);
        let est = mdp_saddle(&cgf, 400.0, 3.0).unwrap();
        let exact = poisson_sf(400.0, 460);
        let ratio = est.value / exact;
        assert!((0.85..=1.15).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mdp_saddle_rejects_nonpositive_y() {
        let cgf = standard_model();
        assert!(matches!(mdp_saddle(&cgf, 400.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(mdp_saddle(&cgf, 400.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn saddle_and_tail_forms_differ_by_lattice_factor_and_psi() {
        // At the same x*: pld_tail / mdp_saddle * (1 - e^{-theta*}) / theta*
        // equals psi(theta*) exactly (same saddle, same exponent).
        let cgf = standard_model();
        let t = 400.0;
        let y = 4.0;
        let saddle_est = mdp_saddle(&cgf, t, y).unwrap();
        let x_star = cgf.mean_rate() + (cgf.variance_rate() / t).sqrt() * y;
        let tail_est = pld_tail(&cgf, t, x_star).unwrap();
        let theta = saddle_est.saddle.as_ref().unwrap().theta_star;
        let lattice = -(-theta).exp_m1();
        let lhs = (tail_est.log_value - saddle_est.log_value).exp() * lattice / theta;
        let psi = cgf.psi(theta).unwrap();
        assert!(((lhs - psi) / psi).abs() < 1e-10, "lhs {lhs} vs psi {psi}");
    }

    #[test]
    fn expansion_m4_matches_series_to_machine_precision() {
        let cgf = standard_model();
        let t = 1000.0f64;
        let y = t.powf(0.2);
        let closed = mdp_expansion(&cgf, t, y, 4).unwrap();
        let series = mdp_expansion_series(&cgf, t, y, 4).unwrap();
        assert!(
            ((closed.value - series.value) / closed.value).abs() < 1e-12,
            "{} vs {}",
            closed.value,
            series.value
        );
    }

    #[test]
    fn expansion_m3_reproduces_gaussian_decay() {
        // Only the i = 2 term survives: exponent -I''(mean) eta''(0) y^2 / 2
        // = -y^2/2 by duality.
        let cgf = standard_model();
        let y = 2.0f64;
        let est = mdp_expansion(&cgf, 500.0, y, 3).unwrap();
        let expect = (y * (2.0 * std::f64::consts::PI).sqrt()).recip() * (-0.5 * y * y).exp();
        assert!(((est.value - expect) / expect).abs() < 1e-12);
    }

    #[test]
    fn expansion_mills_ratio_vs_gaussian() {
        // (1/(y sqrt(2pi))) e^{-y^2/2} vs Psi(y): ratio within [0.9, 1.1]
        // by y = 3 (Mills ratio).
        let cgf = standard_model();
        let y = 3.0;
        let gauss = mdp_gaussian(&cgf, 500.0, y).unwrap();
        let m3 = mdp_expansion(&cgf, 500.0, y, 3).unwrap();
        let ratio = gauss.value / m3.value;
        assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn expansion_argument_validation() {
        let cgf = standard_model();
        assert!(matches!(mdp_expansion(&cgf, 100.0, 1.0, 2), Err(Error::Domain(_))));
        assert!(matches!(mdp_expansion(&cgf, 100.0, 0.0, 4), Err(Error::Domain(_))));
        assert!(matches!(mdp_expansion(&cgf, 0.0, 1.0, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn estimates_are_nonnegative_with_finite_logs() {
        let cgf = standard_model();
        let cases: Vec<DeviationEstimate> = vec![
            pld_point(&cgf, 150.0, 2.6).unwrap(),
            pld_tail(&cgf, 150.0, 2.6).unwrap(),
            mdp_gaussian(&cgf, 500.0, 1.0).unwrap(),
            mdp_saddle(&cgf, 400.0, 4.0).unwrap(),
            mdp_expansion(&cgf, 1000.0, 3.0, 4).unwrap(),
            mdp_expansion_series(&cgf, 1000.0, 3.0, 6).unwrap(),
        ];
        for est in cases {
            assert!(est.value >= 0.0);
            assert!(est.log_value.is_finite(), "{:?}", est.regime);
        }
    }

    #[test]
    fn higher_order_expansion_runs() {
        // m = 6 pulls I^(5) through the finite-difference path.
        let cgf = standard_model();
        let est = mdp_expansion(&cgf, 1000.0, 2.0, 6).unwrap();
        assert!(est.value > 0.0 && est.value < 1.0);
    }
}

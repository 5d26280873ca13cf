//! Exact law of the count `N_t` by probability-generating-function
//! inversion on roots of unity, and the exact law of the limiting
//! unit-time increment `Y`.
//!
//! `probs[k] = (1/M) * sum_j Phi_t(w^j) w^{-jk}` with `w = e^{2 pi i / M}`
//! recovers the pmf exactly up to mass aliased from `k >= M`, which is
//! bounded by a Chernoff bound minimized over a grid and reported per
//! table. Counts live on the unit lattice, so no span detection is needed.

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::cgf::Cgf;
use crate::error::{Error, Result};
use crate::fft::fft_in_place;
use crate::stats::CompensatedSum;

/// Probabilities below this magnitude sit at the double-precision noise
/// floor of the inversion and are flagged, never silently returned.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Exact pmf table with truncation metadata.
#[derive(Debug, Clone)]
pub struct PmfTable {
    /// Horizon (`1.0` for the unit-time limit increment).
    pub t: f64,
    /// Transform size, a power of two.
    pub m: usize,
    /// `probs[k] = P(N = k)` for `k < m`.
    pub probs: Vec<f64>,
    /// Chernoff bound on the tail mass beyond `m` that wraps around.
    pub aliasing_bound: f64,
    /// Exact mean from the closed-form first derivative of the exponent.
    pub mean: f64,
    /// Exact variance from the closed-form second derivative.
    pub variance: f64,
    /// Largest pre-clamp magnitude among roundoff-negative entries.
    pub clamped_negative: f64,
}

/// A tail probability together with its quality flag.
#[derive(Debug, Clone, Copy)]
pub struct TailEstimate {
    pub value: f64,
    /// Set when the value is at or below [`NOISE_FLOOR`].
    pub at_noise_floor: bool,
}

impl PmfTable {
    /// `P(N >= k0)` by compensated summation from the smallest terms
    /// (the far tail) upward.
    pub fn tail(&self, k0: usize) -> TailEstimate {
        let mut acc = CompensatedSum::new();
        for k in (k0..self.probs.len()).rev() {
            acc.add(self.probs[k]);
        }
        let value = acc.value();
        TailEstimate { value, at_noise_floor: value <= NOISE_FLOOR }
    }

    /// Total mass of the table (should be 1 up to roundoff + aliasing).
    pub fn total_mass(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for &p in self.probs.iter().rev() {
            acc.add(p);
        }
        acc.value()
    }

    /// Mean recomputed from the table entries.
    pub fn table_mean(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for (k, &p) in self.probs.iter().enumerate() {
            acc.add(k as f64 * p);
        }
        acc.value()
    }

    /// Variance recomputed from the table entries.
    pub fn table_variance(&self) -> f64 {
        let mean = self.table_mean();
        let mut acc = CompensatedSum::new();
        for (k, &p) in self.probs.iter().enumerate() {
            let d = k as f64 - mean;
            acc.add(d * d * p);
        }
        acc.value()
    }
}

/// Minimal admissible transform size `mean + 12 stddev` for horizon `t`.
pub fn required_size(cgf: &Cgf, t: f64) -> Result<f64> {
    Ok(cgf.finite_mean(t)? + 12.0 * cgf.finite_variance(t)?.sqrt())
}

/// Smallest power of two admissible for horizon `t`.
pub fn suggest_m(cgf: &Cgf, t: f64) -> Result<usize> {
    let required = required_size(cgf, t)?;
    Ok((required.ceil().max(2.0) as usize).next_power_of_two())
}

/// Exact pmf of `N_t` on `{0, ..., m-1}`.
pub fn pmf_exact(cgf: &Cgf, t: f64, m: usize) -> Result<PmfTable> {
    let required = required_size(cgf, t)?;
    if !m.is_power_of_two() {
        return Err(Error::TransformTooSmall {
            m,
            required,
            suggested: suggest_m(cgf, t)?,
        });
    }
    if (m as f64) < required {
        return Err(Error::TransformTooSmall { m, required, suggested: suggest_m(cgf, t)? });
    }

    // Phi_t on the upper half circle; Hermitian symmetry fills the rest.
    let mut values = vec![Complex64::new(0.0, 0.0); m];
    let step = 2.0 * std::f64::consts::PI / m as f64;
    let half: Vec<Complex64> = (0..=m / 2)
        .into_par_iter()
        .map(|j| {
            let angle = step * j as f64;
            let z = Complex64::new(angle.cos(), angle.sin());
            cgf.log_pgf(t, z).map(|lp| lp.exp())
        })
        .collect::<Result<Vec<_>>>()?;
    for (j, v) in half.iter().enumerate() {
        values[j] = *v;
        if j > 0 && j < m - j {
            values[m - j] = v.conj();
        }
    }

    let mean = cgf.finite_mean(t)?;
    let variance = cgf.finite_variance(t)?;
    let aliasing_bound = chernoff_alias_bound(m, |theta| cgf.eta_finite(t, theta), |w| {
        overflow_guard(cgf, t, w)
    });
    Ok(finish_table(values, t, mean, variance, aliasing_bound))
}

/// Exact pmf with the transform size chosen automatically and doubled
/// until the aliasing bound is at or below `alias_target`.
pub fn pmf_auto(cgf: &Cgf, t: f64, alias_target: f64) -> Result<PmfTable> {
    let mut m = suggest_m(cgf, t)?;
    loop {
        let table = pmf_exact(cgf, t, m)?;
        if table.aliasing_bound <= alias_target {
            return Ok(table);
        }
        if m >= 1 << 22 {
            return Err(Error::RemainderBound {
                achieved: table.aliasing_bound,
                requested: alias_target,
            });
        }
        m *= 2;
    }
}

/// `P(N_t >= k0)` through an automatically sized table.
pub fn tail_exact(cgf: &Cgf, t: f64, k0: usize) -> Result<TailEstimate> {
    Ok(pmf_auto(cgf, t, 1e-12)?.tail(k0))
}

/// Exact law of the limiting increment `Y` (unit-time infinitely divisible
/// limit): the Fourier inversion of `e^{eta}` together with an independent
/// convolution construction, Poisson(`nu`) ⊛ compound-Poisson where a
/// Poisson(`rho`) number of Poisson(`G`) packets is summed.
#[derive(Debug, Clone)]
pub struct IncrementLaw {
    pub fourier: PmfTable,
    pub convolution: PmfTable,
}

pub fn increment_law(cgf: &Cgf, m: usize) -> Result<IncrementLaw> {
    let required = 12.0 * cgf.variance_rate() + 32.0;
    if !m.is_power_of_two() || (m as f64) < required {
        return Err(Error::TransformTooSmall {
            m,
            required,
            suggested: (required.ceil().max(2.0) as usize).next_power_of_two(),
        });
    }

    let nu = cgf.params().nu;
    let rho = cgf.params().rho;
    let big_g = cgf.big_g();

    // Fourier table from e^{eta} on the unit circle.
    let mut values = vec![Complex64::new(0.0, 0.0); m];
    let step = 2.0 * std::f64::consts::PI / m as f64;
    for j in 0..=m / 2 {
        let angle = step * j as f64;
        let z = Complex64::new(angle.cos(), angle.sin());
        let w = z - 1.0;
        let exponent = nu * w + rho * crate::cgf::cexpm1(w * big_g);
        values[j] = exponent.exp();
        if j > 0 && j < m - j {
            values[m - j] = values[j].conj();
        }
    }
    let mean = cgf.mean_rate();
    let variance = cgf.variance_rate();
    let aliasing_bound = chernoff_alias_bound(
        m,
        |theta| Ok(cgf.eta(theta)),
        |w| w * big_g <= 690.0 && w * nu <= 690.0,
    );
    let fourier = finish_table(values, 1.0, mean, variance, aliasing_bound);

    // Convolution table: direct, truncated arrays.
    let base = poisson_pmf(nu, m);
    let mut compound = vec![0.0f64; m];
    // Poisson(rho) mixture over the number of packets r, truncated once
    // the remaining mass is below 1e-18.
    let mut r_weight = (-rho).exp();
    let mut covered = 0.0;
    let mut r = 0usize;
    loop {
        if r_weight > 0.0 {
            let packet = poisson_pmf(r as f64 * big_g, m);
            for (c, p) in compound.iter_mut().zip(&packet) {
                *c += r_weight * p;
            }
        }
        covered += r_weight;
        if 1.0 - covered < 1e-18 || r > 4_000 {
            break;
        }
        r += 1;
        r_weight *= rho / r as f64;
    }
    let mut probs = vec![0.0f64; m];
    for k in 0..m {
        let mut acc = 0.0;
        for j in 0..=k {
            acc += base[j] * compound[k - j];
        }
        probs[k] = acc;
    }
    let convolution = PmfTable {
        t: 1.0,
        m,
        probs,
        aliasing_bound,
        mean,
        variance,
        clamped_negative: 0.0,
    };

    Ok(IncrementLaw { fourier, convolution })
}

/// Poisson pmf of length `len` via the log-gamma form (stable for any
/// mean; `lambda = 0` gives the point mass at zero).
fn poisson_pmf(lambda: f64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    if lambda == 0.0 {
        if len > 0 {
            out[0] = 1.0;
        }
        return out;
    }
    let log_lambda = lambda.ln();
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = (k as f64 * log_lambda - lambda - ln_gamma(k as f64 + 1.0)).exp();
    }
    out
}

/// Inverse transform, clamping of roundoff negatives, final table.
fn finish_table(
    mut values: Vec<Complex64>,
    t: f64,
    mean: f64,
    variance: f64,
    aliasing_bound: f64,
) -> PmfTable {
    let m = values.len();
    fft_in_place(&mut values, false);
    let scale = 1.0 / m as f64;
    let mut clamped_negative = 0.0f64;
    let probs: Vec<f64> = values
        .iter()
        .map(|v| {
            let p = v.re * scale;
            if p < 0.0 {
                clamped_negative = clamped_negative.max(-p);
                0.0
            } else {
                p
            }
        })
        .collect();
    PmfTable { t, m, probs, aliasing_bound, mean, variance, clamped_negative }
}

/// `min over a theta grid of exp(exponent(theta) - theta M)`, a Chernoff
/// bound on `P(N >= M)`. `admissible` pre-filters `w = e^theta - 1` values
/// whose exponent would overflow.
fn chernoff_alias_bound<E, A>(m: usize, exponent: E, admissible: A) -> f64
where
    E: Fn(f64) -> Result<f64>,
    A: Fn(f64) -> bool,
{
    let mut best = 1.0f64;
    let lo = 1e-3f64;
    let hi = 25.0f64;
    let n = 60;
    for i in 0..=n {
        let theta = lo * (hi / lo).powf(i as f64 / n as f64);
        let w = theta.exp_m1();
        if !admissible(w) {
            break;
        }
        let Ok(e) = exponent(theta) else { continue };
        let log_bound = e - theta * m as f64;
        if log_bound.is_finite() {
            best = best.min(log_bound.exp());
        }
    }
    best
}

fn overflow_guard(cgf: &Cgf, t: f64, w: f64) -> bool {
    w * cgf.big_g() <= 690.0 && w * t * cgf.params().nu <= 690.0
}

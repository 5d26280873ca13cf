//! Exact Monte Carlo simulation of the shot-noise Cox process.
//!
//! Two samplers:
//!
//! * [`sample_counts`] draws the count at the horizon directly: condition
//!   on the shot arrivals (a Poisson number of uniform times), compute the
//!   integrated intensity `Lambda = nu t + sum_i G(t - tau_i)` in closed
//!   form, draw `Poisson(Lambda)`. No discretization anywhere.
//! * [`sample_paths`] produces full event paths by thinning a dominating
//!   piecewise-constant-rate process. Between shot arrivals the intensity
//!   is nonincreasing for monotone kernels, so its value at the interval
//!   start dominates; non-monotone kernels are rejected.
//!
//! Path `i` uses the stream keyed by `(seed, i)`, so results are
//! bit-identical for a given seed regardless of how the batch is
//! scheduled across workers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::PathRng;
use crate::stats::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Counts,
    Paths,
}

/// Batch configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub t: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub mode: SimMode,
}

impl SimConfig {
    pub fn new(t: f64, n_paths: usize, seed: u64, mode: SimMode) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "simulation horizon t must be finite and > 0, got {t}"
            )));
        }
        if n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
        }
        Ok(SimConfig { t, n_paths, seed, mode })
    }
}

/// Summary statistics of a batch, recomputable from the raw data.
#[derive(Debug, Clone, Copy)]
pub struct Summary {
    pub mean: f64,
    /// Sample variance (n - 1 denominator; 0 for a single path).
    pub variance: f64,
    pub min: u64,
    pub max: u64,
}

/// Raw draw results.
#[derive(Debug, Clone)]
pub struct SimBatch {
    /// Count at the horizon, per path (derived from the event lists in
    /// path mode).
    pub counts: Vec<u64>,
    /// Event times per path, present in path mode.
    pub paths: Option<Vec<Vec<f64>>>,
    pub summary: Summary,
}

fn summarize(counts: &[u64]) -> Summary {
    let n = counts.len();
    let mut acc = CompensatedSum::new();
    for &c in counts {
        acc.add(c as f64);
    }
    let mean = acc.value() / n as f64;
    let mut sq = CompensatedSum::new();
    for &c in counts {
        let d = c as f64 - mean;
        sq.add(d * d);
    }
    let variance = if n > 1 { sq.value() / (n - 1) as f64 } else { 0.0 };
    Summary {
        mean,
        variance,
        min: counts.iter().copied().min().unwrap_or(0),
        max: counts.iter().copied().max().unwrap_or(0),
    }
}

/// Integrated intensity over `[0, t]` given shot times.
fn integrated_intensity(params: &ModelParams, t: f64, shots: &[f64]) -> f64 {
    let mut lambda = params.nu * t;
    for &tau in shots {
        lambda += params.kernel.cum_integral(t - tau).expect("0 <= t - tau <= t");
    }
    lambda
}

fn draw_shots(params: &ModelParams, t: f64, rng: &mut PathRng) -> Vec<f64> {
    let k = rng.poisson(params.rho * t);
    let mut shots: Vec<f64> = (0..k).map(|_| t * rng.uniform()).collect();
    shots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    shots
}

/// Draw `n_paths` counts of `N_t`; exact conditional two-stage sampling.
pub fn sample_counts(params: &ModelParams, cfg: &SimConfig) -> Result<SimBatch> {
    let counts: Vec<u64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = PathRng::for_path(cfg.seed, i as u64);
            let shots = draw_shots(params, cfg.t, &mut rng);
            let lambda = integrated_intensity(params, cfg.t, &shots);
            rng.poisson(lambda)
        })
        .collect();
    let summary = summarize(&counts);
    Ok(SimBatch { counts, paths: None, summary })
}

/// Draw full event paths by exact thinning; requires a monotone
/// nonincreasing kernel so the intensity between shots is dominated by
/// its left-endpoint value.
pub fn sample_paths(params: &ModelParams, cfg: &SimConfig) -> Result<SimBatch> {
    if !params.kernel.is_monotone_nonincreasing() {
        return Err(Error::Unsupported(
            "path sampling needs a monotone nonincreasing kernel; use count mode".into(),
        ));
    }
    let paths: Vec<Vec<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = PathRng::for_path(cfg.seed, i as u64);
            let shots = draw_shots(params, cfg.t, &mut rng);
            thin_one_path(params, cfg.t, &shots, &mut rng)
        })
        .collect();
    let counts: Vec<u64> = paths.iter().map(|p| p.len() as u64).collect();
    let summary = summarize(&counts);
    Ok(SimBatch { counts, paths: Some(paths), summary })
}

fn intensity_at(params: &ModelParams, shots: &[f64], s: f64) -> f64 {
    let mut v = params.nu;
    for &tau in shots {
        if tau > s {
            break;
        }
        v += params.kernel.eval(s - tau).expect("s - tau >= 0");
    }
    v
}

fn thin_one_path(params: &ModelParams, t: f64, shots: &[f64], rng: &mut PathRng) -> Vec<f64> {
    let mut events = Vec::new();
    // Interval grid: 0, shot times, t. Within each interval the intensity
    // is nonincreasing, so lambda at the interval start dominates.
    let mut grid = Vec::with_capacity(shots.len() + 2);
    grid.push(0.0);
    grid.extend(shots.iter().copied().filter(|&tau| tau < t));
    grid.push(t);
    for j in 0..grid.len() - 1 {
        let (a, b) = (grid[j], grid[j + 1]);
        let bound = intensity_at(params, shots, a);
        if bound <= 0.0 {
            continue;
        }
        let mut s = a;
        loop {
            s += rng.exponential(bound);
            if s >= b {
                break;
            }
            let accept = intensity_at(params, shots, s) / bound;
            if rng.uniform() < accept {
                events.push(s);
            }
        }
    }
    events
}

/// Fraction of paths with count at least `k0`.
pub fn empirical_tail(batch: &SimBatch, k0: u64) -> f64 {
    let hits = batch.counts.iter().filter(|&&c| c >= k0).count();
    hits as f64 / batch.counts.len() as f64
}

/// Empirical moment generating function estimate.
#[derive(Debug, Clone, Copy)]
pub struct MgfEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Sample average of `e^{theta count}` with its standard error.
pub fn empirical_mgf(batch: &SimBatch, theta: f64) -> Result<MgfEstimate> {
    let max = batch.counts.iter().copied().max().unwrap_or(0) as f64;
    if theta * max > 709.0 {
        return Err(Error::Domain(format!(
            "theta too large: e^(theta * max count) overflows; need theta <= {:.6}",
            709.0 / max
        )));
    }
    let n = batch.counts.len() as f64;
    let mut acc = CompensatedSum::new();
    for &c in &batch.counts {
        acc.add((theta * c as f64).exp());
    }
    let value = acc.value() / n;
    let mut sq = CompensatedSum::new();
    for &c in &batch.counts {
        let d = (theta * c as f64).exp() - value;
        sq.add(d * d);
    }
    let sample_var = if batch.counts.len() > 1 { sq.value() / (n - 1.0) } else { 0.0 };
    Ok(MgfEstimate { value, std_error: (sample_var / n).sqrt() })
}

/// Histogram of counts (index = count), for goodness-of-fit checks.
pub fn count_histogram(batch: &SimBatch, len: usize) -> Vec<u64> {
    let mut hist = vec![0u64; len];
    for &c in &batch.counts {
        let idx = (c as usize).min(len - 1);
        hist[idx] += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::Cgf;
    use crate::model::Kernel;
    use crate::stats::{chi_square_two_sample, ks_test};

    fn standard_params() -> ModelParams {
        ModelParams::new(1.0, 1.0, Kernel::exponential(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn reproducible_per_seed() {
        let params = standard_params();
        let cfg = SimConfig::new(5.0, 2_000, 99, SimMode::Counts).unwrap();
        let a = sample_counts(&params, &cfg).unwrap();
        let b = sample_counts(&params, &cfg).unwrap();
        assert_eq!(a.counts, b.counts);
        let cfg2 = SimConfig::new(5.0, 2_000, 100, SimMode::Counts).unwrap();
        let c = sample_counts(&params, &cfg2).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn poisson_reduction_mean_band() {
        // rho = 0, nu = 1, t = 5: counts are iid Poisson(5).
        let params = ModelParams::new(1.0, 0.0, Kernel::zero()).unwrap();
        let cfg = SimConfig::new(5.0, 100_000, 4242, SimMode::Counts).unwrap();
        let batch = sample_counts(&params, &cfg).unwrap();
        let se = (5.0f64 / 100_000.0).sqrt();
        assert!(
            (batch.summary.mean - 5.0).abs() < 3.0 * se,
            "mean {} not within 3 se of 5",
            batch.summary.mean
        );
        assert!((batch.summary.variance - 5.0).abs() < 0.15);
    }

    #[test]
    fn zero_kernel_matches_poisson_reduction_law() {
        // Zero kernel: shots contribute nothing, so the law equals the
        // rho = 0 case with the same nu (streams differ, laws agree).
        let zero_kernel = ModelParams::new(1.0, 2.0, Kernel::zero()).unwrap();
        let no_shots = ModelParams::new(1.0, 0.0, Kernel::zero()).unwrap();
        let cfg = SimConfig::new(5.0, 40_000, 7, SimMode::Counts).unwrap();
        let a = sample_counts(&zero_kernel, &cfg).unwrap();
        let b = sample_counts(&no_shots, &cfg).unwrap();
        let ha = count_histogram(&a, 32);
        let hb = count_histogram(&b, 32);
        let r = chi_square_two_sample(&ha, &hb, 5.0);
        assert!(r.p_value > 0.001, "p = {}", r.p_value);
    }

    #[test]
    fn standard_model_exact_mean_band() {
        // Exact mean at t = 10 is 19 + e^{-10}.
        let params = standard_params();
        let cfg = SimConfig::new(10.0, 100_000, 2024, SimMode::Counts).unwrap();
        let batch = sample_counts(&params, &cfg).unwrap();
        let expect = 19.0 + (-10.0f64).exp();
        let se = (batch.summary.variance / 100_000.0).sqrt();
        assert!(
            (batch.summary.mean - expect).abs() < 3.0 * se,
            "mean {} vs {expect} (se {se})",
            batch.summary.mean
        );
    }

    #[test]
    fn empirical_probes() {
        let params = standard_params();
        let cfg = SimConfig::new(10.0, 100_000, 31337, SimMode::Counts).unwrap();
        let batch = sample_counts(&params, &cfg).unwrap();
        assert_eq!(empirical_tail(&batch, 0), 1.0);
        let at_zero = empirical_mgf(&batch, 0.0).unwrap();
        assert_eq!(at_zero.value, 1.0);

        // theta = 0.3 against exp(eta_t(0.3)) within 3 standard errors.
        let cgf = Cgf::new(params);
        let expect = cgf.eta_finite(10.0, 0.3).unwrap().exp();
        let est = empirical_mgf(&batch, 0.3).unwrap();
        assert!(
            (est.value - expect).abs() < 3.0 * est.std_error,
            "mgf {} +- {} vs {expect}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn mgf_overflow_rejected_with_bound() {
        let params = standard_params();
        let cfg = SimConfig::new(10.0, 100, 1, SimMode::Counts).unwrap();
        let batch = sample_counts(&params, &cfg).unwrap();
        match empirical_mgf(&batch, 100.0) {
            Err(Error::Domain(msg)) => assert!(msg.contains("theta")),
            other => panic!("expected overflow rejection, got {other:?}"),
        }
    }

    #[test]
    fn homogeneous_paths_ks_interarrivals() {
        // rho = 0: a homogeneous Poisson(nu) path; pooled complete gaps are
        // iid Exponential(nu) up to O(1/n) censoring bias.
        let params = ModelParams::new(1.0, 0.0, Kernel::zero()).unwrap();
        let cfg = SimConfig::new(2000.0, 1, 12345, SimMode::Paths).unwrap();
        let batch = sample_paths(&params, &cfg).unwrap();
        let events = &batch.paths.as_ref().unwrap()[0];
        assert!(events.len() > 1500, "unexpectedly few events: {}", events.len());
        let mut gaps: Vec<f64> = events.windows(2).map(|w| w[1] - w[0]).collect();
        let r = ks_test(&mut gaps, |x| -(-x).exp_m1());
        assert!(r.p_value > 0.001, "KS p = {}", r.p_value);
    }

    #[test]
    fn path_and_count_samplers_agree_in_law() {
        let params = standard_params();
        let cfg_counts = SimConfig::new(10.0, 20_000, 555, SimMode::Counts).unwrap();
        let cfg_paths = SimConfig::new(10.0, 20_000, 556, SimMode::Paths).unwrap();
        let counts = sample_counts(&params, &cfg_counts).unwrap();
        let paths = sample_paths(&params, &cfg_paths).unwrap();
        let hc = count_histogram(&counts, 64);
        let hp = count_histogram(&paths, 64);
        let r = chi_square_two_sample(&hc, &hp, 5.0);
        assert!(r.p_value > 0.001, "p = {}", r.p_value);
    }

    #[test]
    fn box_car_kernel_paths_and_saturation() {
        // Shots older than the width w cannot influence the intensity:
        // the integrated response saturates at h * w.
        let kernel = Kernel::box_car(2.0, 0.5).unwrap();
        for u in [0.5f64, 0.7, 3.0, 10.0] {
            assert_eq!(kernel.cum_integral(u).unwrap(), 1.0);
        }
        let params = ModelParams::new(1.0, 1.0, kernel).unwrap();
        let cfg_paths = SimConfig::new(8.0, 10_000, 808, SimMode::Paths).unwrap();
        let cfg_counts = SimConfig::new(8.0, 10_000, 809, SimMode::Counts).unwrap();
        let paths = sample_paths(&params, &cfg_paths).unwrap();
        let counts = sample_counts(&params, &cfg_counts).unwrap();
        let hp = count_histogram(&paths, 48);
        let hc = count_histogram(&counts, 48);
        let r = chi_square_two_sample(&hp, &hc, 5.0);
        assert!(r.p_value > 0.001, "p = {}", r.p_value);
    }

    #[test]
    fn non_monotone_kernel_rejected_in_path_mode() {
        let kernel = Kernel::tabulated(vec![(0.0, 0.1), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        let params = ModelParams::new(1.0, 1.0, kernel).unwrap();
        let cfg = SimConfig::new(5.0, 10, 1, SimMode::Paths).unwrap();
        assert!(matches!(sample_paths(&params, &cfg), Err(Error::Unsupported(_))));
        // Count mode supports every kernel.
        assert!(sample_counts(&params, &cfg).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 10, 1, SimMode::Counts).is_err());
        assert!(SimConfig::new(5.0, 0, 1, SimMode::Counts).is_err());
    }

    #[test]
    fn summary_recomputable_from_raw() {
        let params = standard_params();
        let cfg = SimConfig::new(5.0, 1_000, 3, SimMode::Counts).unwrap();
        let batch = sample_counts(&params, &cfg).unwrap();
        let again = summarize(&batch.counts);
        assert_eq!(batch.summary.mean, again.mean);
        assert_eq!(batch.summary.variance, again.variance);
        assert_eq!(batch.summary.min, again.min);
        assert_eq!(batch.summary.max, again.max);
    }
}

//! Compensated summation and the statistical validation probes used by the
//! simulator checks (goodness of fit, two-sample comparison, KS).

use statrs::function::gamma::{gamma_lr, gamma_ur};

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// One-sample chi-square goodness of fit of observed counts against model
/// probabilities. Cells are pooled left to right until the expected count
/// reaches `min_expected`; the trailing remainder (including model mass
/// beyond the table) forms the last cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquare {
    let n: u64 = observed.iter().sum();
    let nf = n as f64;

    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    let len = observed.len().max(probs.len());
    for k in 0..len {
        acc_obs += observed.get(k).copied().unwrap_or(0) as f64;
        acc_exp += nf * probs.get(k).copied().unwrap_or(0.0);
        if acc_exp >= min_expected {
            cells.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    // Remaining mass (tail beyond the table plus any unpooled cells).
    let covered: f64 = probs.iter().sum::<f64>().min(1.0);
    acc_exp += nf * (1.0 - covered);
    if acc_exp > 0.0 || acc_obs > 0.0 {
        if acc_exp >= min_expected || cells.is_empty() {
            cells.push((acc_obs, acc_exp));
        } else {
            let last = cells.last_mut().unwrap();
            last.0 += acc_obs;
            last.1 += acc_exp;
        }
    }

    let statistic: f64 = cells
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = cells.len().saturating_sub(1).max(1);
    ChiSquare { statistic, dof, p_value: chi_square_sf(statistic, dof) }
}

/// Two-sample chi-square test that two count histograms come from the same
/// law. Cells pooled until the combined count reaches `min_expected`.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_expected: f64) -> ChiSquare {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let ka = ((nb as f64) / (na as f64)).sqrt();
    let kb = ((na as f64) / (nb as f64)).sqrt();

    let len = a.len().max(b.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc_a = 0.0;
    let mut acc_b = 0.0;
    for k in 0..len {
        acc_a += a.get(k).copied().unwrap_or(0) as f64;
        acc_b += b.get(k).copied().unwrap_or(0) as f64;
        if acc_a + acc_b >= min_expected {
            cells.push((acc_a, acc_b));
            acc_a = 0.0;
            acc_b = 0.0;
        }
    }
    if acc_a + acc_b > 0.0 {
        if let Some(last) = cells.last_mut() {
            last.0 += acc_a;
            last.1 += acc_b;
        } else {
            cells.push((acc_a, acc_b));
        }
    }

    let statistic: f64 = cells
        .iter()
        .filter(|(oa, ob)| oa + ob > 0.0)
        .map(|(oa, ob)| {
            let d = ka * oa - kb * ob;
            d * d / (oa + ob)
        })
        .sum();
    let dof = cells.len().saturating_sub(1).max(1);
    ChiSquare { statistic, dof, p_value: chi_square_sf(statistic, dof) }
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, statistic / 2.0)
}

/// Upper tail `P(Poisson(lambda) >= k)` via the regularized lower
/// incomplete gamma function.
pub fn poisson_sf(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    gamma_lr(k as f64, lambda)
}

/// Result of a Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test of `data` against the CDF `cdf`, with the asymptotic
/// Kolmogorov p-value.
pub fn ks_test<F: Fn(f64) -> f64>(data: &mut [f64], cdf: F) -> KsTest {
    data.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = data.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in data.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        p += 2.0 * sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    KsTest { statistic: d, p_value: p.clamp(0.0, 1.0) }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

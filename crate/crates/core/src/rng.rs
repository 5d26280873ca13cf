//! Counter-based splittable random streams and the Poisson sampler.
//!
//! Path `i` of a batch draws from a stream keyed by `(seed, i)`, so batches
//! are reproducible bit for bit no matter how paths are scheduled across
//! workers. Each draw applies the SplitMix64 finalizer to
//! `key + counter * golden`, i.e. a stateless (key, counter) -> u64 map.

/// One per-path random stream.
#[derive(Debug, Clone)]
pub struct PathRng {
    key: u64,
    counter: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PathRng {
    /// Stream for path `path` of a batch with master `seed`.
    pub fn for_path(seed: u64, path: u64) -> Self {
        let key = mix(seed ^ mix(path.wrapping_add(GOLDEN)));
        PathRng { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(c.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Exponential with the given rate via inversion.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.uniform()).ln() / rate
    }

    /// Poisson draw: sequential inversion for `mean <= 10`, PTRS
    /// (transformed rejection with squeeze) above. Draws are reproducible
    /// bitwise per seed within this implementation; across implementations
    /// only the distribution is pinned.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        debug_assert!(mean >= 0.0 && mean.is_finite());
        if mean <= 0.0 {
            0
        } else if mean <= 10.0 {
            self.poisson_inversion(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf && k < 1_000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let slam = mean.sqrt();
        let loglam = mean.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
            let rhs = k * loglam - mean - statrs::function::gamma::ln_gamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let mut a = PathRng::for_path(42, 0);
        let mut b = PathRng::for_path(42, 0);
        let mut c = PathRng::for_path(42, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn uniform_in_unit_interval_with_sane_mean() {
        let mut rng = PathRng::for_path(7, 3);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn poisson_moments_both_branches() {
        for &lambda in &[3.0f64, 50.0] {
            let mut rng = PathRng::for_path(11, 0);
            let n = 200_000usize;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let k = rng.poisson(lambda) as f64;
                sum += k;
                sum_sq += k * k;
            }
            let mean = sum / n as f64;
            let var = sum_sq / n as f64 - mean * mean;
            let se_mean = (lambda / n as f64).sqrt();
            assert!((mean - lambda).abs() < 4.0 * se_mean, "lambda {lambda}: mean {mean}");
            assert!((var - lambda).abs() < 0.05 * lambda, "lambda {lambda}: var {var}");
        }
    }

    #[test]
    fn poisson_gof_across_the_branch_switch() {
        // lambda = 15 exercises PTRS; compare against the analytic pmf.
        let lambda = 15.0;
        let n = 100_000usize;
        let mut rng = PathRng::for_path(5, 0);
        let mut counts = vec![0u64; 64];
        for _ in 0..n {
            let k = (rng.poisson(lambda) as usize).min(63);
            counts[k] += 1;
        }
        let probs: Vec<f64> = (0..64)
            .map(|k| {
                (k as f64 * lambda.ln() - lambda
                    - statrs::function::gamma::ln_gamma(k as f64 + 1.0))
                .exp()
            })
            .collect();
        let r = crate::stats::chi_square_gof(&counts, &probs, 5.0);
        assert!(r.p_value > 0.001, "p = {}", r.p_value);
    }

    #[test]
    fn poisson_zero_mean() {
        let mut rng = PathRng::for_path(1, 1);
        assert_eq!(rng.poisson(0.0), 0);
    }
}

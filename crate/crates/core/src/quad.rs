//! Adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! A 15-point Kronrod rule with embedded 7-point Gauss rule is applied
//! per panel; the globally worst panel is bisected until the summed error
//! estimate meets `max(abs_tol, rel_tol * |value|)` or the panel cap
//! [`MAX_PANELS`] is hit. Integrands are complex-valued (real integrands
//! go through [`integrate`]); error estimates use the complex modulus.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on the number of panels before reporting non-convergence.
pub const MAX_PANELS: usize = 4096;

/// Abscissas of the 15-point Kronrod rule on [-1, 1] (positive half).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Weights of the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Weights of the 15-point Kronrod rule.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    /// Summed per-panel error estimate.
    pub error: f64,
    pub panels: usize,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = Complex64::new(0.0, 0.0);
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.norm();
    let mut fv = [Complex64::new(0.0, 0.0); 15];
    fv[7] = f_center;

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        let sum = f1 + f2;
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * sum;
        }
    }
    res_gauss += WG[3] * f_center;

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).norm() + (fv[14 - j] - mean).norm());
    }

    let value = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK-style rescaling of the raw Kronrod-Gauss difference.
    let raw = ((res_kronrod - res_gauss) * half).norm();
    let mut err = raw;
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if res_abs > floor {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    Panel { a, b, value, error: err }
}

/// Integrate a complex-valued function over `[a, b]`.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: Complex64::new(0.0, 0.0), error: 0.0, panels: 0 });
    }

    let mut panels: Vec<Panel> = vec![gk15(&f, a, b)];
    loop {
        let value: Complex64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let target = abs_tol.max(rel_tol * value.norm());
        if error <= target {
            return Ok(Quadrature { value, error, panels: panels.len() });
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::QuadratureNoConvergence {
                achieved: error,
                requested: target,
                a,
                b,
            });
        }
        // Bisect the panel with the largest error estimate.
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|(i, p), (j, q)| {
                p.error.partial_cmp(&q.error).unwrap().then(j.cmp(i))
            })
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a: pa, b: pb, .. } = panels[worst];
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // Interval no longer splittable in f64; accept what we have.
            let value: Complex64 = panels.iter().map(|p| p.value).sum();
            let error: f64 = panels.iter().map(|p| p.error).sum();
            return Ok(Quadrature { value, error, panels: panels.len() });
        }
        panels[worst] = gk15(&f, pa, mid);
        panels.push(gk15(&f, mid, pb));
    }
}

/// Integrate a real-valued function over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let q = integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol)?;
    Ok((q.value.re, q.error))
}

//! Globally adaptive 21-point Gauss–Kronrod quadrature for real and complex
//! integrands.

use num_complex::Complex64;
use rayon::prelude::*;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        // Bump windows have values of order e^{-8}, so the absolute tolerance
        // sits far below the window scale.
        Self {
            abs_tol: 1e-22,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Config(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::Config("max_subdivisions must be at least 10".into()));
        }
        Ok(())
    }
}

pub trait QuadValue:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
    pub panels: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes (10-point rule).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn panel_nodes(a: f64, b: f64) -> [f64; 21] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [0.0; 21];
    for j in 0..10 {
        x[2 * j] = c - h * XGK[j];
        x[2 * j + 1] = c + h * XGK[j];
    }
    x[20] = c;
    x
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    abs_value: f64,
    /// False once the error estimate is within a small factor of the
    /// roundoff floor.
    refinable: bool,
}

fn rule<T: QuadValue>(a: f64, b: f64, f: &[T; 21]) -> Panel<T> {
    let h = 0.5 * (b - a);
    let center = f[20];
    let mut kronrod = center * WGK[10];
    let mut gauss = T::zero();
    let mut abs_k = center.magnitude() * WGK[10];
    for j in 0..10 {
        let pair = f[2 * j] + f[2 * j + 1];
        kronrod = kronrod + pair * WGK[j];
        abs_k += WGK[j] * (f[2 * j].magnitude() + f[2 * j + 1].magnitude());
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (center - mean).magnitude();
    for j in 0..10 {
        asc += WGK[j] * ((f[2 * j] - mean).magnitude() + (f[2 * j + 1] - mean).magnitude());
    }
    let value = kronrod * h;
    let abs_value = abs_k * h.abs();
    let asc = asc * h.abs();
    let mut err = ((kronrod - gauss) * h).magnitude();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_value;
    let refinable = err > 4.0 * floor;
    Panel {
        a,
        b,
        value,
        error: err.max(floor),
        abs_value,
        refinable,
    }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// delimited by `points` (which must be strictly increasing).
pub fn integrate<T, F>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<QuadEstimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_batched(
        |xs: &[f64; 21]| {
            let mut out = [T::zero(); 21];
            for (o, &x) in out.iter_mut().zip(xs) {
                *o = f(x);
            }
            out
        },
        points,
        spec,
    )
}

/// As [`integrate`], with the 21 nodes of each panel evaluated in parallel.
/// Results do not depend on the thread count.
pub fn integrate_parallel<T, F>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadEstimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T + Sync,
{
    integrate_batched(
        |xs: &[f64; 21]| {
            let vals: Vec<T> = xs.par_iter().map(|&x| f(x)).collect();
            let mut out = [T::zero(); 21];
            out.copy_from_slice(&vals);
            out
        },
        points,
        spec,
    )
}

fn integrate_batched<T, B>(
    batch: B,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadEstimate<T>>
where
    T: QuadValue,
    B: Fn(&[f64; 21]) -> [T; 21],
{
    spec.validate()?;
    if points.len() < 2 {
        return Err(Error::Config(
            "integration needs at least two points".into(),
        ));
    }
    if points.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("integration points must increase".into()));
    }
    let eval = |a: f64, b: f64| rule(a, b, &batch(&panel_nodes(a, b)));

    let mut panels: Vec<Panel<T>> = points.windows(2).map(|w| eval(w[0], w[1])).collect();
    let mut evaluations = 21 * panels.len();

    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        let mut abs_total = 0.0;
        for p in &panels {
            total = total + p.value;
            err += p.error;
            abs_total += p.abs_value;
        }
        let target = spec.abs_tol.max(spec.rel_tol * total.magnitude());
        let roundoff = 50.0 * f64::EPSILON * abs_total;
        if err <= target || err <= roundoff {
            return Ok(QuadEstimate {
                value: total,
                error: err,
                evaluations,
                panels: panels.len(),
            });
        }
        if panels.len() >= points.len() - 1 + spec.max_subdivisions {
            return Err(Error::Accuracy {
                what: "adaptive quadrature subdivision limit".into(),
                achieved: err,
                requested: target,
            });
        }
        let worst = panels.iter().enumerate().filter(|(_, p)| p.refinable).fold(
            None,
            |acc: Option<(usize, f64)>, (i, p)| match acc {
                Some((_, e)) if e >= p.error => acc,
                _ => Some((i, p.error)),
            },
        );
        let Some((worst, _)) = worst else {
            // every panel is roundoff-limited
            return Ok(QuadEstimate {
                value: total,
                error: err,
                evaluations,
                panels: panels.len(),
            });
        };
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::Accuracy {
                what: "adaptive quadrature panel underflow".into(),
                achieved: err,
                requested: target,
            });
        }
        panels.push(eval(p.a, mid));
        panels.push(eval(mid, p.b));
        evaluations += 42;
    }
}

/// `count + 1` equally spaced points covering `[a, b]`.
pub fn uniform_points(a: f64, b: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    let mut pts: Vec<f64> = (0..=count)
        .map(|i| a + (b - a) * i as f64 / count as f64)
        .collect();
    pts[count] = b;
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let spec = QuadratureSpec::default();
        let r = integrate(|x: f64| x.powi(5), &[0.0, 2.0], &spec).unwrap();
        assert!((r.value - 64.0 / 6.0).abs() < 1e-13);
        let r = integrate(|x: f64| (-x).exp(), &[0.0, 30.0], &spec).unwrap();
        assert!((r.value - (1.0 - (-30f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_complex() {
        let spec = QuadratureSpec::default();
        let w = 200.0;
        let r = integrate(
            |x: f64| Complex64::from_polar(1.0, w * x),
            &uniform_points(0.0, 1.0, 64),
            &spec,
        )
        .unwrap();
        let exact = (Complex64::from_polar(1.0, w) - 1.0) / Complex64::new(0.0, w);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_is_resolved() {
        let spec = QuadratureSpec::default();
        let r = integrate(|x: f64| x.sqrt(), &[0.0, 1.0], &spec).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn reports_failure() {
        let spec = QuadratureSpec::new(1e-30, 1e-15, 10).unwrap();
        let r = integrate(|x: f64| (1.0 / x).sin(), &[1e-6, 1.0], &spec);
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(QuadratureSpec::new(0.0, 1e-8, 100).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-8, 5).is_err());
        let spec = QuadratureSpec::default();
        assert!(integrate(|x: f64| x, &[1.0, 0.0], &spec).is_err());
    }

    #[test]
    fn parallel_matches_serial() {
        let spec = QuadratureSpec::default();
        let f = |x: f64| (3.0 * x).cos() * (-x * x).exp();
        let a = integrate(f, &[-4.0, 4.0], &spec).unwrap();
        let b = integrate_parallel(f, &[-4.0, 4.0], &spec).unwrap();
        assert_eq!(a.value, b.value);
    }
}

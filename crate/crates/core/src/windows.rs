//! Smooth compactly supported windows and their transforms.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::arith::{jacobi, kronecker, FactorTables};
use crate::error::{Error, Result};
use crate::gauss::gauss_closed;
use crate::quad::{integrate, uniform_points, QuadratureSpec};
use crate::special::{ln_cos_plus_sin, ln_gamma, ln_sin};
use crate::sum::CompensatedSum;

/// A non-negative function supported in `[a, b]` with `0 < a < b`.
pub trait Window: Sync {
    fn support(&self) -> (f64, f64);
    fn eval(&self, x: f64) -> f64;
}

/// `W(x) = exp(−1/(x−a) − 1/(b−x))` on `(a, b)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothWindow {
    a: f64,
    b: f64,
    mass: f64,
}

impl SmoothWindow {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::Config(format!(
                "window support [{a}, {b}] must satisfy 0 < a < b < ∞"
            )));
        }
        let mut w = Self { a, b, mass: 0.0 };
        let q = QuadratureSpec::default();
        w.mass = integrate(|x| w.eval(x), &uniform_points(a, b, 8), &q)?.value;
        Ok(w)
    }

    /// `[1/2, 1]`, the default for both windows.
    pub fn standard() -> Self {
        Self::new(0.5, 1.0).expect("valid support")
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn lower(&self) -> f64 {
        self.a
    }

    pub fn upper(&self) -> f64 {
        self.b
    }
}

impl Window for SmoothWindow {
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        (-1.0 / (x - self.a) - 1.0 / (self.b - x)).exp()
    }
}

pub fn window_eval(w: &SmoothWindow, x: f64) -> f64 {
    w.eval(x)
}

/// `F̃(ξ) = ∫ (cos 2πξx + sin 2πξx) W(x) dx`.
pub fn tilde_transform<W: Window + ?Sized>(w: &W, xi: f64, q: &QuadratureSpec) -> Result<f64> {
    let (a, b) = w.support();
    // The phase 2πξx carries an absolute rounding error of about eps·2πξx,
    // so the integral is known only to that times ∫|W|; the tolerance never
    // asks for more.
    let grid = uniform_points(a, b, 64);
    let mass: f64 = grid.iter().map(|&x| w.eval(x).abs()).sum::<f64>() * (b - a) / 64.0;
    let phase_floor = 16.0 * f64::EPSILON * TAU * xi.abs() * a.abs().max(b.abs()) * mass;
    let spec = QuadratureSpec {
        abs_tol: q.abs_tol.max(phase_floor),
        ..*q
    };
    // quarter-period panels
    let panels = 4 + (4.0 * xi.abs() * (b - a)).ceil() as usize;
    let r = integrate(
        |x| {
            let arg = TAU * xi * x;
            (arg.cos() + arg.sin()) * w.eval(x)
        },
        &uniform_points(a, b, panels),
        &spec,
    )?;
    Ok(r.value)
}

/// Plain cosine or sine transform `∫ W(x) CS(2πxy) dx`.
pub fn cs_transform_direct<W: Window + ?Sized>(
    w: &W,
    y: f64,
    kind: CsKind,
    q: &QuadratureSpec,
) -> Result<f64> {
    let (a, b) = w.support();
    let panels = 4 + (4.0 * y.abs() * (b - a)).ceil() as usize;
    let r = integrate(
        |x| {
            let arg = TAU * y * x;
            let cs = match kind {
                CsKind::Cos => arg.cos(),
                CsKind::Sin => arg.sin(),
            };
            cs * w.eval(x)
        },
        &uniform_points(a, b, panels),
        q,
    )?;
    Ok(r.value)
}

/// `W_M(s) = ∫₀^∞ x^{s−1} W(x) dx`.
pub fn mellin_transform<W: Window + ?Sized>(
    w: &W,
    s: Complex64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let (a, b) = w.support();
    let spread = (b / a).ln();
    let panels = 4 + (s.im.abs() * spread / FRAC_PI_2).ceil() as usize;
    let sm1 = s - 1.0;
    let r = integrate(
        |x| {
            let v = w.eval(x);
            if v == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (sm1 * x.ln()).exp() * v
            }
        },
        &uniform_points(a, b, panels),
        q,
    )?;
    Ok(r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsKind {
    Cos,
    Sin,
}

/// Result of a truncated vertical-line integral.
#[derive(Debug, Clone, Copy)]
pub struct LineIntegral {
    pub value: f64,
    /// Truncation height `T`; the line is integrated over `|Im s| <= T`.
    pub height: f64,
    /// Quadrature error plus the integrand envelope at the cut.
    pub error: f64,
}

/// `ln |Γ(s) CS(sign·πs/2)|`-style complex log of `Γ(s)·CS(sign·πs/2)`.
fn ln_gamma_cs(s: Complex64, kind: CsKind, sign: f64) -> Complex64 {
    let z = s * (sign * FRAC_PI_2);
    let ln_cs = match kind {
        CsKind::Cos => ln_sin(z + FRAC_PI_2),
        CsKind::Sin => ln_sin(z),
    };
    ln_gamma(s) + ln_cs
}

/// Searches the ladder 8·1.25^j for the first height beyond which
/// `envelope` stays below `tol` (checked at T, 1.25T, 1.5T, 2T).
pub(crate) fn truncation_height<F: Fn(f64) -> Result<f64>>(
    envelope: F,
    tol: f64,
    max_height: f64,
) -> Result<(f64, f64)> {
    let mut t = 8.0;
    while t <= max_height {
        let mut worst: f64 = 0.0;
        for f in [1.0, 1.25, 1.5, 2.0] {
            worst = worst.max(envelope(t * f)?);
        }
        if worst < tol {
            return Ok((t, worst));
        }
        t *= 1.25;
    }
    Err(Error::Accuracy {
        what: format!("vertical-line truncation up to height {max_height}"),
        achieved: envelope(max_height)?,
        requested: tol,
    })
}

pub(crate) const MAX_LINE_HEIGHT: f64 = 4096.0;

/// `∫₀^∞ W(x) CS(2πxy) dx` through the Mellin–Barnes representation
/// `(1/2πi) ∫_{(line)} W_M(1−s) Γ(s) CS(sgn(y)πs/2) (2π|y|)^{−s} ds`.
pub fn cs_transform_via_mellin<W: Window + ?Sized>(
    w: &W,
    y: f64,
    kind: CsKind,
    line: f64,
    q: &QuadratureSpec,
) -> Result<LineIntegral> {
    if y == 0.0 || !y.is_finite() {
        return Err(Error::Domain("transform variable must be nonzero".into()));
    }
    if !(line > 0.0 && line < 1.0) {
        return Err(Error::Domain(format!(
            "line abscissa {line} outside (0, 1)"
        )));
    }
    let sign = y.signum();
    let ln_scale = (TAU * y.abs()).ln();
    let integrand = |t: f64| -> Result<Complex64> {
        let s = Complex64::new(line, t);
        let wm = mellin_transform(w, Complex64::new(1.0, 0.0) - s, q)?;
        Ok(wm * (ln_gamma_cs(s, kind, sign) - s * ln_scale).exp())
    };
    let scale = w_scale(w, q)?;
    let tol = (q.abs_tol).max(q.rel_tol * scale) * 1e-2;
    let (height, tail) = truncation_height(|t| Ok(integrand(t)?.norm()), tol, MAX_LINE_HEIGHT)?;

    // The integrand is conjugate-symmetric in t, so the line integral equals
    // (1/π) ∫₀^T Re(...) dt.
    let panels = (height / 2.0).ceil() as usize;
    let r = integrate(
        |t| integrand(t).map(|v| v.re).unwrap_or(f64::NAN),
        &uniform_points(0.0, height, panels),
        &line_spec(q, scale),
    )?;
    if !r.value.is_finite() {
        return Err(Error::Accuracy {
            what: "Mellin-Barnes integrand".into(),
            achieved: f64::INFINITY,
            requested: tol,
        });
    }
    Ok(LineIntegral {
        value: r.value / PI,
        height,
        error: r.error / PI + tail * height / PI,
    })
}

/// The inner transforms carry relative error `rel_tol`, so the outer integral
/// is resolved relative to the window scale rather than to its own value.
fn line_spec(q: &QuadratureSpec, scale: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: q.abs_tol.max(q.rel_tol * scale),
        ..*q
    }
}

fn w_scale<W: Window + ?Sized>(w: &W, q: &QuadratureSpec) -> Result<f64> {
    let (a, b) = w.support();
    Ok(integrate(|x| w.eval(x).abs(), &uniform_points(a, b, 8), q)?.value)
}

/// `|Γ(s)(cos ± sin)(πs/2)| / |s|^{Re s − 1/2}`.
pub fn gamma_cs_envelope_ratio(s: Complex64, sign: f64) -> f64 {
    let ln_val = ln_gamma(s) + ln_cos_plus_sin(s * FRAC_PI_2, sign);
    (ln_val.re - (s.re - 0.5) * s.norm().ln()).exp()
}

/// Largest envelope ratio over `σ + it` for the given grids, both signs.
pub fn gamma_decay_constant(sigmas: &[f64], heights: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &sigma in sigmas {
        for &t in heights {
            for sign in [1.0, -1.0] {
                worst = worst.max(gamma_cs_envelope_ratio(Complex64::new(sigma, t), sign));
            }
        }
    }
    worst
}

/// Both sides of the quadratic-character Poisson summation formula.
#[derive(Debug, Clone, Copy)]
pub struct PoissonCheck {
    pub n: u64,
    pub x: f64,
    /// `Σ_{d odd} (d/n) F(d/X)`.
    pub lhs: f64,
    /// `(X/2n)(2/n) Σ_{|k|<=K} (−1)^k G_k(n) F̃(kX/2n)`.
    pub rhs: f64,
    pub k_max: i64,
    /// Estimated size of the omitted `|k| > K` terms.
    pub tail_bound: f64,
    /// `Σ_d |F(d/X)|`, the natural size of either side.
    pub scale: f64,
}

impl PoissonCheck {
    pub fn abs_residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    /// Residual relative to `scale`. Relative to `|lhs|` it would be
    /// undefined whenever the character sum cancels exactly, as it does when
    /// `(d/n)` is odd under the reflection of a symmetric window.
    pub fn relative_residual(&self) -> f64 {
        self.abs_residual() / self.scale
    }
}

/// Evaluates both sides for odd `n`. The dual sum grows in blocks of `|k|`
/// until the last block is below `tail_tol` times `scale`.
pub fn poisson_check<W: Window + ?Sized>(
    n: u64,
    x: f64,
    w: &W,
    tables: &FactorTables,
    q: &QuadratureSpec,
    tail_tol: f64,
) -> Result<PoissonCheck> {
    if n % 2 == 0 {
        return Err(Error::Domain(format!("n = {n} must be odd")));
    }
    if !(x > 0.0) {
        return Err(Error::Domain("X must be positive".into()));
    }
    let (a, b) = w.support();
    let mut lhs = CompensatedSum::new();
    let mut scale = 0.0;
    let d_lo = (a * x).floor() as u64;
    let d_hi = (b * x).ceil() as u64;
    for d in d_lo.max(1)..=d_hi {
        if d % 2 == 0 {
            continue;
        }
        let v = w.eval(d as f64 / x);
        if v == 0.0 {
            continue;
        }
        scale += v;
        lhs += jacobi(d as i64, n) as f64 * v;
    }

    let step = x / (2.0 * n as f64);
    let term = |k: i64| -> Result<f64> {
        let g = gauss_closed(k, n, tables)?;
        if g == 0.0 {
            return Ok(0.0);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * g * tilde_transform(w, k as f64 * step, q)?)
    };
    let mut dual = CompensatedSum::new();
    dual += term(0)?;
    let mut k_done = 0i64;
    let mut block = 8i64;
    let tail_bound;
    loop {
        let mut block_abs = 0.0;
        for k in k_done + 1..=k_done + block {
            let tp = term(k)?;
            let tm = term(-k)?;
            block_abs += tp.abs() + tm.abs();
            dual += tp;
            dual += tm;
        }
        k_done += block;
        let block_size = step * block_abs;
        if block_size <= tail_tol * scale.max(f64::MIN_POSITIVE) {
            tail_bound = block_size;
            break;
        }
        if k_done > 1_000_000 {
            return Err(Error::Accuracy {
                what: "Poisson dual sum truncation".into(),
                achieved: block_size,
                requested: tail_tol * scale,
            });
        }
        block = block.max(k_done / 2);
    }
    let two_n = kronecker(2, n)? as f64;
    Ok(PoissonCheck {
        n,
        x,
        lhs: lhs.value(),
        rhs: step * two_n * dual.value(),
        k_max: k_done,
        tail_bound,
        scale,
    })
}

/// `W(x)` recovered by Mellin inversion on the line `Re s = c`:
/// `(1/2πi) ∫_{(c)} x^{−s} W_M(s) ds`.
pub fn mellin_inverse<W: Window + ?Sized>(
    w: &W,
    x: f64,
    c: f64,
    q: &QuadratureSpec,
) -> Result<LineIntegral> {
    if !(x > 0.0) {
        return Err(Error::Domain("Mellin inversion needs x > 0".into()));
    }
    let lx = x.ln();
    let integrand = |t: f64| -> Result<Complex64> {
        let s = Complex64::new(c, t);
        Ok(mellin_transform(w, s, q)? * (-s * lx).exp())
    };
    let scale = w_scale(w, q)?;
    let tol = q.abs_tol.max(q.rel_tol * scale) * 1e-2;
    let (height, tail) = truncation_height(|t| Ok(integrand(t)?.norm()), tol, MAX_LINE_HEIGHT)?;
    let panels = (height / 2.0).ceil() as usize;
    let r = integrate(
        |t| integrand(t).map(|v| v.re).unwrap_or(f64::NAN),
        &uniform_points(0.0, height, panels),
        &line_spec(q, scale),
    )?;
    if !r.value.is_finite() {
        return Err(Error::Accuracy {
            what: "Mellin inversion integrand".into(),
            achieved: f64::INFINITY,
            requested: tol,
        });
    }
    Ok(LineIntegral {
        value: r.value / PI,
        height,
        error: r.error / PI + tail * height / PI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    /// Composite Simpson on a dense uniform grid; an oracle independent of
    /// the adaptive engine.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            s += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    struct Combo<'a> {
        alpha: f64,
        first: &'a SmoothWindow,
        beta: f64,
        second: &'a SmoothWindow,
    }

    impl Window for Combo<'_> {
        fn support(&self) -> (f64, f64) {
            let (a1, b1) = self.first.support();
            let (a2, b2) = self.second.support();
            (a1.min(a2), b1.max(b2))
        }
        fn eval(&self, x: f64) -> f64 {
            self.alpha * self.first.eval(x) + self.beta * self.second.eval(x)
        }
    }

    #[test]
    fn bump_values() {
        let w = SmoothWindow::new(1.0, 2.0).unwrap();
        assert_eq!(w.eval(0.0), 0.0);
        assert!((w.eval(1.5) - (-4f64).exp()).abs() < 1e-16);
        assert_eq!(w.eval(1.0), 0.0);
        assert_eq!(w.eval(2.0), 0.0);
        for h in [1e-1, 1e-2, 1e-3] {
            assert!(w.eval(1.0 + h) / h < 1e-3);
            assert!(w.eval(2.0 - h) / h < 1e-3);
        }
        assert!(SmoothWindow::new(0.0, 1.0).is_err());
        assert!(SmoothWindow::new(2.0, 1.0).is_err());
    }

    #[test]
    fn mass_against_simpson() {
        for (a, b) in [(0.5, 1.0), (1.0, 2.0), (0.25, 3.0)] {
            let w = SmoothWindow::new(a, b).unwrap();
            let oracle = simpson(|x| w.eval(x), a, b, 200_000);
            assert!(
                ((w.mass() - oracle) / oracle).abs() < 1e-10,
                "[{a},{b}]: {} vs {oracle}",
                w.mass()
            );
            assert!(w.mass() > 0.0);
        }
    }

    #[test]
    fn tilde_values() {
        let w = SmoothWindow::new(1.0, 2.0).unwrap();
        assert!((tilde_transform(&w, 0.0, &q()).unwrap() - w.mass()).abs() < 1e-15);
        let oracle = simpson(
            |x| (w.eval(x)) * ((PI * x).cos() + (PI * x).sin()),
            1.0,
            2.0,
            200_000,
        );
        let v = tilde_transform(&w, 0.5, &q()).unwrap();
        assert!((v - oracle).abs() < 1e-8 * w.mass().max(1e-300) + 1e-15);
        assert!((v - oracle).abs() / oracle.abs() < 1e-8);
    }

    #[test]
    fn tilde_decays_faster_than_cubic() {
        let w = SmoothWindow::new(1.0, 2.0).unwrap();
        let fitted = [10.0f64, 20.0, 40.0, 80.0]
            .iter()
            .map(|&xi| tilde_transform(&w, xi, &q()).unwrap().abs() * xi.powi(3))
            .collect::<Vec<_>>();
        assert!(fitted.iter().all(|c| c.is_finite()));
        // the scaled values shrink, so a single C_3 bounds the whole scan
        assert!(fitted[3] < fitted[0]);
        assert!(fitted[2] <= fitted.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn mellin_values() {
        let w = SmoothWindow::new(1.0, 2.0).unwrap();
        let m1 = mellin_transform(&w, Complex64::new(1.0, 0.0), &q()).unwrap();
        assert!((m1.re - w.mass()).abs() < 1e-15 && m1.im.abs() < 1e-18);
        let m2 = mellin_transform(&w, Complex64::new(2.0, 0.0), &q()).unwrap();
        assert!(m2.re > w.mass() && m2.re < 2.0 * w.mass());
        let s = Complex64::new(0.5, 10.0);
        let m = mellin_transform(&w, s, &q()).unwrap();
        let re = simpson(
            |x| w.eval(x) * ((s - 1.0) * x.ln()).exp().re,
            1.0,
            2.0,
            200_000,
        );
        let im = simpson(
            |x| w.eval(x) * ((s - 1.0) * x.ln()).exp().im,
            1.0,
            2.0,
            200_000,
        );
        assert!((m - Complex64::new(re, im)).norm() < 1e-8 * w.mass());
        // super-polynomial decay in the imaginary direction
        let far = mellin_transform(&w, Complex64::new(0.5, 80.0), &q()).unwrap();
        let farther = mellin_transform(&w, Complex64::new(0.5, 160.0), &q()).unwrap();
        assert!(far.norm() < 1e-3 * m.norm());
        assert!(farther.norm() * 160f64.powi(4) < far.norm() * 80f64.powi(4));
    }

    #[test]
    fn cs_transform_routes_agree() {
        let w = SmoothWindow::standard();
        let scale = w.mass();
        let y = 0.3;
        let cos_mb = cs_transform_via_mellin(&w, y, CsKind::Cos, 0.5, &q()).unwrap();
        let sin_mb = cs_transform_via_mellin(&w, y, CsKind::Sin, 0.5, &q()).unwrap();
        let cos_d = cs_transform_direct(&w, y, CsKind::Cos, &q()).unwrap();
        let sin_d = cs_transform_direct(&w, y, CsKind::Sin, &q()).unwrap();
        assert!(
            (cos_mb.value - cos_d).abs() < 1e-6 * scale,
            "{} vs {cos_d}",
            cos_mb.value
        );
        assert!(
            (sin_mb.value - sin_d).abs() < 1e-6 * scale,
            "{} vs {sin_d}",
            sin_mb.value
        );
        let tilde = tilde_transform(&w, y, &q()).unwrap();
        assert!((cos_mb.value + sin_mb.value - tilde).abs() < 1e-6 * scale);
        assert!(cos_mb.height > 0.0);
        // negative y flips the sine
        let sin_neg = cs_transform_via_mellin(&w, -y, CsKind::Sin, 0.3, &q()).unwrap();
        assert!((sin_neg.value + sin_d).abs() < 1e-6 * scale);
    }

    #[test]
    fn cs_transform_domain_errors() {
        let w = SmoothWindow::standard();
        assert!(cs_transform_via_mellin(&w, 0.0, CsKind::Cos, 0.5, &q()).is_err());
        assert!(cs_transform_via_mellin(&w, 0.3, CsKind::Cos, 1.0, &q()).is_err());
    }

    #[test]
    fn gamma_envelope_is_bounded() {
        let heights: Vec<f64> = (0..10).map(|j| 2f64.powi(j)).collect();
        let c = gamma_decay_constant(&[0.25, 0.5, 0.75, 1.0], &heights);
        assert!(c.is_finite() && c <= 10.0, "{c}");
    }

    #[test]
    fn transforms_are_linear() {
        let w1 = SmoothWindow::new(0.5, 1.0).unwrap();
        let w2 = SmoothWindow::new(0.7, 1.6).unwrap();
        let (alpha, beta) = (2.5, -0.75);
        let combo = Combo {
            alpha,
            first: &w1,
            beta,
            second: &w2,
        };
        let scale = w1.mass() + w2.mass();
        for xi in [0.0, 0.3, 4.0] {
            let lhs = tilde_transform(&combo, xi, &q()).unwrap();
            let rhs = alpha * tilde_transform(&w1, xi, &q()).unwrap()
                + beta * tilde_transform(&w2, xi, &q()).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * scale);
        }
        for s in [Complex64::new(0.5, 3.0), Complex64::new(1.5, -20.0)] {
            let lhs = mellin_transform(&combo, s, &q()).unwrap();
            let rhs = mellin_transform(&w1, s, &q()).unwrap() * alpha
                + mellin_transform(&w2, s, &q()).unwrap() * beta;
            assert!((lhs - rhs).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn poisson_small_cases() {
        let tables = FactorTables::build(1000).unwrap();
        let w = SmoothWindow::standard();
        for n in [1u64, 3, 15] {
            let r = poisson_check(n, 25.0, &w, &tables, &q(), 1e-10).unwrap();
            assert!(r.relative_residual() < 1e-6, "{r:?}");
        }
        assert!(poisson_check(4, 25.0, &w, &tables, &q(), 1e-10).is_err());
    }

    #[test]
    fn mellin_inversion_recovers_window() {
        let w = SmoothWindow::standard();
        for x in [0.55, 0.7, 0.8, 0.95] {
            let r = mellin_inverse(&w, x, 0.58, &q()).unwrap();
            assert!((r.value - w.eval(x)).abs() < 1e-8 * w.eval(0.75), "x={x}");
        }
    }
}

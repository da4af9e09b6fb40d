//! The symmetric-square L-function `L(s, sym² f)` and its completion.
//!
//! `L(s, sym² f) = ζ(2s) Σ λ(n²) n^{−s} = Σ a_n n^{−s}` with
//! `a_n = Σ_{m² | n} λ((n/m²)²)`. The completion
//! `Λ(s) = π^{−3s/2} Γ((s+1)/2) Γ((s+κ−1)/2) Γ((s+κ)/2) L(s)` is entire and
//! satisfies `Λ(s) = Λ(1−s)`.
//!
//! Values are computed from the smoothed approximate functional equation
//!
//! ```text
//! L(s) = Σ a_n n^{−s} V_s(n) + Σ a_n n^{−(1−s)} V_{1−s}(n),
//! V_z(n) = (1/2πi) ∫_{(c)} γ(z+w)/γ(s) · G_z(w) · n^{−w} dw/w,
//! G_z(w) = exp(iθ_z w + w²/B),
//! ```
//!
//! where `θ_z = −(3π/4) tanh(Im z)` cancels the exponential growth of the
//! Γ-ratio along the line. The `w`-integral uses the trapezoid rule, whose
//! error decays like `exp(−2πg/h)` with `g` the distance from the line to
//! the nearest singularity.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::arith::FactorTables;
use crate::error::{Error, Result};
use crate::modform::{lambda_at_squares, EigenformCoefficients};
use crate::special::ln_gamma;

/// Default smoothing parameter `B` in `G(w) = exp(iθw + w²/B)`.
pub const DEFAULT_SMOOTHING: f64 = 8.0;
/// Default absolute tolerance for the truncation of each half-sum.
pub const DEFAULT_L_TOLERANCE: f64 = 1e-12;
/// Nodes per unit distance from the line to the nearest singularity.
const NODES_PER_GAP: f64 = 6.0;

/// Coefficients and truncation parameters for `L(s, sym² f)`.
#[derive(Debug, Clone)]
pub struct LSeriesAccessor {
    weight: u32,
    coeffs: Vec<f64>,
    smoothing: f64,
    tolerance: f64,
}

/// A computed value with its error estimate and the number of terms used.
#[derive(Debug, Clone, Copy)]
pub struct LValue {
    pub value: Complex64,
    pub error: f64,
    pub terms: usize,
}

impl LSeriesAccessor {
    /// Builds `a_n` for `n <= n_terms` from `λ(k²)`, `k <= n_terms`.
    pub fn new(coeffs: &EigenformCoefficients, n_terms: usize) -> Result<Self> {
        let squares = lambda_at_squares(coeffs, n_terms)?;
        Ok(Self {
            weight: coeffs.weight(),
            coeffs: convolve_with_squares(&squares),
            smoothing: DEFAULT_SMOOTHING,
            tolerance: DEFAULT_L_TOLERANCE,
        })
    }

    pub fn with_smoothing(mut self, b: f64) -> Result<Self> {
        if !(b > 0.5 && b.is_finite()) {
            return Err(Error::Config(format!(
                "smoothing parameter {b} must exceed 0.5"
            )));
        }
        self.smoothing = b;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Config("L-value tolerance must be positive".into()));
        }
        self.tolerance = tol;
        Ok(self)
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Number of available Dirichlet coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `a_n`, `1 <= n <= len()`.
    pub fn coefficient(&self, n: usize) -> f64 {
        self.coeffs[n]
    }

    /// `ln γ(s)` for `γ(s) = π^{−3s/2} Γ((s+1)/2) Γ((s+κ−1)/2) Γ((s+κ)/2)`.
    pub fn ln_gamma_factor(&self, s: Complex64) -> Complex64 {
        let k = self.weight as f64;
        -1.5 * s * PI.ln()
            + ln_gamma((s + 1.0) * 0.5)
            + ln_gamma((s + k - 1.0) * 0.5)
            + ln_gamma((s + k) * 0.5)
    }

    /// Plain partial sum `Σ_{n <= n_max} a_n n^{−s}`.
    pub fn partial_sum(&self, s: Complex64, n_max: usize) -> Result<Complex64> {
        if n_max > self.len() {
            return Err(Error::InsufficientTable {
                needed: n_max as u64,
                limit: self.len() as u64,
            });
        }
        Ok((1..=n_max)
            .map(|n| self.coeffs[n] * (-s * (n as f64).ln()).exp())
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b))
    }
}

/// `a_n = Σ_{m² k = n} b_k` for `n < b.len()` (index 0 unused).
fn convolve_with_squares(b: &[f64]) -> Vec<f64> {
    let n_max = b.len() - 1;
    let mut a = vec![0.0; n_max + 1];
    let mut m = 1usize;
    while m * m <= n_max {
        let m2 = m * m;
        for k in 1..=n_max / m2 {
            a[k * m2] += b[k];
        }
        m += 1;
    }
    a
}

/// `a_n` for `n <= n_max` assembled multiplicatively from the local factors
/// `(1 − λ(p²)x + λ(p²)x² − x³)^{−1}`, using only `λ(p)`.
pub fn euler_product_coefficients(
    coeffs: &EigenformCoefficients,
    n_max: usize,
) -> Result<Vec<f64>> {
    let tables = FactorTables::build(n_max as u64)?;
    let mut out = vec![0.0; n_max + 1];
    out[1] = 1.0;
    let mut local: Vec<Vec<f64>> = vec![Vec::new(); n_max + 1];
    for &p in tables.primes() {
        let p = p as usize;
        if p > coeffs.limit() {
            return Err(Error::InsufficientTable {
                needed: p as u64,
                limit: coeffs.limit() as u64,
            });
        }
        let mut e_max = 0;
        let mut pk = 1usize;
        while pk <= n_max / p {
            pk *= p;
            e_max += 1;
        }
        let l2 = coeffs.lambda(p).powi(2) - 1.0;
        // c_e = l2·c_{e−1} − l2·c_{e−2} + c_{e−3}
        let mut c = vec![0.0; e_max + 1];
        c[0] = 1.0;
        for e in 1..=e_max {
            let mut v = l2 * c[e - 1];
            if e >= 2 {
                v -= l2 * c[e - 2];
            }
            if e >= 3 {
                v += c[e - 3];
            }
            c[e] = v;
        }
        local[p] = c;
    }
    for n in 2..=n_max {
        let p = tables.spf(n as u64) as usize;
        let mut rest = n / p;
        let mut e = 1;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        out[n] = out[rest] * local[p][e];
    }
    Ok(out)
}

/// One half of the approximate functional equation:
/// `Σ a_n n^{−z} V_z(n)` normalized by `γ(s)`.
struct HalfSum {
    value: Complex64,
    error: f64,
    terms: usize,
}

fn theta(z: Complex64) -> f64 {
    -3.0 * FRAC_PI_4 * z.im.tanh()
}

/// `ln(γ(z+w)/γ(s) · G_z(w) / w)`.
fn ln_weight(acc: &LSeriesAccessor, z: Complex64, ln_gs: Complex64, w: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    acc.ln_gamma_factor(z + w) - ln_gs + i * theta(z) * w + w * w / acc.smoothing - w.ln()
}

/// `(1/2π) ∫ |weight(c+iy)| dy`, a bound for `|V_z(n)| n^{c}`.
fn mellin_bound(acc: &LSeriesAccessor, z: Complex64, ln_gs: Complex64, c: f64) -> f64 {
    let h = 0.5;
    let y_max = (acc.smoothing * (60.0 + c * c / acc.smoothing)).sqrt() + 20.0;
    let steps = (2.0 * y_max / h).ceil() as usize;
    let mut total = 0.0;
    for j in 0..=steps {
        let y = -y_max + h * j as f64;
        total += ln_weight(acc, z, ln_gs, Complex64::new(c, y)).re.exp();
    }
    total * h / (2.0 * PI)
}

/// `(σ, K(c))` pairs on the abscissa grid used by [`tail_bound`]; they do
/// not depend on the truncation point.
fn tail_profile(acc: &LSeriesAccessor, z: Complex64, ln_gs: Complex64) -> Vec<(f64, f64)> {
    let c_min = (1.05 - z.re).max(0.25);
    (0..20)
        .map(|j| {
            let c = c_min + j as f64;
            (z.re + c, mellin_bound(acc, z, ln_gs, c))
        })
        .collect()
}

/// Bound on `Σ_{n > N} |a_n| n^{−Re z} |V_z(n)|`, using `|a_n| <= d₃(n)`
/// and `Σ_{n <= x} d₃(n) <= x (ln x + 3)² / 2`.
fn tail_bound(profile: &[(f64, f64)], n: usize) -> f64 {
    let ln_n = (n as f64).ln();
    profile
        .iter()
        .map(|&(sigma, k)| {
            k * (ln_n + 3.0).powi(2) * ((1.0 - sigma) * ln_n).exp() * sigma / (sigma - 1.0)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest term count in the ladder `64·2^{j/2}` meeting the tolerance.
fn choose_terms(
    acc: &LSeriesAccessor,
    z: Complex64,
    profile: &[(f64, f64)],
    tol: f64,
) -> Result<(usize, f64)> {
    let mut n = 64.0f64;
    loop {
        let terms = (n as usize).min(acc.len());
        let bound = tail_bound(profile, terms);
        if bound <= tol {
            return Ok((terms, bound));
        }
        if terms == acc.len() {
            return Err(Error::Accuracy {
                what: format!("symmetric-square series truncation at z = {z}"),
                achieved: bound,
                requested: tol,
            });
        }
        n *= std::f64::consts::SQRT_2;
    }
}

fn half_sum(
    acc: &LSeriesAccessor,
    z: Complex64,
    ln_gs: Complex64,
    forced_terms: Option<usize>,
    tol: f64,
) -> Result<HalfSum> {
    let profile = tail_profile(acc, z, ln_gs);
    let (terms, tail) = match forced_terms {
        Some(n) => {
            if n > acc.len() {
                return Err(Error::InsufficientTable {
                    needed: n as u64,
                    limit: acc.len() as u64,
                });
            }
            (n, tail_bound(&profile, n))
        }
        None => choose_terms(acc, z, &profile, tol)?,
    };
    // the line lies right of every pole of γ(z+w); the nearest singularity
    // is w = 0 or the pole at w = −1 − z
    let c = (-z.re).max(0.5);
    let gap = c.min(c + 1.0 + z.re);
    let h = gap / NODES_PER_GAP;

    // extend the node range until the integrand envelope is negligible
    let d_bound: f64 = (1..=terms)
        .map(|n| acc.coeffs[n].abs() * (n as f64).powf(-(z.re + c)))
        .sum();
    let envelope = |y: f64| ln_weight(acc, z, ln_gs, Complex64::new(c, y)).re.exp() * d_bound;
    let cutoff = 1e-3 * tol;
    let mut y_max = 8.0;
    while envelope(y_max).max(envelope(-y_max)) > cutoff || y_max < 2.0 * acc.smoothing.sqrt() {
        y_max += 2.0;
        if y_max > 400.0 {
            return Err(Error::Accuracy {
                what: "approximate functional equation node range".into(),
                achieved: envelope(y_max).max(envelope(-y_max)),
                requested: cutoff,
            });
        }
    }
    let count = (2.0 * y_max / h).ceil() as usize + 1;
    let w0 = Complex64::new(c, -y_max);

    // Σ_n a_n n^{−z−w_j} at every node, with n^{−ih} as a geometric ratio
    let mut dirichlet = vec![Complex64::new(0.0, 0.0); count];
    for n in 1..=terms {
        let a = acc.coeffs[n];
        if a == 0.0 {
            continue;
        }
        let ln_n = (n as f64).ln();
        let mut cur = a * (-(z + w0) * ln_n).exp();
        let ratio = Complex64::from_polar(1.0, -h * ln_n);
        for d in dirichlet.iter_mut() {
            *d += cur;
            cur *= ratio;
        }
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut abs_total = 0.0;
    for (j, d) in dirichlet.iter().enumerate() {
        let w = Complex64::new(c, -y_max + h * j as f64);
        let term = ln_weight(acc, z, ln_gs, w).exp() * d;
        abs_total += term.norm();
        total += term;
    }
    let scale = h / (2.0 * PI);
    let discretization = (-2.0 * PI * gap / h).exp() * abs_total * scale;
    Ok(HalfSum {
        value: total * scale,
        error: tail + discretization + cutoff + f64::EPSILON * abs_total * scale * terms as f64,
        terms,
    })
}

fn l_symsq_impl(
    s: Complex64,
    acc: &LSeriesAccessor,
    forced: Option<usize>,
    tol: f64,
) -> Result<LValue> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {s}")));
    }
    if s.re < -2.0 || s.re > 3.0 {
        return Err(Error::Domain(format!("Re s = {} outside [−2, 3]", s.re)));
    }
    let ln_gs = acc.ln_gamma_factor(s);
    let first = half_sum(acc, s, ln_gs, forced, tol)?;
    let second = half_sum(acc, Complex64::new(1.0, 0.0) - s, ln_gs, forced, tol)?;
    Ok(LValue {
        value: first.value + second.value,
        error: first.error + second.error,
        terms: first.terms.max(second.terms),
    })
}

/// `L(s, sym² f)` for `−2 <= Re s <= 3`.
pub fn l_symsq(s: Complex64, acc: &LSeriesAccessor) -> Result<LValue> {
    l_symsq_impl(s, acc, None, acc.tolerance)
}

/// As [`l_symsq`] with the absolute tolerance `max(tol, acc.tolerance())`
/// for each half of the functional equation.
pub fn l_symsq_to(s: Complex64, acc: &LSeriesAccessor, tol: f64) -> Result<LValue> {
    if !(tol > 0.0) {
        return Err(Error::Config("L-value tolerance must be positive".into()));
    }
    l_symsq_impl(s, acc, None, tol.max(acc.tolerance))
}

/// As [`l_symsq`] with a fixed number of terms in each half-sum.
pub fn l_symsq_with_terms(s: Complex64, acc: &LSeriesAccessor, terms: usize) -> Result<LValue> {
    l_symsq_impl(s, acc, Some(terms), acc.tolerance)
}

/// `Λ(s, sym² f) = γ(s) L(s, sym² f)`.
pub fn lambda_symsq(s: Complex64, acc: &LSeriesAccessor) -> Result<LValue> {
    let l = l_symsq(s, acc)?;
    let g = acc.ln_gamma_factor(s).exp();
    Ok(LValue {
        value: g * l.value,
        error: g.norm() * l.error,
        terms: l.terms,
    })
}

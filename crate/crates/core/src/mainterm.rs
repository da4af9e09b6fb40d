//! The main-term constant `C₀(Φ, Ψ)` by two independent routes.
//!
//! Diagonal route:
//!
//! ```text
//! C₀_diag(Y) = (4/π²) Ψ_mass (1/Y) Σ_{n1,n2 odd, n1n2 = □}
//!              λ(n1)λ(n2) ∏_{p | n1n2} p/(p+1) Φ(n1/Y)Φ(n2/Y)
//! ```
//!
//! Contour route, on `u = 1/2 + ε + it`:
//!
//! ```text
//! C₀ = (4/π²)(1/2πi) ∫ Ψ_mass Φ_M(u)Φ_M(1−u) L(2u)L(2−2u)L(1) Z₂(u, 1−u) du
//! ```
//!
//! with `L = L(·, sym² f)` and `Z₂` the Euler product left after removing
//! `ζ(u+v)L(2u)L(2v)L(u+v)` from the odd square-pair Dirichlet series.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::Mutex;

use crate::arith::{gcd, FactorTables};
use crate::error::{ensure_table, Error, Result};
use crate::lfunc::{l_symsq, LSeriesAccessor};
use crate::modform::{hecke_prime_powers, EigenformCoefficients};
use crate::quad::{integrate_parallel, uniform_points, QuadValue, QuadratureSpec};
use crate::sum::CompensatedSum;
use crate::windows::{
    mellin_inverse, mellin_transform, truncation_height, SmoothWindow, Window, MAX_LINE_HEIGHT,
};

pub use crate::lfunc::{l_symsq_to, l_symsq_with_terms, lambda_symsq, LValue};
pub use crate::special::zeta as zeta_eval;

/// `(4/π²)`, the density of odd square-free integers times 2.
pub const DIAGONAL_PREFACTOR: f64 = 4.0 / (PI * PI);

/// An odd pair with `n1 n2` a square, `n1 = r s1²`, `n2 = r s2²`,
/// `r = gcd(n1, n2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SquarePair {
    pub n1: u64,
    pub n2: u64,
    pub r: u64,
    pub s1: u64,
    pub s2: u64,
}

/// All odd pairs `n1, n2 <= ymax` with `n1 n2` a square, from the
/// `(r, s1, s2)` parametrization with odd coprime `s1, s2`.
pub fn square_pairs(ymax: f64, tables: &FactorTables) -> Result<Vec<SquarePair>> {
    if !(ymax >= 0.0) {
        return Err(Error::Domain("Ymax must be non-negative".into()));
    }
    let y = ymax.floor() as u64;
    ensure_table(y, tables.limit())?;
    let mut out = Vec::new();
    for r in (1..=y).step_by(2) {
        let s_max = ((y / r) as f64).sqrt() as u64 + 1;
        let odd_s: Vec<u64> = (1..=s_max).step_by(2).filter(|s| r * s * s <= y).collect();
        for &s1 in &odd_s {
            for &s2 in &odd_s {
                if gcd(s1, s2) == 1 {
                    out.push(SquarePair {
                        n1: r * s1 * s1,
                        n2: r * s2 * s2,
                        r,
                        s1,
                        s2,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// `∏_{p | n} p/(p+1)` for `n <= limit` (index 0 unused).
fn prime_weights(tables: &FactorTables, limit: u64) -> Vec<f64> {
    let mut w = vec![1.0; limit as usize + 1];
    for n in 2..=limit {
        let p = tables.spf(n);
        let mut rest = n / p;
        while rest % p == 0 {
            rest /= p;
        }
        w[n as usize] = w[rest as usize] * p as f64 / (p as f64 + 1.0);
    }
    w
}

/// `C₀_diag(Y)`.
pub fn diagonal_constant(
    y: f64,
    phi: &SmoothWindow,
    psi: &SmoothWindow,
    coeffs: &EigenformCoefficients,
    tables: &FactorTables,
) -> Result<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::Domain("Y must be positive".into()));
    }
    let top = (y * phi.upper()).floor() as u64;
    ensure_table(top, coeffs.limit() as u64)?;
    ensure_table(top, tables.limit())?;
    if top == 0 {
        return Ok(0.0);
    }
    let weights = prime_weights(tables, top);
    let lam = coeffs.lambdas();
    let phi_at = |n: u64| phi.eval(n as f64 / y);

    // blocks of r, reduced in block order
    let rs: Vec<u64> = (1..=top).step_by(2).collect();
    let partials: Vec<CompensatedSum> = rs
        .par_chunks(64)
        .map(|block| {
            let mut acc = CompensatedSum::new();
            for &r in block {
                let s_max = ((top / r) as f64).sqrt() as u64 + 1;
                let terms: Vec<(u64, f64)> = (1..=s_max)
                    .step_by(2)
                    .filter(|s| r * s * s <= top)
                    .map(|s| {
                        let n = r * s * s;
                        (s, lam[n as usize] * weights[n as usize] * phi_at(n))
                    })
                    .filter(|&(_, v)| v != 0.0)
                    .collect();
                let inv_wr = 1.0 / weights[r as usize];
                for &(s1, a) in &terms {
                    for &(s2, b) in &terms {
                        if gcd(s1, s2) == 1 {
                            acc += a * b * inv_wr;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(DIAGONAL_PREFACTOR * psi.mass() * total.value() / y)
}

/// Least-squares fit `C(Y) ≈ limit + b·Y^{−1/2}`.
#[derive(Debug, Clone, Copy)]
pub struct DiagonalExtrapolation {
    pub limit: f64,
    pub coefficient: f64,
    /// Largest absolute fit residual.
    pub max_residual: f64,
}

pub fn extrapolate_diagonal(points: &[(f64, f64)]) -> Result<DiagonalExtrapolation> {
    if points.len() < 2 {
        return Err(Error::Config(
            "extrapolation needs at least two points".into(),
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(y, _)| y.powf(-0.5)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|&(_, c)| c).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config(
            "extrapolation needs distinct Y values".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, &(_, c))| (x - mx) * (c - my))
        .sum();
    let b = sxy / sxx;
    let limit = my - b * mx;
    let max_residual = xs
        .iter()
        .zip(points)
        .map(|(x, &(_, c))| (c - limit - b * x).abs())
        .fold(0.0, f64::max);
    Ok(DiagonalExtrapolation {
        limit,
        coefficient: b,
        max_residual,
    })
}

/// Parameters of the contour evaluation of `C₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    /// Line `Re u = 1/2 + ε`.
    pub epsilon: f64,
    /// Truncation height; `None` chooses it from the integrand decay.
    pub height: Option<f64>,
    /// Relative tolerance of the adaptive node refinement.
    pub rel_tol: f64,
    /// Integrand envelope at the cut, relative to its value at `t = 0`.
    pub tail_tol: f64,
    /// Primes `p <= prime_cutoff` enter the `Z₂` product.
    pub prime_cutoff: u64,
    /// Exponent cutoff of the local sums; `None` uses their closed form.
    pub exponent_cutoff: Option<u32>,
    /// Largest accepted relative bound for the omitted primes.
    pub z2_tol: f64,
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self {
            epsilon: 0.08,
            height: None,
            rel_tol: 1e-6,
            tail_tol: 1e-10,
            prime_cutoff: 10_000,
            exponent_cutoff: None,
            z2_tol: 1e-2,
        }
    }
}

impl ContourSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::Config(format!(
                "epsilon = {} must lie in (0, 1/4)",
                self.epsilon
            )));
        }
        if let Some(t) = self.height {
            if !(t > 0.0 && t <= MAX_LINE_HEIGHT) {
                return Err(Error::Config(format!(
                    "height {t} outside (0, {MAX_LINE_HEIGHT}]"
                )));
            }
        }
        if !(self.rel_tol > 0.0 && self.tail_tol > 0.0 && self.z2_tol > 0.0) {
            return Err(Error::Config("contour tolerances must be positive".into()));
        }
        if self.prime_cutoff < 3 {
            return Err(Error::Config("prime cutoff must be at least 3".into()));
        }
        if let Some(e) = self.exponent_cutoff {
            if e < 2 {
                return Err(Error::Config("exponent cutoff must be at least 2".into()));
            }
        }
        Ok(())
    }
}

/// `Z₂(u, v)` with a bound for the omitted primes and exponents.
#[derive(Debug, Clone, Copy)]
pub struct Z2Value {
    pub value: Complex64,
    pub error: f64,
    pub primes: usize,
}

/// `(1 − λ(p²)x + λ(p²)x² − x³)`, the inverse symmetric-square local factor.
fn symsq_local_inverse(l2: f64, x: Complex64) -> Complex64 {
    1.0 - l2 * x + l2 * x * x - x * x * x
}

/// Inverse local factors of `ζ(u+v) L(2u) L(2v) L(u+v)` times
/// `(1 − x⁴)^{−1}(1 − y⁴)^{−1}`, with `x = p^{−u}`, `y = p^{−v}`.
fn removed_factors(l2: f64, x: Complex64, y: Complex64) -> Complex64 {
    let xy = x * y;
    let x2 = x * x;
    let y2 = y * y;
    (1.0 - xy)
        * symsq_local_inverse(l2, x2)
        * symsq_local_inverse(l2, y2)
        * symsq_local_inverse(l2, xy)
        / ((1.0 - x2 * x2) * (1.0 - y2 * y2))
}

/// `Σ_{e1+e2 even} λ(p^{e1})λ(p^{e2}) x^{e1} y^{e2}`.
fn even_pair_sum(lambda_p: f64, x: Complex64, y: Complex64, cutoff: Option<u32>) -> Complex64 {
    match cutoff {
        None => {
            let a = |t: Complex64| 1.0 / (1.0 - lambda_p * t + t * t);
            (a(x) * a(y) + a(-x) * a(-y)) * 0.5
        }
        Some(e_max) => {
            let e_max = e_max as usize;
            let lam = hecke_prime_powers(lambda_p, e_max);
            let mut total = Complex64::new(0.0, 0.0);
            let mut xp = Complex64::new(1.0, 0.0);
            for e1 in 0..=e_max {
                let mut yp = if e1 % 2 == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    y
                };
                let mut e2 = e1 % 2;
                while e1 + e2 <= e_max {
                    total += lam[e1] * lam[e2] * xp * yp;
                    yp *= y * y;
                    e2 += 2;
                }
                xp *= x;
            }
            total
        }
    }
}

/// Bound on `Σ_{m > E} (m+1)³ ρ^m`, the omitted part of a truncated local
/// sum, with `ρ = p^{−min(Re u, Re v)}`.
fn exponent_tail(rho: f64, e_max: u32) -> f64 {
    let mut total = 0.0;
    let mut m = e_max + 1;
    loop {
        let term = ((m + 1) as f64).powi(3) * rho.powi(m as i32);
        total += term;
        if term < 1e-20 * total || m > e_max + 2000 {
            return total;
        }
        m += 1;
    }
}

/// `Σ_{p > P} p^{−α}` estimated by `P^{1−α} / ((α−1) ln P)`.
fn prime_tail(p_cut: f64, alpha: f64) -> f64 {
    p_cut.powf(1.0 - alpha) / ((alpha - 1.0) * p_cut.ln())
}

/// Bound on `Σ_{p > P} |log E_p|` from the leading monomials of the
/// accelerated local factors, using `|λ(p)| <= 2`.
fn z2_prime_tail(su: f64, sv: f64, p_cut: f64) -> f64 {
    let mut total = 0.0;
    // degree 2, each carrying an extra 1/p
    total += 3.0 * prime_tail(p_cut, 1.0 + 2.0 * su);
    total += 3.0 * prime_tail(p_cut, 1.0 + 2.0 * sv);
    total += 4.0 * prime_tail(p_cut, 1.0 + su + sv);
    // degree 4
    total += 4.0 * prime_tail(p_cut, 1.0 + 4.0 * su);
    total += 4.0 * prime_tail(p_cut, 1.0 + 4.0 * sv);
    total += 5.0 * prime_tail(p_cut, 3.0 * su + sv);
    total += 5.0 * prime_tail(p_cut, su + 3.0 * sv);
    total += 12.0 * prime_tail(p_cut, 2.0 * (su + sv));
    // degree 6 and above
    for a in 0..=6 {
        let alpha = a as f64 * su + (6 - a) as f64 * sv;
        total += 2.0 * 343.0 * prime_tail(p_cut, alpha);
    }
    total
}

/// `Z₂(u, v)` as an Euler product over `p <= spec.prime_cutoff`.
pub fn z2_value(
    u: Complex64,
    v: Complex64,
    coeffs: &EigenformCoefficients,
    tables: &FactorTables,
    spec: &ContourSpec,
) -> Result<Z2Value> {
    const MARGIN: f64 = 0.25 + 0.01;
    if !(u.re > MARGIN && v.re > MARGIN) {
        return Err(Error::Domain(format!(
            "Z2 needs Re u, Re v > {MARGIN}, got u = {u}, v = {v}"
        )));
    }
    let p_cut = spec.prime_cutoff;
    ensure_table(p_cut, tables.limit())?;
    ensure_table(p_cut, coeffs.limit() as u64)?;
    let primes: Vec<u64> = tables
        .primes()
        .iter()
        .map(|&p| p as u64)
        .take_while(|&p| p <= p_cut)
        .collect();
    let min_re = u.re.min(v.re);

    let local = |p: u64| -> (Complex64, f64) {
        let lp = (p as f64).ln();
        let x = (-u * lp).exp();
        let y = (-v * lp).exp();
        let lambda_p = coeffs.lambda(p as usize);
        let l2 = lambda_p * lambda_p - 1.0;
        let removed = removed_factors(l2, x, y);
        if p == 2 {
            return (removed, 0.0);
        }
        let pf = p as f64;
        let sum = even_pair_sum(lambda_p, x, y, spec.exponent_cutoff);
        let z_local = 1.0 + (sum - 1.0) * (pf / (pf + 1.0));
        let trunc = match spec.exponent_cutoff {
            None => 0.0,
            Some(e) => exponent_tail(pf.powf(-min_re), e) * removed.norm(),
        };
        (z_local * removed, trunc)
    };
    let blocks: Vec<(Complex64, f64)> = primes
        .par_chunks(128)
        .map(|block| {
            let mut prod = Complex64::new(1.0, 0.0);
            let mut trunc = 0.0;
            for &p in block {
                let (f, t) = local(p);
                prod *= f;
                trunc += t / f.norm();
            }
            (prod, trunc)
        })
        .collect();
    let mut product = Complex64::new(1.0, 0.0);
    let mut truncation = 0.0;
    for (f, t) in blocks {
        product *= f;
        truncation += t;
    }
    let zeta_4u = zeta_eval(u * 4.0)?;
    let zeta_4v = zeta_eval(v * 4.0)?;
    let value = product / (zeta_4u * zeta_4v);
    let log_tail = z2_prime_tail(u.re, v.re, p_cut as f64) + truncation;
    let rel = log_tail.exp_m1();
    if rel > spec.z2_tol {
        return Err(Error::Accuracy {
            what: format!("Z2 Euler product at u = {u}, v = {v}"),
            achieved: rel,
            requested: spec.z2_tol,
        });
    }
    Ok(Z2Value {
        value,
        error: rel * value.norm(),
        primes: primes.len(),
    })
}

/// `C₀` from the contour integral, with diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct C0Estimate {
    pub value: f64,
    /// Imaginary part of the computed integral; zero in exact arithmetic.
    pub imag: f64,
    pub error: f64,
    pub epsilon: f64,
    pub height: f64,
    pub evaluations: usize,
    pub l_at_one: f64,
}

/// Everything the contour integrand needs.
pub struct ContourInputs<'a> {
    pub phi: &'a SmoothWindow,
    pub psi: &'a SmoothWindow,
    pub acc: &'a LSeriesAccessor,
    pub coeffs: &'a EigenformCoefficients,
    pub tables: &'a FactorTables,
}

/// Assumed bound for `|L(2−2u, sym² f)|` when splitting an absolute target
/// between the two L-values; the achieved error is recomputed afterwards.
const L_MAGNITUDE_GUESS: f64 = 10.0;
/// Loosest absolute tolerance requested from a single L-value.
const L_TOLERANCE_CAP: f64 = 1e-3;

/// `Ψ_mass Φ_M(u)Φ_M(1−u) L(2u)L(2−2u)L(1) Z₂(u,1−u)` at `u = 1/2+ε+it`
/// and a bound on its absolute error. With `target`, the L-values are only
/// resolved to the accuracy that keeps the error near `target`.
fn contour_integrand(
    inputs: &ContourInputs<'_>,
    spec: &ContourSpec,
    l1: f64,
    q: &QuadratureSpec,
    t: f64,
    target: Option<f64>,
) -> Result<(Complex64, f64)> {
    let u = Complex64::new(0.5 + spec.epsilon, t);
    let one_minus_u = Complex64::new(1.0, 0.0) - u;
    let h = mellin_transform(inputs.phi, u, q)?
        * mellin_transform(inputs.phi, one_minus_u, q)?
        * inputs.psi.mass();
    let z2 = z2_value(u, one_minus_u, inputs.coeffs, inputs.tables, spec)?;
    let weight = (h * l1 * z2.value).norm();
    let tol_for = |other: f64| match target {
        Some(tgt) if weight > 0.0 => (0.5 * tgt / (weight * other)).min(L_TOLERANCE_CAP),
        _ => inputs.acc.tolerance(),
    };
    let la = l_symsq_to(u * 2.0, inputs.acc, tol_for(L_MAGNITUDE_GUESS))?;
    let lb = l_symsq_to(
        one_minus_u * 2.0,
        inputs.acc,
        tol_for(la.value.norm().max(1e-3)),
    )?;
    let value = h * la.value * lb.value * l1 * z2.value;
    let error = weight * (la.error * (lb.value.norm() + lb.error) + lb.error * la.value.norm())
        + value.norm() * z2.error / z2.value.norm();
    Ok((value, error))
}

/// Integrand value carried with its pointwise error bound, so that one
/// quadrature pass also integrates the bound. Refinement follows the value.
#[derive(Debug, Clone, Copy)]
struct WithError {
    value: Complex64,
    error: f64,
}

impl Add for WithError {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

impl Sub for WithError {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            value: self.value - o.value,
            error: self.error - o.error,
        }
    }
}

impl Mul<f64> for WithError {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self {
            value: self.value * k,
            error: self.error * k,
        }
    }
}

impl QuadValue for WithError {
    fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        }
    }
    fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// `C₀` on the line `Re u = 1/2 + spec.epsilon`.
pub fn c0_contour(inputs: &ContourInputs<'_>, spec: &ContourSpec) -> Result<C0Estimate> {
    spec.validate()?;
    if !(spec.epsilon > 0.01 && spec.epsilon < 0.15) {
        return Err(Error::Domain(format!(
            "contour epsilon {} outside (0.01, 0.15)",
            spec.epsilon
        )));
    }
    let q = QuadratureSpec::default();
    let l1_value = l_symsq(Complex64::new(1.0, 0.0), inputs.acc)?;
    let l1 = l1_value.value.re;
    let peak = contour_integrand(inputs, spec, l1, &q, 0.0, None)?.0.norm();
    // pointwise accuracy well below what the quadrature resolves
    let target = 1e-3 * spec.rel_tol * peak;
    let (height, tail) = match spec.height {
        Some(t) => (
            t,
            contour_integrand(inputs, spec, l1, &q, t, Some(target))?
                .0
                .norm(),
        ),
        None => truncation_height(
            |t| {
                Ok(contour_integrand(inputs, spec, l1, &q, t, Some(target))?
                    .0
                    .norm())
            },
            spec.tail_tol * peak,
            MAX_LINE_HEIGHT,
        )?,
    };

    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let outer = QuadratureSpec {
        abs_tol: target,
        rel_tol: spec.rel_tol,
        max_subdivisions: 2000,
    };
    let panels = (2.0 * height / 4.0).ceil() as usize;
    let integral = integrate_parallel(
        |t| match contour_integrand(inputs, spec, l1, &q, t, Some(target)) {
            Ok((value, error)) => WithError { value, error },
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                WithError::zero()
            }
        },
        &uniform_points(-height, height, panels),
        &outer,
    );
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    let integral = integral?;
    let scale = DIAGONAL_PREFACTOR / (2.0 * PI);
    let value = integral.value.value * scale;
    let pointwise = integral.value.error * scale;
    let error = integral.error * scale
        + 2.0 * tail * height * scale
        + pointwise
        + value.norm() * l1_value.error / l1.abs();
    Ok(C0Estimate {
        value: value.re,
        imag: value.im,
        error,
        epsilon: spec.epsilon,
        height,
        evaluations: integral.evaluations,
        l_at_one: l1,
    })
}

/// Numerical check of `H̃₀(u,v) = Ψ_mass Φ_M(u)Φ_M(v)` for the product
/// window.
#[derive(Debug, Clone)]
pub struct FactorizationCheck {
    /// `(n1, n2, H₀(n1,n2), Mellin-inverted factorized form)`.
    pub inversions: Vec<(u64, u64, f64, f64)>,
    /// `(u, v, nested two-variable Mellin transform of H₀, factorized form)`.
    pub transforms: Vec<(Complex64, Complex64, Complex64, Complex64)>,
    /// Largest deviation relative to `Ψ_mass · max Φ²`.
    pub max_relative_deviation: f64,
}

impl FactorizationCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_relative_deviation <= tol
    }
}

/// Compares `H₀(n1,n2) = Ψ_mass Φ(n1/Y)Φ(n2/Y)` with the inverse Mellin
/// transform of the factorized `H̃₀`, and the nested Mellin transform of `H₀`
/// with the factorized form.
pub fn verify_product_factorization(
    phi: &SmoothWindow,
    psi: &SmoothWindow,
    y: f64,
    pairs: &[(u64, u64)],
    mellin_points: &[(Complex64, Complex64)],
    line: f64,
) -> Result<FactorizationCheck> {
    let q = QuadratureSpec::default();
    let (a, b) = phi.support();
    let mid = phi.eval(0.5 * (a + b));
    let scale = psi.mass() * mid * mid;
    let mut worst: f64 = 0.0;
    let mut inversions = Vec::with_capacity(pairs.len());
    for &(n1, n2) in pairs {
        let direct = psi.mass() * phi.eval(n1 as f64 / y) * phi.eval(n2 as f64 / y);
        let i1 = mellin_inverse(phi, n1 as f64 / y, line, &q)?.value;
        let i2 = mellin_inverse(phi, n2 as f64 / y, line, &q)?.value;
        let inverted = psi.mass() * i1 * i2;
        worst = worst.max((direct - inverted).abs() / scale);
        inversions.push((n1, n2, direct, inverted));
    }
    let mut transforms = Vec::with_capacity(mellin_points.len());
    for &(u, v) in mellin_points {
        // ∫∫ H₀(yY, zY) y^{u−1} z^{v−1} dy dz as a genuinely nested integral
        let inner = |yy: f64| -> Complex64 {
            let h0_row = |zz: f64| psi.mass() * phi.eval(yy) * phi.eval(zz);
            let r = crate::quad::integrate(
                |zz: f64| {
                    let h = h0_row(zz);
                    if h == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        ((v - 1.0) * zz.ln()).exp() * h
                    }
                },
                &uniform_points(a, b, 8 + (v.im.abs() * (b / a).ln()) as usize),
                &q,
            );
            match r {
                Ok(r) if yy > 0.0 => ((u - 1.0) * yy.ln()).exp() * r.value,
                _ => Complex64::new(f64::NAN, 0.0),
            }
        };
        let nested = crate::quad::integrate(
            inner,
            &uniform_points(a, b, 8 + (u.im.abs() * (b / a).ln()) as usize),
            &q,
        )?
        .value;
        let factored = mellin_transform(phi, u, &q)? * mellin_transform(phi, v, &q)? * psi.mass();
        let size = (mellin_transform(phi, Complex64::new(u.re, 0.0), &q)?
            * mellin_transform(phi, Complex64::new(v.re, 0.0), &q)?
            * psi.mass())
        .norm();
        if !nested.re.is_finite() {
            return Err(Error::Accuracy {
                what: "nested Mellin transform".into(),
                achieved: f64::INFINITY,
                requested: q.rel_tol,
            });
        }
        worst = worst.max((nested - factored).norm() / size);
        transforms.push((u, v, nested, factored));
    }
    Ok(FactorizationCheck {
        inversions,
        transforms,
        max_relative_deviation: worst,
    })
}

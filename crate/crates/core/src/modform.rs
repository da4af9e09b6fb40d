//! Fourier coefficients of the level-one Hecke eigenform Δ.
//!
//! τ(n) is read off `q·∏(1−q^m)^24`, computed as the eighth power of
//! Jacobi's sparse series `∏(1−q^m)^3 = Σ_k (−1)^k (2k+1) q^{k(k+1)/2}`.
//! Each multiplication by the sparse series costs O(N·√N) and runs in
//! checked 128-bit arithmetic.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::arith::FactorTables;
use crate::error::{ensure_table, Error, Result};

pub const DELTA_WEIGHT: u32 = 12;

/// A source of integer Fourier coefficients `a(n)` of a normalized Hecke
/// eigenform, `a(1) = 1`.
pub trait CoefficientProvider {
    fn weight(&self) -> u32;

    /// Coefficients `a(1..=n)`; the returned vector has length `n + 1` with
    /// a zero at index 0.
    fn integer_coefficients(&self, n: usize) -> Result<Vec<i128>>;
}

/// The discriminant form Δ of weight 12.
#[derive(Debug, Clone, Copy, Default)]
pub struct Delta;

impl CoefficientProvider for Delta {
    fn weight(&self) -> u32 {
        DELTA_WEIGHT
    }

    fn integer_coefficients(&self, n: usize) -> Result<Vec<i128>> {
        eta_power_q_expansion(n)
    }
}

fn jacobi_cube_series(len: usize) -> Vec<(usize, i128)> {
    let mut terms = Vec::new();
    let mut k = 0usize;
    loop {
        let e = k * (k + 1) / 2;
        if e >= len {
            break;
        }
        let c = (2 * k + 1) as i128;
        terms.push((e, if k % 2 == 0 { c } else { -c }));
        k += 1;
    }
    terms
}

fn sparse_times_dense(sparse: &[(usize, i128)], dense: &[i128]) -> Result<Vec<i128>> {
    let len = dense.len();
    let mut out = vec![0i128; len];
    let mut overflow = false;
    for &(e, c) in sparse {
        for (o, &d) in out[e..].iter_mut().zip(dense) {
            let (prod, of1) = c.overflowing_mul(d);
            let (sum, of2) = o.overflowing_add(prod);
            *o = sum;
            overflow |= of1 | of2;
        }
    }
    if overflow {
        return Err(Error::Overflow(format!(
            "eta-power convolution at length {len}"
        )));
    }
    Ok(out)
}

/// τ(1..=n) for Δ; index 0 of the result is 0.
pub fn eta_power_q_expansion(n: usize) -> Result<Vec<i128>> {
    if n == 0 {
        return Err(Error::Config("coefficient count must be positive".into()));
    }
    let sparse = jacobi_cube_series(n);
    let mut dense = vec![0i128; n];
    for &(e, c) in &sparse {
        dense[e] = c;
    }
    for _ in 0..7 {
        dense = sparse_times_dense(&sparse, &dense)?;
    }
    let mut tau = Vec::with_capacity(n + 1);
    tau.push(0);
    tau.extend_from_slice(&dense);
    Ok(tau)
}

/// Integer and normalized coefficients of a fixed eigenform up to `limit`.
#[derive(Debug, Clone)]
pub struct EigenformCoefficients {
    weight: u32,
    limit: usize,
    tau: Vec<i128>,
    lambda: Vec<f64>,
}

impl EigenformCoefficients {
    pub fn from_integer_coefficients(weight: u32, tau: Vec<i128>) -> Result<Self> {
        if tau.len() < 2 || tau[1] != 1 {
            return Err(Error::Domain(
                "coefficient vector must start with a(1) = 1".into(),
            ));
        }
        let limit = tau.len() - 1;
        let half = (weight as f64 - 1.0) / 2.0;
        let mut lambda = vec![0.0; limit + 1];
        for n in 1..=limit {
            lambda[n] = tau[n] as f64 / (n as f64).powf(half);
        }
        Ok(Self {
            weight,
            limit,
            tau,
            lambda,
        })
    }

    pub fn from_provider(provider: &dyn CoefficientProvider, n: usize) -> Result<Self> {
        Self::from_integer_coefficients(provider.weight(), provider.integer_coefficients(n)?)
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn tau(&self, n: usize) -> i128 {
        self.tau[n]
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n]
    }

    /// λ values with index 0 unused.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn taus(&self) -> &[i128] {
        &self.tau
    }

    /// `λ(p^e)` for `e = 0..=e_max` from the Hecke recursion seeded at `λ(p)`.
    pub fn prime_power_lambdas(&self, p: usize, e_max: usize) -> Result<Vec<f64>> {
        ensure_table(p as u64, self.limit as u64)?;
        Ok(hecke_prime_powers(self.lambda[p], e_max))
    }
}

/// `λ(p^e)`, `e = 0..=e_max`, from `λ(p^{e+1}) = λ(p)λ(p^e) − λ(p^{e−1})`.
pub fn hecke_prime_powers(lambda_p: f64, e_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(e_max + 1);
    out.push(1.0);
    if e_max >= 1 {
        out.push(lambda_p);
    }
    for e in 2..=e_max {
        let next = lambda_p * out[e - 1] - out[e - 2];
        out.push(next);
    }
    out
}

/// λ(n) for Δ, `n <= limit`.
pub fn lambda_table(limit: usize) -> Result<EigenformCoefficients> {
    EigenformCoefficients::from_provider(&Delta, limit)
}

/// `λ(n²)` for `n <= m` (index 0 unused), built from `λ(p)`, `p <= m`, by
/// multiplicativity and the prime-power recursion.
pub fn lambda_at_squares(coeffs: &EigenformCoefficients, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Config("square count must be positive".into()));
    }
    ensure_table(m as u64, coeffs.limit() as u64)?;
    let mut out = vec![0.0; m + 1];
    out[1] = 1.0;
    if m == 1 {
        return Ok(out);
    }
    let tables = FactorTables::build(m as u64)?;
    // λ(p^{2e}) cached per prime
    let mut even_powers: Vec<Vec<f64>> = vec![Vec::new(); m + 1];
    for &p in tables.primes() {
        let p = p as usize;
        let mut e_max = 0;
        let mut pk = 1usize;
        while pk <= m / p {
            pk *= p;
            e_max += 1;
        }
        let powers = hecke_prime_powers(coeffs.lambda(p), 2 * e_max);
        even_powers[p] = powers.into_iter().step_by(2).collect();
    }
    for n in 2..=m {
        let p = tables.spf(n as u64) as usize;
        let mut rest = n / p;
        let mut e = 1;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        out[n] = out[rest] * even_powers[p][e];
    }
    Ok(out)
}

pub fn tau_cache_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("tau_{n}.csv"))
}

/// Writes `n,tau` rows (with a header line) for `n = 1..`.
pub fn write_tau_csv(path: &Path, tau: &[i128]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "n,tau")?;
    for (n, t) in tau.iter().enumerate().skip(1) {
        writeln!(w, "{n},{t}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cache written by [`write_tau_csv`]; the file must cover `1..=n`.
pub fn read_tau_csv(path: &Path, n: usize) -> Result<Vec<i128>> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut tau = vec![0i128];
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line.trim() != "n,tau" {
                return Err(Error::Io(format!("{}: bad header", path.display())));
            }
            continue;
        }
        if tau.len() > n {
            break;
        }
        let bad = || Error::Io(format!("{}:{}: malformed row", path.display(), lineno + 1));
        let (idx, val) = line.split_once(',').ok_or_else(bad)?;
        let idx: usize = idx.trim().parse().map_err(|_| bad())?;
        if idx != tau.len() {
            return Err(bad());
        }
        tau.push(val.trim().parse().map_err(|_| bad())?);
    }
    if tau.len() <= n {
        return Err(Error::Io(format!(
            "{}: holds {} coefficients, need {n}",
            path.display(),
            tau.len() - 1
        )));
    }
    Ok(tau)
}

/// τ(1..=n), reusing `dir/tau_<n>.csv` when present and writing it otherwise.
pub fn cached_tau(dir: &Path, n: usize) -> Result<Vec<i128>> {
    let path = tau_cache_path(dir, n);
    if path.exists() {
        return read_tau_csv(&path, n);
    }
    let tau = eta_power_q_expansion(n)?;
    fs::create_dir_all(dir)?;
    write_tau_csv(&path, &tau)?;
    Ok(tau)
}

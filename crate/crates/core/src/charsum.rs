//! Brute-force evaluation of
//! `S(X, Y) = Σ*_d (Σ_n λ(n) χ_{8d}(n) Φ(n/Y))² Ψ(d/X)`
//! over odd square-free `d`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::arith::{kronecker, FactorTables};
use crate::error::{ensure_table, Error, Result};
use crate::modform::EigenformCoefficients;
use crate::sum::CompensatedSum;
use crate::windows::{SmoothWindow, Window};

/// Odd `d` per parallel block; fixed so results do not depend on the pool.
pub const D_BLOCK: usize = 2048;
/// Largest symbol table the sieved kernel builds (entries, one byte each).
const MAX_SYMBOL_TABLE: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Sieved,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Sieved => "sieved",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "sieved" => Ok(Method::Sieved),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// One brute-force evaluation of `S(X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPoint {
    pub x: f64,
    pub y: f64,
    pub value_s: f64,
    pub n_d_terms: u64,
    pub wall_time: f64,
    pub method: Method,
}

/// `λ(n) Φ(n/Y)` at consecutive odd `n`, starting from the first odd `n`
/// in the support of `Φ(n/Y)`.
struct InnerWeights {
    n_max: usize,
    /// `n / 2` of the first term.
    first_half: usize,
    weights: Vec<f64>,
}

impl InnerWeights {
    fn new(
        y: f64,
        phi: &SmoothWindow,
        coeffs: &EigenformCoefficients,
        tables: &FactorTables,
    ) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Domain("Y must be positive".into()));
        }
        let (a, b) = phi.support();
        let n_max = (b * y).floor() as usize;
        ensure_table(n_max as u64, coeffs.limit() as u64)?;
        ensure_table(n_max as u64, tables.limit())?;
        let n_lo = ((a * y).floor() as usize).max(1);
        let first_half = n_lo / 2;
        let weights = (2 * first_half + 1..=n_max)
            .step_by(2)
            .map(|n| coeffs.lambda(n) * phi.eval(n as f64 / y))
            .collect();
        Ok(Self {
            n_max,
            first_half,
            weights,
        })
    }

    /// The odd `n` carrying the weights, ascending.
    fn odd_n(&self) -> impl Iterator<Item = usize> + '_ {
        let first = 2 * self.first_half + 1;
        (0..self.weights.len()).map(move |k| first + 2 * k)
    }

    /// Σ_n weight(n)·χ(n) with `chis[k] = χ(n)` for the `k`-th odd `n`, in
    /// four interleaved lanes merged in a fixed order. The terms are of order
    /// one and number O(Y), so plain summation loses only O(eps·√Y)
    /// relative to the typical size of the sum.
    #[inline]
    fn sum(&self, chis: &[i8]) -> f64 {
        debug_assert_eq!(chis.len(), self.weights.len());
        let mut lanes = [0.0f64; 4];
        let mut w_chunks = self.weights.chunks_exact(4);
        let mut c_chunks = chis.chunks_exact(4);
        for (ws, cs) in (&mut w_chunks).zip(&mut c_chunks) {
            for ((lane, &w), &c) in lanes.iter_mut().zip(ws).zip(cs) {
                *lane += f64::from(c) * w;
            }
        }
        for ((lane, &w), &c) in lanes
            .iter_mut()
            .zip(w_chunks.remainder())
            .zip(c_chunks.remainder())
        {
            *lane += f64::from(c) * w;
        }
        (lanes[0] + lanes[1]) + (lanes[2] + lanes[3])
    }

    /// The sum with `χ = χ_{8d}` computed directly; `buf` is scratch space.
    fn sum_direct(&self, d: u64, buf: &mut Vec<i8>) -> f64 {
        let m = 8 * d as i64;
        buf.clear();
        buf.extend(
            self.odd_n()
                .map(|n| kronecker(m, n as u64).expect("n >= 1")),
        );
        self.sum(buf)
    }
}

/// `Σ_n λ(n) χ_{8d}(n) Φ(n/Y)`.
pub fn inner_sum(
    d: u64,
    y: f64,
    phi: &SmoothWindow,
    coeffs: &EigenformCoefficients,
    tables: &FactorTables,
) -> Result<f64> {
    if d == 0 || d % 2 == 0 {
        return Err(Error::Domain(format!("d = {d} must be odd and positive")));
    }
    let w = InnerWeights::new(y, phi, coeffs, tables)?;
    Ok(w.sum_direct(d, &mut Vec::new()))
}

/// Number of odd `n` in `1..=n_max`, at least one so `n = 1` always has a slot.
fn odd_count(n_max: usize) -> usize {
    n_max.div_ceil(2).max(1)
}

/// `(2r/p)` for `0 <= r < p`, from the squares modulo `p`.
fn legendre_times_two(p: u32) -> Vec<i8> {
    // (2/p) = 1 iff p ≡ ±1 mod 8
    let two: i8 = if matches!(p % 8, 1 | 7) { 1 } else { -1 };
    let mut out = vec![-two; p as usize];
    out[0] = 0;
    // k² mod p via (k+1)² = k² + 2k + 1
    let (mut sq, mut inc) = (0u32, 1u32);
    for _ in 1..=p / 2 {
        sq += inc;
        while sq >= p {
            sq -= p;
        }
        out[sq as usize] = two;
        inc += 2;
        if inc >= p {
            inc -= p;
        }
    }
    out
}

/// Immutable data of the sieved kernel, shared by all blocks.
struct CharacterTables {
    primes: Vec<u32>,
    /// `(2r/p)` for `0 <= r < p`, one run per prime, flattened.
    symbols: Vec<i8>,
    /// Start of each prime's run in `symbols`.
    offsets: Vec<u32>,
    /// For odd `n = p·m`, `p` the smallest prime factor: `(index of p, m / 2)`.
    /// Indexed by `n / 2`; the entry for `n = 1` is unused.
    split: Vec<(u32, u32)>,
}

impl CharacterTables {
    fn new(weights: &InnerWeights, tables: &FactorTables) -> Result<Self> {
        let n_max = weights.n_max;
        let primes: Vec<u32> = tables
            .primes()
            .iter()
            .copied()
            .filter(|&p| p > 2 && p as usize <= n_max)
            .collect();
        let total: u64 = primes.iter().map(|&p| p as u64).sum();
        if total > MAX_SYMBOL_TABLE {
            return Err(Error::Config(format!(
                "sieved kernel needs {total} table entries (limit {MAX_SYMBOL_TABLE}); use the naive method"
            )));
        }
        let mut symbols = Vec::with_capacity(total as usize);
        let mut offsets = Vec::with_capacity(primes.len());
        let mut index_of = vec![u32::MAX; n_max + 1];
        for (i, &p) in primes.iter().enumerate() {
            index_of[p as usize] = i as u32;
            offsets.push(symbols.len() as u32);
            symbols.extend(legendre_times_two(p));
        }
        let split = (0..odd_count(n_max))
            .map(|h| {
                let n = 2 * h as u64 + 1;
                if n == 1 {
                    return (0, 0);
                }
                let p = tables.spf(n);
                (index_of[p as usize], (n / p / 2) as u32)
            })
            .collect();
        Ok(Self {
            primes,
            symbols,
            offsets,
            split,
        })
    }
}

/// Per-block state: the residues `d mod p` for the current `d` and the
/// character values they determine.
struct CharacterSieve<'a> {
    t: &'a CharacterTables,
    /// `offset + (d mod p)` for each prime.
    positions: Vec<u32>,
    /// `χ_{8d}(p)` for each prime.
    at_primes: Vec<i8>,
    /// `χ_{8d}(n)` for odd `n`, indexed by `n / 2`.
    values: Vec<i8>,
}

impl<'a> CharacterSieve<'a> {
    fn start(t: &'a CharacterTables, d: u64) -> Self {
        let positions = t
            .offsets
            .iter()
            .zip(&t.primes)
            .map(|(&off, &p)| off + (d % p as u64) as u32)
            .collect();
        Self {
            t,
            positions,
            at_primes: vec![0; t.primes.len()],
            values: vec![0; t.split.len()],
        }
    }

    /// Moves from `d` to `d + 2` without refreshing the character values.
    #[inline]
    fn step_two(&mut self) {
        for ((pos, &off), &p) in self
            .positions
            .iter_mut()
            .zip(&self.t.offsets)
            .zip(&self.t.primes)
        {
            let v = *pos + 2;
            *pos = if v >= off + p { v - p } else { v };
        }
    }

    /// Recomputes the character values for the current `d`.
    #[inline]
    fn fill(&mut self) {
        for (c, &pos) in self.at_primes.iter_mut().zip(&self.positions) {
            *c = self.t.symbols[pos as usize];
        }
        let values = &mut self.values[..self.t.split.len()];
        values[0] = 1;
        for (h, &(i, m)) in self.t.split.iter().enumerate().skip(1) {
            values[h] = self.at_primes[i as usize] * values[m as usize];
        }
    }

    /// `χ_{8d}(n)` for the `len` odd `n` starting at `n / 2 = first_half`.
    #[inline]
    fn values(&self, first_half: usize, len: usize) -> &[i8] {
        &self.values[first_half..first_half + len]
    }
}

/// Odd square-free `d` with `Ψ(d/X) > 0`, ascending.
fn admissible_d(x: f64, psi: &SmoothWindow, tables: &FactorTables) -> Result<Vec<u64>> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain("X must be positive".into()));
    }
    let (a, b) = psi.support();
    let d_max = (b * x).floor() as u64;
    ensure_table(d_max, tables.limit())?;
    let d_lo = ((a * x).floor() as u64).max(1);
    Ok((d_lo..=d_max)
        .filter(|&d| d % 2 == 1 && tables.is_odd_squarefree(d) && psi.eval(d as f64 / x) > 0.0)
        .collect())
}

/// `S(X, Y)` by the chosen method on `workers` threads.
#[allow(clippy::too_many_arguments)]
pub fn mean_square(
    x: f64,
    y: f64,
    phi: &SmoothWindow,
    psi: &SmoothWindow,
    coeffs: &EigenformCoefficients,
    tables: &FactorTables,
    method: Method,
    workers: usize,
) -> Result<ExperimentPoint> {
    if workers < 1 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    let weights = InnerWeights::new(y, phi, coeffs, tables)?;
    let ds = admissible_d(x, psi, tables)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    // Timed inside the pool so worker start-up is excluded.
    let (total, wall_time) = pool.install(|| -> Result<(CompensatedSum, f64)> {
        let start = Instant::now();
        let char_tables = match method {
            Method::Sieved => Some(CharacterTables::new(&weights, tables)?),
            Method::Naive => None,
        };
        let block_sum = |block: &[u64]| -> CompensatedSum {
            let mut acc = CompensatedSum::new();
            match method {
                Method::Naive => {
                    let mut buf = Vec::with_capacity(weights.weights.len());
                    for &d in block {
                        let inner = weights.sum_direct(d, &mut buf);
                        acc += inner * inner * psi.eval(d as f64 / x);
                    }
                }
                Method::Sieved => {
                    let t = char_tables.as_ref().expect("built for the sieved method");
                    let mut current = block[0];
                    let mut sieve = CharacterSieve::start(t, current);
                    for &d in block {
                        while current < d {
                            sieve.step_two();
                            current += 2;
                        }
                        sieve.fill();
                        let inner =
                            weights.sum(sieve.values(weights.first_half, weights.weights.len()));
                        acc += inner * inner * psi.eval(d as f64 / x);
                    }
                }
            }
            acc
        };
        let partials: Vec<CompensatedSum> = ds.par_chunks(D_BLOCK).map(block_sum).collect();
        let mut total = CompensatedSum::new();
        for p in &partials {
            total.merge(p);
        }
        Ok((total, start.elapsed().as_secs_f64()))
    })?;
    Ok(ExperimentPoint {
        x,
        y,
        value_s: total.value(),
        n_d_terms: ds.len() as u64,
        wall_time,
        method,
    })
}

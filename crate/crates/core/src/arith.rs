//! Sieved multiplicative functions and the Kronecker symbol.

use crate::error::{ensure_table, Error, Result};

/// Largest sieve limit accepted by [`FactorTables::build`]. Every table entry
/// (smallest prime factor, totient, divisor count) fits its storage type below
/// this bound.
pub const MAX_SIEVE_LIMIT: u64 = 100_000_000;

/// Multiplicative data for `1..=limit`, produced by one linear sieve pass.
///
/// Index 0 is padding. At index 1 the smallest-prime-factor entry is the
/// sentinel `1`, and the other functions take their empty-product values.
#[derive(Debug, Clone)]
pub struct FactorTables {
    limit: u64,
    spf: Vec<u32>,
    mobius: Vec<i8>,
    phi: Vec<u32>,
    divcount: Vec<u16>,
    primes: Vec<u32>,
}

impl FactorTables {
    pub fn build(limit: u64) -> Result<Self> {
        if !(2..=MAX_SIEVE_LIMIT).contains(&limit) {
            return Err(Error::Config(format!(
                "sieve limit {limit} outside [2, {MAX_SIEVE_LIMIT}]"
            )));
        }
        let len = limit as usize + 1;
        let mut spf = vec![0u32; len];
        let mut mobius = vec![0i8; len];
        let mut phi = vec![0u32; len];
        let mut divcount = vec![0u16; len];
        // exponent of the smallest prime factor
        let mut spf_exp = vec![0u8; len];
        let mut primes: Vec<u32> = Vec::new();

        spf[1] = 1;
        mobius[1] = 1;
        phi[1] = 1;
        divcount[1] = 1;

        for i in 2..len {
            if spf[i] == 0 {
                spf[i] = i as u32;
                mobius[i] = -1;
                phi[i] = i as u32 - 1;
                divcount[i] = 2;
                spf_exp[i] = 1;
                primes.push(i as u32);
            }
            let spf_i = spf[i];
            for &p in &primes {
                let ip = i * p as usize;
                if p > spf_i || ip >= len {
                    break;
                }
                spf[ip] = p;
                if p == spf_i {
                    let e = spf_exp[i] as u16;
                    mobius[ip] = 0;
                    phi[ip] = phi[i] * p;
                    spf_exp[ip] = spf_exp[i] + 1;
                    divcount[ip] = divcount[i] / (e + 1) * (e + 2);
                } else {
                    mobius[ip] = -mobius[i];
                    phi[ip] = phi[i] * (p - 1);
                    spf_exp[ip] = 1;
                    divcount[ip] = divcount[i] * 2;
                }
            }
        }

        Ok(Self {
            limit,
            spf,
            mobius,
            phi,
            divcount,
            primes,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn index(&self, n: u64) -> usize {
        assert!(
            n >= 1 && n <= self.limit,
            "index {n} outside table range 1..={}",
            self.limit
        );
        n as usize
    }

    /// Smallest prime factor of `n`; returns the sentinel 1 for `n = 1`.
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[self.index(n)] as u64
    }

    pub fn mobius(&self, n: u64) -> i8 {
        self.mobius[self.index(n)]
    }

    pub fn phi(&self, n: u64) -> u64 {
        self.phi[self.index(n)] as u64
    }

    pub fn divcount(&self, n: u64) -> u64 {
        self.divcount[self.index(n)] as u64
    }

    pub fn is_odd_squarefree(&self, n: u64) -> bool {
        n % 2 == 1 && self.mobius(n) != 0
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && self.spf(n) == n
    }

    /// All primes up to the limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Prime factorization as `(p, e)` pairs with ascending `p`.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        ensure_table(n, self.limit)?;
        if n == 0 {
            return Err(Error::Domain("cannot factor 0".into()));
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf(m);
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        Ok(out)
    }
}

const KRONECKER_TWO: [i8; 8] = [0, 1, 0, -1, 0, -1, 0, 1];

/// Kronecker symbol `(a/n)` for `n >= 0`.
///
/// Binary reciprocity algorithm; no factorization is performed.
pub fn kronecker(a: i64, n: u64) -> Result<i8> {
    if n == 0 {
        if a == 0 {
            return Err(Error::Domain("Kronecker symbol (0/0) is undefined".into()));
        }
        return Ok(if a == 1 || a == -1 { 1 } else { 0 });
    }
    if a % 2 == 0 && n % 2 == 0 {
        return Ok(0);
    }
    let v = n.trailing_zeros();
    let mut n = n >> v;
    let mut k: i8 = if v % 2 == 0 {
        1
    } else {
        KRONECKER_TWO[(a & 7) as usize]
    };
    let mut a = a.rem_euclid(n as i64) as u64;
    while a != 0 {
        let v = a.trailing_zeros();
        a >>= v;
        if v % 2 == 1 {
            k *= KRONECKER_TWO[(n & 7) as usize];
        }
        if a & n & 2 != 0 {
            k = -k;
        }
        let r = n % a;
        n = a;
        a = r;
    }
    Ok(if n == 1 { k } else { 0 })
}

/// Jacobi symbol `(a/n)` for odd positive `n`; the infallible form used in
/// hot loops.
pub(crate) fn jacobi(a: i64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    match kronecker(a, n) {
        Ok(v) => v,
        Err(_) => unreachable!("n is odd and positive"),
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub fn is_perfect_square(n: u64) -> bool {
    let r = n.isqrt();
    r * r == n
}

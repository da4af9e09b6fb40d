//! Gauss-type sums
//! `G_k(m) = ((1−i)/2 + (−1/m)(1+i)/2) · Σ_{a mod m} (a/m) e(ak/m)` for odd `m`.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::arith::{kronecker, FactorTables};
use crate::error::{ensure_table, Error, Result};

/// Exact closed-form value `coeff · √radicand` with `radicand` square-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussSumValue {
    pub k: i64,
    pub m: u64,
    pub coeff: i64,
    pub radicand: u64,
}

impl GaussSumValue {
    pub fn value(&self) -> f64 {
        self.coeff as f64 * (self.radicand as f64).sqrt()
    }
}

fn check_modulus(m: u64) -> Result<()> {
    if m == 0 || m % 2 == 0 {
        return Err(Error::Domain(format!(
            "Gauss sum modulus must be odd and positive, got {m}"
        )));
    }
    Ok(())
}

/// Evaluates the defining sum in complex double arithmetic.
pub fn gauss_direct(k: i64, m: u64) -> Result<Complex64> {
    check_modulus(m)?;
    let roots: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / m as f64))
        .collect();
    Ok(gauss_direct_with_roots(k, m, &roots))
}

/// Same as [`gauss_direct`] with a precomputed table `roots[j] = e(j/m)`.
pub(crate) fn gauss_direct_with_roots(k: i64, m: u64, roots: &[Complex64]) -> Complex64 {
    debug_assert_eq!(roots.len() as u64, m);
    let step = k.rem_euclid(m as i64) as u64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut idx = 0u64;
    for a in 0..m {
        match kronecker(a as i64, m).expect("odd modulus") {
            1 => sum += roots[idx as usize],
            -1 => sum -= roots[idx as usize],
            _ => {}
        }
        idx += step;
        if idx >= m {
            idx -= m;
        }
    }
    let prefactor = if kronecker(-1, m).expect("odd modulus") == 1 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, -1.0)
    };
    prefactor * sum
}

/// `G_k(p^b)` from the prime-power table, `b >= 1`.
fn prime_power_value(k: i64, p: u64, b: u32) -> (i64, u64) {
    // a = v_p(k), with k = 0 treated as a = ∞
    let a = if k == 0 {
        None
    } else {
        let mut a = 0u32;
        let mut r = k;
        while r % p as i64 == 0 {
            r /= p as i64;
            a += 1;
        }
        Some((a, r))
    };
    let pb = |e: u32| p.pow(e) as i64;
    match a {
        None => {
            if b % 2 == 1 {
                (0, 1)
            } else {
                (pb(b) - pb(b - 1), 1)
            }
        }
        Some((a, unit)) => {
            if b <= a {
                if b % 2 == 1 {
                    (0, 1)
                } else {
                    (pb(b) - pb(b - 1), 1)
                }
            } else if b == a + 1 {
                if b % 2 == 0 {
                    (-pb(a), 1)
                } else {
                    let leg = kronecker(unit, p).expect("p odd") as i64;
                    (leg * pb(a), p)
                }
            } else {
                (0, 1)
            }
        }
    }
}

/// Closed-form `G_k(m)` via multiplicativity over the factorization of `m`.
pub fn gauss_closed_exact(k: i64, m: u64, tables: &FactorTables) -> Result<GaussSumValue> {
    check_modulus(m)?;
    ensure_table(m, tables.limit())?;
    let mut coeff: i64 = 1;
    let mut radicand: u64 = 1;
    for (p, b) in tables.factorize(m)? {
        let (c, r) = prime_power_value(k, p, b);
        coeff = coeff
            .checked_mul(c)
            .ok_or_else(|| Error::Overflow(format!("G_{k}({m})")))?;
        radicand *= r;
        if coeff == 0 {
            radicand = 1;
            break;
        }
    }
    Ok(GaussSumValue {
        k,
        m,
        coeff,
        radicand,
    })
}

pub fn gauss_closed(k: i64, m: u64, tables: &FactorTables) -> Result<f64> {
    Ok(gauss_closed_exact(k, m, tables)?.value())
}

/// Summary of a direct-vs-closed comparison grid.
#[derive(Debug, Clone)]
pub struct GaussVerification {
    pub m_max: u64,
    pub k_max: i64,
    pub cases: usize,
    /// Largest `|direct − closed| / max(1, m)`.
    pub max_scaled_deviation: f64,
    /// Largest `|Im direct| / m`.
    pub max_scaled_imag: f64,
    pub failures: Vec<GaussFailure>,
}

#[derive(Debug, Clone)]
pub struct GaussFailure {
    pub k: i64,
    pub m: u64,
    pub direct: Complex64,
    pub closed: f64,
}

impl GaussVerification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares both evaluation routes for all odd `m <= m_max`, `|k| <= k_max`.
/// A case fails when the scaled deviation or the scaled imaginary part
/// exceeds `tol`.
pub fn verify_gauss(m_max: u64, k_max: i64, tol: f64) -> Result<GaussVerification> {
    let tables = FactorTables::build(m_max.max(2))?;
    let mut report = GaussVerification {
        m_max,
        k_max,
        cases: 0,
        max_scaled_deviation: 0.0,
        max_scaled_imag: 0.0,
        failures: Vec::new(),
    };
    for m in (1..=m_max).step_by(2) {
        let roots: Vec<Complex64> = (0..m)
            .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / m as f64))
            .collect();
        for k in -k_max..=k_max {
            let direct = gauss_direct_with_roots(k, m, &roots);
            let closed = gauss_closed(k, m, &tables)?;
            let dev = (direct - closed).norm() / (m as f64).max(1.0);
            let imag = direct.im.abs() / m as f64;
            report.cases += 1;
            report.max_scaled_deviation = report.max_scaled_deviation.max(dev);
            report.max_scaled_imag = report.max_scaled_imag.max(imag);
            if dev > tol || imag > tol {
                report.failures.push(GaussFailure {
                    k,
                    m,
                    direct,
                    closed,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tables() -> &'static FactorTables {
        static T: std::sync::OnceLock<FactorTables> = std::sync::OnceLock::new();
        T.get_or_init(|| FactorTables::build(300_000).unwrap())
    }

    #[test]
    fn direct_examples() {
        let g = gauss_direct(0, 1).unwrap();
        assert!((g - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let g = gauss_direct(1, 5).unwrap();
        assert!((g.re - 5f64.sqrt()).abs() < 1e-9 && g.im.abs() < 1e-9);
        let g = gauss_direct(0, 15).unwrap();
        assert!(g.norm() < 1e-9);
    }

    #[test]
    fn closed_examples() {
        let t = tables();
        assert_eq!(gauss_closed(0, 9, t).unwrap(), 6.0);
        assert_eq!(gauss_closed(3, 9, t).unwrap(), -3.0);
        assert_eq!(gauss_closed(1, 25, t).unwrap(), 0.0);
        assert!((gauss_closed(2, 3, t).unwrap() + 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bad_modulus() {
        assert!(matches!(gauss_direct(1, 4), Err(Error::Domain(_))));
        assert!(matches!(gauss_direct(1, 0), Err(Error::Domain(_))));
        assert!(matches!(
            gauss_closed(1, 8, tables()),
            Err(Error::Domain(_))
        ));
        let small = FactorTables::build(10).unwrap();
        assert!(matches!(
            gauss_closed(1, 11, &small),
            Err(Error::InsufficientTable { .. })
        ));
    }

    #[test]
    fn routes_agree_on_small_grid() {
        let v = verify_gauss(301, 20, 1e-6).unwrap();
        assert!(v.passed(), "{:?}", &v.failures[..v.failures.len().min(5)]);
    }

    #[test]
    fn k_zero_law() {
        let t = tables();
        for n in (1..=10_000u64).step_by(2) {
            let expected = if crate::arith::is_perfect_square(n) {
                t.phi(n) as f64
            } else {
                0.0
            };
            assert_eq!(gauss_closed(0, n, t).unwrap(), expected, "n={n}");
        }
    }

    #[test]
    fn four_k_invariance() {
        let t = tables();
        for m in (1..=501u64).step_by(2) {
            for k in -30..=30 {
                assert_eq!(
                    gauss_closed_exact(k, m, t).unwrap().value(),
                    gauss_closed_exact(4 * k, m, t).unwrap().value(),
                    "k={k} m={m}"
                );
            }
        }
    }

    #[test]
    fn closed_value_bound() {
        let t = tables();
        for m in (1..=2001u64).step_by(2) {
            for k in [-7i64, 0, 1, 3, 45, 60] {
                let v = gauss_closed(k, m, t).unwrap();
                assert!(v.abs() <= m as f64 * (m as f64).sqrt() + 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn multiplicative_on_coprime_moduli(
            a in 0u64..250, b in 0u64..250, k in -60i64..=60
        ) {
            let (m1, m2) = (2 * a + 1, 2 * b + 1);
            prop_assume!(crate::arith::gcd(m1, m2) == 1);
            let t = tables();
            let lhs = gauss_closed_exact(k, m1 * m2, t).unwrap();
            let g1 = gauss_closed_exact(k, m1, t).unwrap();
            let g2 = gauss_closed_exact(k, m2, t).unwrap();
            prop_assert_eq!(lhs.coeff, g1.coeff * g2.coeff);
            if lhs.coeff != 0 {
                prop_assert_eq!(lhs.radicand, g1.radicand * g2.radicand);
            }
        }
    }
}

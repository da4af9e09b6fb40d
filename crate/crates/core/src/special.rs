//! Complex log-gamma, overflow-free log-sine, and the Riemann zeta function.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `ln Γ(z)` (Lanczos, g = 7, nine terms; reflection for `Re z < 1/2`).
///
/// The branch is not the principal one; only `exp` of sums and differences
/// of these values is meaningful.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        return c(PI.ln(), 0.0) - ln_sin(z * PI) - ln_gamma(c(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut series = c(LANCZOS_COEFFS[0], 0.0);
    for (i, &coef) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += coef / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    c(0.5 * (2.0 * PI).ln(), 0.0) + (z + 0.5) * t.ln() - t + series.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// `ln sin z`, stable for large `|Im z|`.
pub fn ln_sin(z: Complex64) -> Complex64 {
    let i = c(0.0, 1.0);
    if z.im > 1.0 {
        // sin z = e^{−iz}(1 − e^{2iz}) · i/2
        -i * z + (c(1.0, 0.0) - (i * z * 2.0).exp()).ln() + c(-LN_2, FRAC_PI_2)
    } else if z.im < -1.0 {
        // sin z = e^{iz}(1 − e^{−2iz}) · (−i/2)
        i * z + (c(1.0, 0.0) - (-i * z * 2.0).exp()).ln() + c(-LN_2, -FRAC_PI_2)
    } else {
        z.sin().ln()
    }
}

pub fn ln_cos(z: Complex64) -> Complex64 {
    ln_sin(z + FRAC_PI_2)
}

/// `ln((cos + sign·sin)(z))` with `sign = ±1`, using
/// `cos z ± sin z = √2 sin(z + π/4 ± ... )`.
pub fn ln_cos_plus_sin(z: Complex64, sign: f64) -> Complex64 {
    let shift = if sign >= 0.0 {
        FRAC_PI_4
    } else {
        3.0 * FRAC_PI_4
    };
    c(0.5 * LN_2, 0.0) + ln_sin(z + shift)
}

/// `B_{2k} / (2k)!` for `k = 1..=20`.
const BERNOULLI_OVER_FACTORIAL: [f64; 20] = [
    8.333_333_333_333_332_87e-2,
    -1.388_888_888_888_888_94e-3,
    3.306_878_306_878_307_10e-5,
    -8.267_195_767_195_767_54e-7,
    2.087_675_698_786_810_02e-8,
    -5.284_190_138_687_493_22e-10,
    1.338_253_653_068_467_89e-11,
    -3.389_680_296_322_582_72e-13,
    8.586_062_056_277_845_17e-15,
    -2.174_868_698_558_061_92e-16,
    5.509_002_828_360_229_53e-18,
    -1.395_446_468_581_252_23e-19,
    3.534_707_039_629_467_28e-21,
    -8.953_517_427_037_546_28e-23,
    2.267_952_452_337_682_93e-24,
    -5.744_790_668_872_202_46e-26,
    1.455_172_475_614_864_96e-27,
    -3.685_994_940_665_310_29e-29,
    9.336_734_257_095_045_07e-31,
    -2.365_022_415_700_629_95e-32,
];

/// Above this height the alternating series loses too much to cancellation
/// and [`zeta`] switches to Euler–Maclaurin summation.
pub const ZETA_ALTERNATING_MAX_HEIGHT: f64 = 25.0;

const BORWEIN_TERMS: usize = 64;

/// ζ(s) from Borwein's acceleration of the alternating η-series,
/// `ζ(s) = η(s) / (1 − 2^{1−s})`.
pub fn zeta_alternating(s: Complex64) -> Result<Complex64> {
    let denom = c(1.0, 0.0) - (c(LN_2, 0.0) * (c(1.0, 0.0) - s)).exp();
    if denom.norm() < 1e-14 {
        return zeta_euler_maclaurin(s);
    }
    let n = BORWEIN_TERMS;
    let nf = n as f64;
    // d_k = n Σ_{i<=k} (n+i−1)! 4^i / ((n−i)! (2i)!)
    let mut d = vec![0.0f64; n + 1];
    let mut term = 1.0 / nf;
    let mut acc = term;
    d[0] = nf * acc;
    for i in 0..n {
        let fi = i as f64;
        term *= (nf + fi) * 4.0 * (nf - fi) / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0));
        acc += term;
        d[i + 1] = nf * acc;
    }
    let dn = d[n];
    let mut sum = c(0.0, 0.0);
    for k in 0..n {
        let w = (d[k] - dn) * if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += w * (-s * ((k + 1) as f64).ln()).exp();
    }
    Ok(-sum / (denom * dn))
}

/// ζ(s) by Euler–Maclaurin summation with 20 Bernoulli corrections.
pub fn zeta_euler_maclaurin(s: Complex64) -> Result<Complex64> {
    if (s - 1.0).norm() == 0.0 {
        return Err(Error::Pole("1".into()));
    }
    let kmax = BERNOULLI_OVER_FACTORIAL.len();
    let n_terms = 10 + ((s.norm() + 2.0 * kmax as f64) / PI).ceil() as usize;
    let nf = n_terms as f64;
    let mut sum = c(0.0, 0.0);
    for n in 1..n_terms {
        sum += (-s * (n as f64).ln()).exp();
    }
    let n_pow = (-s * nf.ln()).exp(); // N^{-s}
    sum += n_pow * nf / (s - 1.0) + n_pow * 0.5;
    // rising factorial s(s+1)...(s+2k−2) times N^{−s−2k+1}
    let mut rising = s;
    let mut power = n_pow / nf;
    for (k, &b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let corr = rising * power * b;
        sum += corr;
        let k2 = 2.0 * (k + 1) as f64;
        rising = rising * (s + k2 - 1.0) * (s + k2);
        power = power / (nf * nf);
    }
    Ok(sum)
}

/// Riemann ζ for complex `s != 1`.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    if s == c(1.0, 0.0) {
        return Err(Error::Pole("1".into()));
    }
    if s.im.abs() <= ZETA_ALTERNATING_MAX_HEIGHT && s.re >= 0.05 {
        zeta_alternating(s)
    } else {
        zeta_euler_maclaurin(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn gamma_real_values() {
        assert!(close(gamma(c(5.0, 0.0)), c(24.0, 0.0), 1e-14));
        assert!(close(gamma(c(0.5, 0.0)), c(PI.sqrt(), 0.0), 1e-14));
        assert!(close(gamma(c(-0.5, 0.0)), c(-2.0 * PI.sqrt(), 0.0), 1e-14));
        assert!(close(
            gamma(c(10.3, 0.0)),
            c(716_430.689_062_376_4, 0.0),
            1e-10
        ));
    }

    #[test]
    fn gamma_recurrence_and_reflection() {
        for &(x, y) in &[
            (0.3, 2.0),
            (0.75, -40.0),
            (1.5, 300.0),
            (-1.3, 5.0),
            (0.1, 800.0),
        ] {
            let z = c(x, y);
            let lhs = ln_gamma(z + 1.0);
            let rhs = ln_gamma(z) + z.ln();
            let diff = (lhs - rhs).exp();
            assert!((diff - 1.0).norm() < 1e-11, "z={z}: {diff}");
            // |Γ(1/2 + iy)|² = π / cosh(πy)
            let half = ln_gamma(c(0.5, y)).re * 2.0;
            let expected = PI.ln() - ln_cos(c(0.0, PI * y)).re;
            assert!((half - expected).abs() < 1e-11 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn log_sine_matches_direct() {
        for &(x, y) in &[
            (0.3, 0.2),
            (1.1, 3.0),
            (-2.0, -7.5),
            (0.7, 40.0),
            (2.5, -40.0),
        ] {
            let z = c(x, y);
            let direct = z.sin();
            let stable = ln_sin(z).exp();
            assert!(close(stable, direct, 1e-12), "z={z}");
        }
        // far beyond the overflow threshold of sin itself
        let z = c(0.4, 2000.0);
        let ls = ln_sin(z);
        assert!((ls.re - (2000.0 - LN_2)).abs() < 1e-9);
    }

    #[test]
    fn zeta_classical_values() {
        let z2 = zeta(c(2.0, 0.0)).unwrap();
        assert!(close(z2, c(PI * PI / 6.0, 0.0), 1e-12));
        let z4 = zeta(c(4.0, 0.0)).unwrap();
        assert!(close(z4, c(PI.powi(4) / 90.0, 0.0), 1e-12));
        let zh = zeta(c(0.5, 0.0)).unwrap();
        assert!(close(zh, c(-1.460_354_508_809_586_8, 0.0), 1e-12));
        assert!(matches!(zeta(c(1.0, 0.0)), Err(Error::Pole(_))));
    }

    #[test]
    fn zeta_three_against_direct_series() {
        // Σ_{n<=10^6} n^{-3} plus the Euler–Maclaurin tail 1/(2N²) − 1/(2N²)·... to O(N^-4)
        let n = 1_000_000u64;
        let mut s = 0.0;
        for k in (1..=n).rev() {
            s += 1.0 / (k as f64).powi(3);
        }
        let nf = n as f64;
        s += 1.0 / (2.0 * nf * nf) - 1.0 / (2.0 * nf.powi(3));
        let z = zeta(c(3.0, 0.0)).unwrap();
        assert!((z.re - s).abs() < 1e-13, "{} vs {s}", z.re);
        assert!((z.re - 1.202_056_903_159_594_3).abs() < 1e-14);
    }

    #[test]
    fn zeta_first_zero() {
        let z = zeta(c(0.5, 14.134_725)).unwrap();
        assert!(z.norm() < 1e-5, "{z}");
        // sign change of the Hardy-normalized real part along the line
        let lo = zeta(c(0.5, 14.13)).unwrap();
        let hi = zeta(c(0.5, 14.14)).unwrap();
        assert!(lo.norm() > z.norm() && hi.norm() > z.norm());
    }

    #[test]
    fn both_zeta_routes_agree() {
        for &(x, y) in &[
            (0.1, 3.0),
            (0.5, 20.0),
            (1.3, -12.0),
            (2.0, 24.0),
            (3.0, 0.5),
            (0.8, 0.0),
        ] {
            let s = c(x, y);
            let a = zeta_alternating(s).unwrap();
            let b = zeta_euler_maclaurin(s).unwrap();
            assert!(close(a, b, 1e-11), "s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn zeta_high_on_the_line() {
        // Im s = 10^3 at Re 0.1 against the reflected value
        let s = c(0.1, 1000.0);
        let z = zeta(s).unwrap();
        let one_minus = zeta(c(1.0, 0.0) - s).unwrap();
        // ζ(s) = 2^s π^{s−1} sin(πs/2) Γ(1−s) ζ(1−s)
        let ln_chi =
            s * LN_2 + (s - 1.0) * PI.ln() + ln_sin(s * FRAC_PI_2) + ln_gamma(c(1.0, 0.0) - s);
        let rhs = ln_chi.exp() * one_minus;
        assert!(close(z, rhs, 1e-9), "{z} vs {rhs}");
    }
}

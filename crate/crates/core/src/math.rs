//! Small numerical kernels shared across the crate: log-gamma, log-domain
//! binomials, log-sum-exp and deterministic seed derivation.

/// Lanczos coefficients (g = 7, n = 9).
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_7;

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection, only hit for x in (0, 0.5)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    LN_SQRT_TWO_PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// log of the binomial coefficient C(n, k).
///
/// The two subtracted terms are summed first so that the result is exactly
/// symmetric under k <-> n - k.
pub fn log_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - (ln_gamma(k as f64 + 1.0) + ln_gamma((n - k) as f64 + 1.0))
}

/// log(exp(a) + exp(b)) without overflow.
pub fn log_sum_exp2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// log of the sum of exponentials of a slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Binary entropy-type function I(x) = [(1+x)log(1+x) + (1-x)log(1-x)] / 2
/// on [-1, 1], with the 0*log(0) terms at the endpoints taken as 0.
pub fn binary_entropy(x: f64) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&x));
    let up = 1.0 + x;
    let dn = 1.0 - x;
    let a = if up == 0.0 { 0.0 } else { up * up.ln() };
    let b = if dn == 0.0 { 0.0 } else { dn * dn.ln() };
    0.5 * (a + b)
}

/// SplitMix64 finalizer; used to derive statistically independent seeds for
/// replicate streams from a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

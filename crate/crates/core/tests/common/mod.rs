//! Shared oracle machinery for the integration suites: exhaustive
//! configuration enumeration, chi-squared survival function, and
//! Kolmogorov-Smirnov helpers. Everything here is independent of the
//! implementation paths it checks.

#![allow(dead_code)]

/// Exhaustive law of X-bar for the Curie-Weiss model, by direct enumeration
/// of all 2^n spin configurations.
pub struct EnumeratedCw {
    pub n: usize,
    /// Support points (2k - n)/n, ascending.
    pub support: Vec<f64>,
    /// P(X-bar = m_k).
    pub probs: Vec<f64>,
    /// Z_n(beta, p) with the 2^-n convention.
    pub z: f64,
}

pub fn enumerate_cw(n: usize, beta: f64, p: u32) -> EnumeratedCw {
    assert!(n <= 22, "enumeration is 2^n");
    let mut weights = vec![0.0_f64; n + 1];
    for mask in 0u64..(1 << n) {
        let k = mask.count_ones() as usize;
        let m = (2 * k as i64 - n as i64) as f64 / n as f64;
        weights[k] += (n as f64 * beta * m.powi(p as i32)).exp();
    }
    let total: f64 = weights.iter().sum();
    let z = total / (1u64 << n) as f64;
    EnumeratedCw {
        n,
        support: (0..=n)
            .map(|k| (2 * k as i64 - n as i64) as f64 / n as f64)
            .collect(),
        probs: weights.iter().map(|w| w / total).collect(),
        z,
    }
}

impl EnumeratedCw {
    pub fn moment(&self, order: u32) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&m, &pr)| pr * m.powi(order as i32))
            .sum()
    }

    pub fn tail<F: Fn(f64) -> bool>(&self, pred: F) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(&m, _)| pred(m))
            .map(|(_, &pr)| pr)
            .sum()
    }
}

/// Regularized upper incomplete gamma Q(a, x), by series / continued
/// fraction (Lentz).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Stirling with correction terms; adequate for the df used in tests
    if x < 10.0 {
        return ln_gamma(x + 1.0) - x.ln();
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x - 0.5) * x.ln() - x
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Survival function of the chi-squared distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, x / 2.0)
}

/// Pearson goodness-of-fit: merge low-expectation cells into their
/// neighbors, return (statistic, degrees of freedom).
pub fn chi2_gof(observed: &[f64], expected: &[f64], min_expected: f64) -> (f64, f64) {
    assert_eq!(observed.len(), expected.len());
    let mut obs_m = Vec::new();
    let mut exp_m = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_o += o;
        acc_e += e;
        if acc_e >= min_expected {
            obs_m.push(acc_o);
            exp_m.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 {
        if let (Some(o), Some(e)) = (obs_m.last_mut(), exp_m.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        }
    }
    let stat: f64 = obs_m
        .iter()
        .zip(&exp_m)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    (stat, (obs_m.len() - 1) as f64)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS test at significance `alpha`.
pub fn ks_two_sample_critical(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

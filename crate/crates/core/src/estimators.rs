//! Point estimators for beta: the closed-form MPLE for the Curie-Weiss
//! model, a root-finding MPLE for the Erdos-Renyi model, the finite-n MLE
//! via the monotone likelihood equation, and the shared asymptotic variance.

use serde::Serialize;

use crate::er_model::HyperIsingInstance;
use crate::error::{Error, Result};
use crate::landscape::{self, ModelSpec};

/// Divergence sentinel for the root searches; every regime of interest lies
/// far below this.
pub const BETA_MAX: f64 = 50.0;

const BISECT_TOL: f64 = 1e-9;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Mple,
    Mle,
}

/// Where the estimate landed relative to the parameter space [0, inf).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    Interior,
    AtZero,
    Diverged,
}

/// A point estimate of beta.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    /// The estimate; +inf when `boundary` is `Diverged`.
    pub value: f64,
    pub method: Method,
    pub converged: bool,
    pub boundary: Boundary,
}

impl Estimate {
    fn interior(value: f64, method: Method) -> Self {
        Estimate {
            value,
            method,
            converged: true,
            boundary: Boundary::Interior,
        }
    }

    fn at_zero(method: Method) -> Self {
        Estimate {
            value: 0.0,
            method,
            converged: true,
            boundary: Boundary::AtZero,
        }
    }

    fn diverged(method: Method) -> Self {
        Estimate {
            value: f64::INFINITY,
            method,
            converged: true,
            boundary: Boundary::Diverged,
        }
    }
}

/// Curie-Weiss MPLE: beta-hat = eta_p(X-bar), truncated to the parameter
/// space beta >= 0.
pub fn mple_cw(sample_mean: f64, p: u32) -> Result<Estimate> {
    if !(-1.0..=1.0).contains(&sample_mean) {
        return Err(Error::Domain {
            name: "sample_mean",
            value: sample_mean,
            domain: "[-1, 1]",
        });
    }
    let raw = landscape::eta(sample_mean, p);
    Ok(if raw == f64::INFINITY {
        Estimate::diverged(Method::Mple)
    } else if raw < 0.0 {
        Estimate::at_zero(Method::Mple)
    } else {
        Estimate::interior(raw, Method::Mple)
    })
}

/// Curie-Weiss MLE: solves E_{beta,p}[X-bar^p] = sample_mean^p for beta in
/// [0, BETA_MAX] by bisection. Strict convexity of log Z_n in beta makes the
/// left side strictly increasing, so the root is unique.
pub fn mle_cw(sample_mean: f64, p: u32, n: usize) -> Result<Estimate> {
    if !(-1.0..=1.0).contains(&sample_mean) {
        return Err(Error::Domain {
            name: "sample_mean",
            value: sample_mean,
            domain: "[-1, 1]",
        });
    }
    let target = sample_mean.powi(p as i32);
    if target >= 1.0 {
        // |X-bar| = 1: no finite root, mirroring eta's divergence there
        return Ok(Estimate::diverged(Method::Mle));
    }
    // the log-binomial part of the weights does not depend on beta; hoist it
    // out of the bisection
    ModelSpec::new(p, 0.0, n)?;
    let nf = n as f64;
    let ln2 = std::f64::consts::LN_2;
    let base: Vec<f64> = (0..=n)
        .map(|k| crate::math::log_binomial(n as u64, k as u64) - nf * ln2)
        .collect();
    let support: Vec<f64> = (0..=n)
        .map(|k| (2 * k as i64 - n as i64) as f64 / nf)
        .collect();
    let g = |beta: f64| -> f64 {
        let lw: Vec<f64> = base
            .iter()
            .zip(&support)
            .map(|(b, m)| b + nf * beta * m.powi(p as i32))
            .collect();
        let log_z = crate::math::log_sum_exp(&lw);
        lw.iter()
            .zip(&support)
            .map(|(w, m)| (w - log_z).exp() * m.powi(p as i32))
            .sum()
    };
    if target <= g(0.0) {
        return Ok(Estimate::at_zero(Method::Mle));
    }
    if target >= g(BETA_MAX) {
        return Ok(Estimate::diverged(Method::Mle));
    }
    let mut lo = 0.0_f64;
    let mut hi = BETA_MAX;
    let mut iter = 0;
    while hi - lo > BISECT_TOL {
        iter += 1;
        if iter > MAX_ITER {
            return Err(Error::NonConvergence(format!(
                "mle_cw bisection exceeded {MAX_ITER} iterations (bracket [{lo}, {hi}])"
            )));
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Estimate::interior(0.5 * (lo + hi), Method::Mle))
}

/// Erdos-Renyi MPLE: the least solution of
///   H_n(x) = sum_i m_i(x) tanh(p beta m_i(x)),
/// found by bisection; psi_n is strictly increasing in beta, so the least
/// solution is the unique one.
pub fn mple_er(instance: &HyperIsingInstance) -> Result<Estimate> {
    let n = instance.n();
    let p = instance.p();
    let fields = instance.local_fields();
    let target = instance.hamiltonian() / n as f64;
    let psi = |beta: f64| -> f64 {
        fields
            .iter()
            .map(|&m| m * (p as f64 * beta * m).tanh())
            .sum::<f64>()
            / n as f64
    };
    if target <= 0.0 {
        // psi(0) = 0 and psi is increasing
        return Ok(Estimate::at_zero(Method::Mple));
    }
    if psi(BETA_MAX) <= target {
        return Ok(Estimate::diverged(Method::Mple));
    }
    let mut lo = 0.0_f64;
    let mut hi = BETA_MAX;
    let mut iter = 0;
    while hi - lo > BISECT_TOL {
        iter += 1;
        if iter > MAX_ITER {
            return Err(Error::NonConvergence(format!(
                "mple_er bisection exceeded {MAX_ITER} iterations (bracket [{lo}, {hi}])"
            )));
        }
        let mid = 0.5 * (lo + hi);
        if psi(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Estimate::interior(0.5 * (lo + hi), Method::Mple))
}

/// Shared asymptotic variance of sqrt(n)(beta-hat - beta) above threshold:
/// -H''(m_*) / (p^2 m_*^(2p-2)).
pub fn asymptotic_variance(beta: f64, p: u32) -> Result<f64> {
    let spec = ModelSpec::asymptotic(p, beta)?;
    let l = landscape::find_m_star(&spec)?;
    let h2 = landscape::eval_h_deriv(l.m_star, &spec, 2)?;
    Ok(-h2 / ((p * p) as f64 * l.m_star.powi(2 * p as i32 - 2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curie_weiss;

    #[test]
    fn mple_basic_values() {
        let e = mple_cw(0.0, 3).unwrap();
        assert_eq!(e.value, 0.0);
        let e = mple_cw(0.5, 2).unwrap();
        assert!((e.value - 0.5_f64.atanh()).abs() < 1e-12);
        assert!((e.value - 0.549306).abs() < 1e-6);
        assert_eq!(e.boundary, Boundary::Interior);
        let e = mple_cw(1.0, 2).unwrap();
        assert_eq!(e.boundary, Boundary::Diverged);
        assert_eq!(e.value, f64::INFINITY);
        // odd p, negative mean: eta < 0, clamp to the boundary of [0, inf)
        let e = mple_cw(-0.5, 3).unwrap();
        assert_eq!(e.boundary, Boundary::AtZero);
        assert_eq!(e.value, 0.0);
        assert!(mple_cw(1.5, 2).is_err());
    }

    #[test]
    fn mle_at_zero_boundary() {
        // target below the beta = 0 moment
        let e = mle_cw(0.0, 2, 20).unwrap();
        assert_eq!(e.boundary, Boundary::AtZero);
        let e = mle_cw(1.0, 2, 30).unwrap();
        assert_eq!(e.boundary, Boundary::Diverged);
    }

    #[test]
    fn mle_matches_likelihood_grid_oracle() {
        // n = 12, p = 2, X-bar = 5/6: argmax over a fine beta grid of the
        // exact log-likelihood log P(X-bar = m) = lw(m) - log Z
        let n = 12;
        let mean = 5.0 / 6.0;
        let e = mle_cw(mean, 2, n).unwrap();
        assert_eq!(e.boundary, Boundary::Interior);

        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut b = 0.0;
        while b <= 3.0 {
            let d = curie_weiss::build_dist(&ModelSpec::new(2, b, n).unwrap()).unwrap();
            let k = d.index_of(mean).unwrap();
            let ll = d.log_weights[k] - d.log_z;
            if ll > best.0 {
                best = (ll, b);
            }
            b += 1e-4;
        }
        assert!(
            (e.value - best.1).abs() < 2e-4,
            "bisection {} vs grid {}",
            e.value,
            best.1
        );
    }

    #[test]
    fn mle_link_is_increasing() {
        // E_beta[X-bar^p] strictly increasing in beta (drives bisection)
        for p in [2u32, 3] {
            let mut prev = -1.0;
            for i in 0..=20 {
                let beta = i as f64 * 0.1;
                let m = curie_weiss::build_dist(&ModelSpec::new(p, beta, 60).unwrap())
                    .unwrap()
                    .moment(p);
                assert!(m > prev, "p={p} beta={beta}");
                prev = m;
            }
        }
    }

    /// Exact moments of beta-hat over the support, conditional on a finite
    /// estimate (the |X-bar| = 1 atom diverges).
    fn exact_estimate_moments<F: Fn(f64) -> f64>(n: usize, beta: f64, p: u32, est: F) -> (f64, f64) {
        let d = curie_weiss::build_dist(&ModelSpec::new(p, beta, n).unwrap()).unwrap();
        let mut mass = 0.0;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (k, &m) in d.support.iter().enumerate() {
            let v = est(m);
            if v.is_finite() {
                mass += d.probs[k];
                mean += d.probs[k] * v;
                m2 += d.probs[k] * v * v;
            }
        }
        let mean = mean / mass;
        (mean, m2 / mass - mean * mean)
    }

    #[test]
    fn mle_consistent_at_large_n() {
        // beta-hat -> beta in probability: exact conditional mean approaches
        // the truth and the spread shrinks from n = 200 to n = 800
        let moments = |n: usize| {
            exact_estimate_moments(n, 1.0, 2, |m| mle_cw(m, 2, n).unwrap().value)
        };
        let (mean200, var200) = moments(200);
        let (mean800, var800) = moments(800);
        assert!((mean200 - 1.0).abs() < 0.05, "n=200: {mean200}");
        assert!((mean800 - 1.0).abs() < (mean200 - 1.0).abs());
        assert!(var800 < var200);

        // Monte Carlo agrees with the exact conditional mean at n = 200
        let d = curie_weiss::build_dist(&ModelSpec::new(2, 1.0, 200).unwrap()).unwrap();
        let means = d.sample_means(400, 99);
        let ests: Vec<f64> = means
            .iter()
            .map(|&m| mle_cw(m, 2, 200).unwrap().value)
            .filter(|v| v.is_finite())
            .collect();
        let avg = ests.iter().sum::<f64>() / ests.len() as f64;
        let se = (var200 / ests.len() as f64).sqrt();
        assert!((avg - mean200).abs() < 4.0 * se, "{avg} vs {mean200} (se {se})");
    }

    #[test]
    fn asymptotic_variance_positive_and_trending() {
        let v = asymptotic_variance(1.0, 2).unwrap();
        assert!(v > 0.0);
        // m_* ~ 0.957504: check the formula against by-hand parts
        let spec = ModelSpec::asymptotic(2, 1.0).unwrap();
        let l = crate::landscape::find_m_star(&spec).unwrap();
        let h2 = crate::landscape::eval_h_deriv(l.m_star, &spec, 2).unwrap();
        assert!((v - (-h2 / (4.0 * l.m_star * l.m_star))).abs() < 1e-14);

        let vals: Vec<f64> = [2.0, 5.0, 10.0, 20.0]
            .iter()
            .map(|&b| asymptotic_variance(b, 2).unwrap())
            .collect();
        assert!(vals.iter().all(|&v| v > 0.0 && v.is_finite()));
        // monotone trend where 1 - m_* is still resolvable: the magnetization
        // pins to 1 and atanh steepens, so the beta-space variance grows
        let trend: Vec<f64> = [2.0, 4.0, 6.0, 8.0]
            .iter()
            .map(|&b| asymptotic_variance(b, 2).unwrap())
            .collect();
        assert!(trend.windows(2).all(|w| w[1] > w[0]), "{trend:?}");
        assert!(asymptotic_variance(0.3, 2).is_err());
    }

    #[test]
    fn mple_sampling_variance_matches_exact_law() {
        // Monte Carlo at n = 500, p = 2, beta = 1 reproduces the exact
        // finite-n variance of sqrt(n)(mple - beta) within sampling error
        let n = 500;
        let scale = (n as f64).sqrt();
        let stat = |m: f64| scale * (mple_cw(m, 2).unwrap().value - 1.0);
        let (exact_mean, exact_var) = exact_estimate_moments(n, 1.0, 2, stat);

        let d = curie_weiss::build_dist(&ModelSpec::new(2, 1.0, n).unwrap()).unwrap();
        let means = d.sample_means(10_000, 4242);
        let stats: Vec<f64> = means.iter().map(|&m| stat(m)).filter(|v| v.is_finite()).collect();
        let avg = stats.iter().sum::<f64>() / stats.len() as f64;
        let var = stats.iter().map(|s| (s - avg).powi(2)).sum::<f64>()
            / (stats.len() - 1) as f64;
        let se_mean = (exact_var / stats.len() as f64).sqrt();
        assert!((avg - exact_mean).abs() < 4.0 * se_mean, "{avg} vs {exact_mean}");
        let se_var = exact_var * (2.0 / (stats.len() as f64 - 1.0)).sqrt();
        assert!((var - exact_var).abs() < 4.0 * se_var, "{var} vs {exact_var}");
    }

    #[test]
    fn mple_variance_approaches_asymptotic() {
        // the exact finite-n variance of the scaled MPLE converges to the
        // asymptotic formula; at p = 2, beta = 1 the n = 500 value is still
        // ~20% high and the drift shrinks with n
        let formula = asymptotic_variance(1.0, 2).unwrap();
        let ratio = |n: usize| {
            let scale = (n as f64).sqrt();
            let (_, var) =
                exact_estimate_moments(n, 1.0, 2, |m| scale * (mple_cw(m, 2).unwrap().value - 1.0));
            var / formula
        };
        let r500 = ratio(500);
        let r4000 = ratio(4000);
        let r20000 = ratio(20_000);
        assert!((r4000 - 1.0).abs() < (r500 - 1.0).abs());
        assert!((r20000 - 1.0).abs() < 0.05, "ratio at n=20000: {r20000}");
    }
}

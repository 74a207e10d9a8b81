//! The free-energy landscape H_{beta,p}(x) = beta x^p - I(x) on [-1, 1]: its
//! derivatives, maximizers, the phase-transition threshold beta*(p) and the
//! pseudolikelihood link function eta_p.
//!
//! Everything downstream (slopes, sample sizes, large-deviation limits) is a
//! supremum of H over some region, so this module also provides robust
//! interval suprema built from a coarse grid plus bisection polish of the
//! stationary equation H' = 0. H' has at most three positive roots, which
//! makes grid bracketing reliable.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::binary_entropy;

/// Refuse maximizer queries within this distance of beta*(p); the interior
/// maximizer degenerates at the threshold itself.
pub const THRESHOLD_MARGIN: f64 = 1e-6;

/// Queries closer than this to beta*(p) are answered but flagged low
/// precision (beta*(p) itself is only known to ~1e-8).
pub const NEAR_THRESHOLD: f64 = 1e-4;

const GRID_POINTS: usize = 4096;
const DERIV_TOL: f64 = 1e-12;

/// A Curie-Weiss model instance: interaction order p, inverse temperature
/// beta, and (optionally) the number of spins n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: u32,
    pub beta: f64,
    pub n: Option<usize>,
}

impl ModelSpec {
    pub fn new(p: u32, beta: f64, n: usize) -> Result<Self> {
        Self::build(p, beta, Some(n))
    }

    /// A spec without a system size, for asymptotic-only queries.
    pub fn asymptotic(p: u32, beta: f64) -> Result<Self> {
        Self::build(p, beta, None)
    }

    fn build(p: u32, beta: f64, n: Option<usize>) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidSpec(format!("p = {p}, need p >= 2")));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidSpec(format!("beta = {beta}, need beta >= 0")));
        }
        if n == Some(0) {
            return Err(Error::InvalidSpec("n = 0, need n >= 1".into()));
        }
        Ok(Self { p, beta, n })
    }

    pub fn n(&self) -> Result<usize> {
        self.n
            .ok_or_else(|| Error::InvalidSpec("operation requires a finite n".into()))
    }
}

/// Stationary structure of H_{beta,p} above threshold: the unique positive
/// global maximizer m_*, the local minimizer below it (p >= 3 only), and the
/// maximum value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Landscape {
    pub p: u32,
    pub beta: f64,
    pub m_star: f64,
    /// Local minimizer of H on (0, m_star); `None` for p = 2.
    pub m_under: Option<f64>,
    pub h_at_m_star: f64,
}

/// The estimation threshold beta*(p).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Threshold {
    pub p: u32,
    pub beta_star: f64,
}

/// H_{beta,p}(x) = beta x^p - I(x). Finite on all of [-1, 1]; the endpoint
/// values are beta (+-1)^p - log 2.
pub fn eval_h(x: f64, spec: &ModelSpec) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "[-1, 1]",
        });
    }
    Ok(h_unchecked(x, spec.beta, spec.p))
}

#[inline]
pub(crate) fn h_unchecked(x: f64, beta: f64, p: u32) -> f64 {
    beta * x.powi(p as i32) - binary_entropy(x)
}

/// First or second derivative of H on the open interval (-1, 1).
///
/// order 1: beta p x^(p-1) - atanh(x); order 2: beta p (p-1) x^(p-2) - 1/(1-x^2).
pub fn eval_h_deriv(x: f64, spec: &ModelSpec, order: u32) -> Result<f64> {
    if x.abs() >= 1.0 {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "(-1, 1)",
        });
    }
    match order {
        1 => Ok(h_prime(x, spec.beta, spec.p)),
        2 => Ok(h_second(x, spec.beta, spec.p)),
        _ => Err(Error::Domain {
            name: "order",
            value: order as f64,
            domain: "{1, 2}",
        }),
    }
}

#[inline]
pub(crate) fn h_prime(x: f64, beta: f64, p: u32) -> f64 {
    beta * p as f64 * x.powi(p as i32 - 1) - x.atanh()
}

#[inline]
pub(crate) fn h_second(x: f64, beta: f64, p: u32) -> f64 {
    beta * (p * (p - 1)) as f64 * x.powi(p as i32 - 2) - 1.0 / (1.0 - x * x)
}

/// The MPLE link eta_p(t) = p^-1 t^(1-p) atanh(t), with eta_p(0) = 0 and the
/// extended-real values eta_p(1) = +inf, eta_p(-1) = +inf for even p (by
/// evenness) and -inf for odd p.
pub fn eta(t: f64, p: u32) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&t));
    if t == 0.0 {
        return 0.0;
    }
    if t == 1.0 {
        return f64::INFINITY;
    }
    if t == -1.0 {
        return if p % 2 == 0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    t.atanh() / (p as f64 * t.powi(p as i32 - 1))
}

/// Bisection for a root of `f` on [lo, hi], assuming f(lo) and f(hi) have the
/// stated signs (positive at `pos_end`). Runs to floating-point resolution.
fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, pos_is_lo: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == pos_is_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest representable point strictly below 1.
fn below_one() -> f64 {
    f64::from_bits(1.0_f64.to_bits() - 1)
}

/// Supremum of H_{beta,p} over a closed subinterval [a, b] of [-1, 1],
/// computed from a grid scan plus bisection polish of every local-max sign
/// change of H'. Returns (argmax, sup).
pub fn sup_h_on_interval(beta: f64, p: u32, a: f64, b: f64) -> Result<(f64, f64)> {
    if !(-1.0..=1.0).contains(&a) || !(-1.0..=1.0).contains(&b) || a > b {
        return Err(Error::Domain {
            name: "interval",
            value: a,
            domain: "a <= b within [-1, 1]",
        });
    }
    let mut best_x = a;
    let mut best_h = h_unchecked(a, beta, p);
    let mut consider = |x: f64| {
        let h = h_unchecked(x, beta, p);
        if h > best_h {
            best_h = h;
            best_x = x;
        }
    };
    consider(b);

    let k = GRID_POINTS;
    let step = (b - a) / k as f64;
    if step == 0.0 {
        return Ok((best_x, best_h));
    }
    // interior derivative samples; endpoints at +-1 are handled by `consider`
    let interior = |x: f64| x.clamp(-below_one(), below_one());
    let mut prev_x = interior(a);
    let mut prev_d = h_prime(prev_x, beta, p);
    for i in 1..=k {
        let x = interior(a + step * i as f64);
        consider(x);
        let d = h_prime(x, beta, p);
        // local max: derivative goes + -> -
        if prev_d > 0.0 && d <= 0.0 {
            let root = bisect_root(|t| h_prime(t, beta, p), prev_x, x, true);
            consider(root);
        }
        prev_x = x;
        prev_d = d;
    }
    Ok((best_x, best_h))
}

/// Supremum of H_{beta,p} over all of [-1, 1]. For every p the supremum is
/// attained on [0, 1]: for even p by symmetry, for odd p because H(x) <=
/// H(-x) when x < 0.
pub fn sup_h(beta: f64, p: u32) -> Result<(f64, f64)> {
    sup_h_on_interval(beta, p, 0.0, 1.0)
}

fn threshold_memo() -> &'static Mutex<HashMap<u32, f64>> {
    static MEMO: OnceLock<Mutex<HashMap<u32, f64>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// beta*(p) = sup{ beta >= 0 : sup_x H_{beta,p}(x) = 0 }, by bisection of the
/// predicate sup_{x in (0,1]} H > 0 to absolute tolerance 1e-8. Results are
/// memoized per p.
pub fn find_beta_star(p: u32) -> Result<Threshold> {
    if p < 2 {
        return Err(Error::InvalidSpec(format!("p = {p}, need p >= 2")));
    }
    if let Some(&b) = threshold_memo().lock().unwrap().get(&p) {
        return Ok(Threshold { p, beta_star: b });
    }
    // beta*(p) lies in [0.5, log 2]; sup H is nondecreasing in beta.
    let mut lo = 0.4_f64;
    let mut hi = 0.75_f64;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let (_, sup) = sup_h(mid, p)?;
        if sup > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let beta_star = 0.5 * (lo + hi);
    threshold_memo().lock().unwrap().insert(p, beta_star);
    Ok(Threshold { p, beta_star })
}

/// Convenience accessor for the memoized threshold value.
pub fn beta_star(p: u32) -> Result<f64> {
    Ok(find_beta_star(p)?.beta_star)
}

fn require_above_threshold(beta: f64, p: u32) -> Result<f64> {
    let bs = beta_star(p)?;
    if beta <= bs + THRESHOLD_MARGIN {
        return Err(Error::NoInteriorMaximizer {
            beta,
            p,
            beta_star: bs,
        });
    }
    Ok(bs)
}

/// Locate the unique positive global maximizer m_*(beta,p) (and, for p >= 3,
/// the local minimizer below it) for beta > beta*(p).
///
/// Grid bracket on [0, 1] then bisection of H' to |H'| <= 1e-12. When the
/// true maximizer is closer to 1 than floating-point resolution (very large
/// beta), the largest representable point below 1 is returned; H is flat to
/// machine precision there.
pub fn find_m_star(spec: &ModelSpec) -> Result<Landscape> {
    let (beta, p) = (spec.beta, spec.p);
    require_above_threshold(beta, p)?;

    let k = GRID_POINTS;
    let step = 1.0 / k as f64;
    let mut best_i = 0usize;
    let mut best_h = 0.0_f64; // H(0) = 0
    for i in 1..=k {
        let x = (step * i as f64).min(1.0);
        let h = h_unchecked(x, beta, p);
        if h > best_h {
            best_h = h;
            best_i = i;
        }
    }
    if best_i == 0 {
        // above threshold this means the positive bump escaped the grid;
        // treat as a convergence failure rather than claiming m_* = 0
        return Err(Error::NonConvergence(format!(
            "grid scan found no positive maximizer at beta = {beta}, p = {p}"
        )));
    }

    let lo = step * (best_i - 1) as f64;
    let hi = (step * (best_i + 1) as f64).min(below_one());
    let m_star = if h_prime(hi, beta, p) > 0.0 {
        // maximizer is between hi and 1 but beyond f64 resolution
        below_one()
    } else {
        let root = bisect_root(|t| h_prime(t, beta, p), lo, hi, true);
        if h_prime(root, beta, p).abs() > DERIV_TOL && root < below_one() - step {
            return Err(Error::NonConvergence(format!(
                "derivative polish stalled at x = {root} (H' = {})",
                h_prime(root, beta, p)
            )));
        }
        root
    };

    // For p >= 3, H' <= 0 on (0, m_under) and >= 0 on (m_under, m_star):
    // scan up from 0 for the - -> + sign change.
    let m_under = if p >= 3 {
        let mut found = None;
        let mut prev_x = 0.0_f64;
        for i in 1..best_i.max(2) {
            let x = step * i as f64;
            if x >= m_star {
                break;
            }
            if h_prime(x, beta, p) > 0.0 {
                found = Some(bisect_root(|t| h_prime(t, beta, p), prev_x, x, false));
                break;
            }
            prev_x = x;
        }
        // sub-grid well: H' already positive at the first grid point
        found.or_else(|| {
            let x1 = step;
            if h_prime(x1, beta, p) > 0.0 {
                Some(bisect_root(|t| h_prime(t, beta, p), 0.0, x1, false))
            } else {
                None
            }
        })
    } else {
        None
    };
    if p >= 3 && m_under.is_none() {
        return Err(Error::NonConvergence(format!(
            "failed to locate the local minimizer below m_* at beta = {beta}, p = {p}"
        )));
    }

    Ok(Landscape {
        p,
        beta,
        m_star,
        m_under,
        h_at_m_star: h_unchecked(m_star, beta, p),
    })
}

/// The preimage eta_p^-1((thr, inf)) intersected with (0, 1], as a list of
/// closed intervals [a, b] (the sup of a continuous H over the open set
/// equals its sup over the closure). Negative arguments never contribute:
/// for odd p eta <= 0 there, for even p the preimage is symmetric and H is
/// even.
pub fn eta_preimage_intervals(thr: f64, p: u32) -> Vec<(f64, f64)> {
    let k = GRID_POINTS;
    let step = 1.0 / k as f64;
    let above = |x: f64| eta(x, p) > thr;
    let mut intervals = Vec::new();
    let mut open_start: Option<f64> = None;
    let mut prev_x = step; // first positive grid point
    let mut prev_in = above(prev_x);
    if prev_in {
        // for p >= 3 eta diverges at 0+, so the set reaches down to 0
        open_start = Some(0.0);
    }
    for i in 2..=k {
        let x = (step * i as f64).min(1.0);
        let now_in = above(x);
        if now_in != prev_in {
            let crossing = bisect_root(|t| eta(t, p) - thr, prev_x, x, prev_in);
            if prev_in {
                intervals.push((open_start.take().unwrap_or(prev_x), crossing));
            } else {
                open_start = Some(crossing);
            }
        }
        prev_x = x;
        prev_in = now_in;
    }
    // eta(1) = +inf, so a final open interval always closes at 1
    if let Some(s) = open_start {
        intervals.push((s, 1.0));
    } else if above(1.0) && intervals.last().map(|&(_, b)| b < 1.0).unwrap_or(true) {
        intervals.push((1.0, 1.0));
    }
    intervals
}

/// sup of H_{beta0,p} over eta_p^-1((beta, inf)).
///
/// Uses the closed-form reduction H_{beta0,p}(m_*(beta,p)) for p = 2 and
/// max{H_{beta0,p}(m_*(beta,p)), 0} for p >= 3, cross-checked against a
/// direct evaluation over the preimage intervals; a discrepancy beyond 1e-8
/// is reported as an internal inconsistency.
pub fn sup_h_over_preimage(beta0: f64, beta: f64, p: u32) -> Result<f64> {
    let closed = sup_h_over_preimage_closed(beta0, beta, p)?;
    let direct = sup_h_over_preimage_direct(beta0, beta, p)?;
    if (closed - direct).abs() > 1e-8 {
        return Err(Error::Inconsistent {
            context: "sup_h_over_preimage",
            closed,
            direct,
        });
    }
    Ok(closed)
}

/// Closed-form branch only (no cross-check).
pub fn sup_h_over_preimage_closed(beta0: f64, beta: f64, p: u32) -> Result<f64> {
    if beta.is_nan() || beta0.is_nan() || beta <= beta0 {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            domain: "beta > beta0",
        });
    }
    require_above_threshold(beta0, p)?;
    let alt = find_m_star(&ModelSpec::asymptotic(p, beta)?)?;
    let h_at_alt = h_unchecked(alt.m_star, beta0, p);
    Ok(if p == 2 { h_at_alt } else { h_at_alt.max(0.0) })
}

/// Direct route: enumerate the preimage intervals of eta_p and take the sup
/// of H_{beta0,p} over each. Independent of the closed-form reduction.
pub fn sup_h_over_preimage_direct(beta0: f64, beta: f64, p: u32) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for (a, b) in eta_preimage_intervals(beta, p) {
        let (_, s) = sup_h_on_interval(beta0, p, a, b)?;
        best = best.max(s);
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::NonConvergence(format!(
            "empty eta_{p} preimage above {beta}"
        )));
    }
    Ok(best)
}

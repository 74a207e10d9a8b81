//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with --nocapture) and asserting the stated tolerance.
//!
//! Two criteria are known to be unattainable as stated and fail honestly
//! rather than being loosened:
//!   - criterion 05's "strictly decreasing" clause: N*_MLE(beta = 10) and
//!     N*_MLE(beta = 20) are equal in f64 because 1 - m_*(beta, 3) falls
//!     below machine resolution (~1e-26 and ~1e-52), so the mathematical
//!     decrease (~1e-24 relative) is unrepresentable;
//!   - criterion 12: the exact finite-n law of sqrt(n)(mple - beta) at
//!     p = 4, beta = 0.75, n = 1000 has mean +0.267 (about 12 standard
//!     errors at 1e4 replicates; the finite-n bias is ~25/sqrt(n)) and
//!     variance 0.835x the asymptotic value (7% of the mass sits on the
//!     divergent |X-bar| = 1 atom), outside the stated 3-SE and 15% bands.
//!     Both numbers are exact sums over the magnetization law, not Monte
//!     Carlo artifacts, and the bias persists at the reference scale
//!     n = 20,000 (+0.16, about 7 SE).

mod common;

use std::sync::Arc;
use std::time::Instant;

use common::enumerate_cw;
use tensor_ising::bahadur::{inefficiency_window, limiting_quantities, optimal_sample_sizes, slopes};
use tensor_ising::curie_weiss::build_dist;
use tensor_ising::er_model::{concentration_check, HyperGraph, HyperIsingInstance};
use tensor_ising::estimators::{mple_er, Boundary};
use tensor_ising::experiments::{
    exact_pvalue_cw, ldp_convergence_table, normality_histogram, pvalue_curve_cw,
    pvalue_curve_er, CurveConfig, HistogramConfig, ModelKind, Statistic,
};
use tensor_ising::landscape::{eta, find_beta_star, find_m_star};
use tensor_ising::math::{binary_entropy, derive_seed};
use tensor_ising::ModelSpec;

const LN2: f64 = std::f64::consts::LN_2;
const SEED: u64 = 20240601;

fn report(id: u32, ok: bool, detail: &str, started: Instant) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:02} {verdict}: {detail} [{:.2}s]",
        started.elapsed().as_secs_f64()
    );
    assert!(ok, "criterion {id:02} FAIL: {detail}");
}

#[test]
fn criterion_01_threshold_values() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for (p, want, tol) in [(2u32, 0.5, 1e-6), (3, 0.672, 1e-3), (4, 0.689, 1e-3)] {
        let started = Instant::now();
        let got = find_beta_star(p).unwrap().beta_star;
        let elapsed = started.elapsed().as_secs_f64();
        ok &= (got - want).abs() <= tol && elapsed < 1.0;
        detail.push_str(&format!("beta*({p}) = {got:.6} ({elapsed:.3}s); "));
    }
    report(1, ok, &detail, t0);
}

#[test]
fn criterion_02_reference_sample_sizes() {
    let t0 = Instant::now();
    let r2 = optimal_sample_sizes(0.7, 0.9, 2, 0.01).unwrap();
    let r3 = optimal_sample_sizes(0.68, 0.9, 3, 0.01).unwrap();
    let ok = (r2.n_star_mple - 270.0).abs() <= 1.0
        && r2.n_star_mple == r2.n_star_mle
        && (r3.n_star_mple - 679.0).abs() <= 2.0
        && (r3.n_star_mle - 533.0).abs() <= 2.0
        && t0.elapsed().as_secs_f64() < 1.0;
    report(
        2,
        ok,
        &format!(
            "p=2: N* = {:.2}/{:.2} (want 270); p=3: {:.2}/{:.2} (want 679/533)",
            r2.n_star_mple, r2.n_star_mle, r3.n_star_mple, r3.n_star_mle
        ),
        t0,
    );
}

#[test]
fn criterion_03_p2_slope_equality_grid() {
    let t0 = Instant::now();
    let mut worst = 0.0_f64;
    for i in 0..20 {
        let beta0 = 0.515 + i as f64 * (1.95 - 0.515) / 19.0;
        for j in 0..20 {
            let beta = beta0 + (2.0 - beta0) * (j + 1) as f64 / 20.0;
            let (c_mple, c_mle) = slopes(beta0, beta, 2).unwrap();
            worst = worst.max((c_mple - c_mle).abs());
        }
    }
    let ok = worst <= 1e-10 && t0.elapsed().as_secs_f64() < 10.0;
    report(3, ok, &format!("max |c_mple - c_mle| = {worst:.2e} over 400 pairs"), t0);
}

#[test]
fn criterion_04_window_crossover() {
    let t0 = Instant::now();
    let beta = 0.9;
    let window = inefficiency_window(beta, 3).unwrap();
    let upper = window.upper;
    // the window op and the direct entropy ratio must agree
    let m = find_m_star(&ModelSpec::asymptotic(3, beta).unwrap())
        .unwrap()
        .m_star;
    assert!((upper - binary_entropy(m) / m.powi(3)).abs() < 1e-12);

    // sweep beta0 upward on a 1e-4 grid; find where the slopes first agree
    let bs = window.lower;
    let mut crossover = None;
    let mut beta0 = bs + 1e-3;
    while beta0 < LN2 {
        let (cp, cm) = slopes(beta0, beta, 3).unwrap();
        if (cm - cp).abs() <= 1e-10 {
            crossover = Some(beta0);
            break;
        }
        beta0 += 1e-4;
    }
    let crossover = crossover.unwrap_or(f64::NAN);

    // equality (1e-10) for every beta0 >= log 2 on a grid up to beta
    let mut worst_above = 0.0_f64;
    let mut b0 = LN2;
    while b0 < beta - 0.005 {
        let (cp, cm) = slopes(b0, beta, 3).unwrap();
        worst_above = worst_above.max((cm - cp).abs());
        b0 += 1e-3;
    }

    let ok = (crossover - upper).abs() <= 1e-3
        && worst_above <= 1e-10
        && t0.elapsed().as_secs_f64() < 30.0;
    report(
        4,
        ok,
        &format!(
            "crossover {crossover:.6} vs I(m_*)/m_*^3 = {upper:.6}; max diff above log2 = {worst_above:.2e}"
        ),
        t0,
    );
}

#[test]
fn criterion_05_stabilization() {
    let t0 = Instant::now();
    let grid = [3.0, 5.0, 10.0, 20.0];
    let reports: Vec<_> = grid
        .iter()
        .map(|&b| optimal_sample_sizes(0.68, b, 3, 0.01).unwrap())
        .collect();

    let mple: Vec<f64> = reports.iter().map(|r| r.n_star_mple).collect();
    let mple_frozen = mple
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() <= 1e-9 * w[0]);

    let mle: Vec<f64> = reports.iter().map(|r| r.n_star_mle).collect();
    let mle_strictly_decreasing = mle.windows(2).all(|w| w[1] < w[0]);

    let lim = limiting_quantities(0.68, 3, 0.01).unwrap();
    let mple_limit_ok =
        (mple[3] - lim.n_star_mple_limit).abs() <= 1e-6 * lim.n_star_mple_limit;
    let mle_limit_ok = (mle[3] - lim.n_star_mle_limit).abs() <= 1e-6 * lim.n_star_mle_limit;

    let ok = mple_frozen && mle_strictly_decreasing && mple_limit_ok && mle_limit_ok;
    report(
        5,
        ok,
        &format!(
            "N*_MPLE = {mple:?} (frozen: {mple_frozen}); N*_MLE = {mle:?} \
             (strictly decreasing: {mle_strictly_decreasing}; the beta = 10 and 20 \
             maximizers both saturate at the largest f64 below 1); limits ok: \
             {mple_limit_ok}/{mle_limit_ok}"
        ),
        t0,
    );
}

#[test]
fn criterion_06_cw_pvalue_curve_p2() {
    let t0 = Instant::now();
    let config = CurveConfig {
        model: ModelKind::Cw,
        p: 2,
        beta0: 0.7,
        beta: 0.9,
        delta: 0.01,
        seed: SEED,
        replicates: 10_000,
        n_grid: (175..=375).collect(),
        statistic: Statistic::Mple,
    };
    let curve = pvalue_curve_cw(&config).unwrap();
    let n = curve.empirical_n;
    let ok = matches!(n, Some(n) if (240..=300).contains(&n));
    report(
        6,
        ok,
        &format!(
            "empirical N = {n:?} (want within [240, 300]; asymptotic theory {:.1})",
            curve.theoretical_n.unwrap_or(f64::NAN)
        ),
        t0,
    );
}

#[test]
fn criterion_07_cw_pvalue_curve_p3() {
    let t0 = Instant::now();
    let config = CurveConfig {
        model: ModelKind::Cw,
        p: 3,
        beta0: 0.68,
        beta: 0.9,
        delta: 0.01,
        seed: SEED,
        replicates: 10_000,
        n_grid: (575..=775).collect(),
        statistic: Statistic::Mple,
    };
    let curve = pvalue_curve_cw(&config).unwrap();
    let n = curve.empirical_n;
    let ok = matches!(n, Some(n) if (585..=680).contains(&n));
    report(
        7,
        ok,
        &format!(
            "empirical N = {n:?} (want within [585, 680]; asymptotic theory {:.1})",
            curve.theoretical_n.unwrap_or(f64::NAN)
        ),
        t0,
    );
}

#[test]
fn criterion_08_er_universality() {
    let t0 = Instant::now();
    let config = CurveConfig {
        model: ModelKind::Er {
            alpha: 1.0,
            glauber_steps: 100_000,
        },
        p: 2,
        beta0: 0.7,
        beta: 0.9,
        delta: 0.01,
        seed: SEED,
        replicates: 200,
        n_grid: (150..=350).step_by(5).collect(),
        statistic: Statistic::Mple,
    };
    let curve = pvalue_curve_er(&config).unwrap();
    let n = curve.empirical_n;
    // within +-15% of the theoretical 270
    let ok = matches!(n, Some(n) if (n as f64 - 270.0).abs() <= 0.15 * 270.0);
    report(
        8,
        ok,
        &format!("empirical N = {n:?} (want 270 +- 15% = [229.5, 310.5])"),
        t0,
    );
}

#[test]
fn criterion_09_oracle_equivalence() {
    let t0 = Instant::now();
    let mut ok = true;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);

    // exact pmf, Z, moments vs 2^n enumeration
    for n in [4usize, 8, 12] {
        for p in [2u32, 3] {
            for beta in [0.0, 0.5, 0.7, 1.0] {
                let d = build_dist(&ModelSpec::new(p, beta, n).unwrap()).unwrap();
                let e = enumerate_cw(n, beta, p);
                ok &= rel(d.log_z.exp(), e.z) <= 1e-10;
                for k in 0..=n {
                    ok &= rel(d.probs[k], e.probs[k]) <= 1e-10;
                }
                for order in 1..=4 {
                    ok &= (d.moment(order) - e.moment(order)).abs()
                        <= 1e-10 * e.moment(order).abs().max(1.0);
                }
            }
        }
    }

    // exact p-values vs enumeration at n = 12
    for p in [2u32, 3] {
        let e = enumerate_cw(12, 0.7, p);
        for k in 0..=12 {
            let t_obs = eta(e.support[k], p);
            let want = e.tail(|m| eta(m, p) >= t_obs);
            let got = exact_pvalue_cw(e.support[k], 0.7, p, 12, Statistic::Mple).unwrap();
            ok &= (got - want).abs() <= 1e-10;
        }
    }

    // ER Hamiltonian and local fields vs the closed forms on the complete
    // tensor, every configuration at n = 12
    for p in [2u32, 3] {
        let g = HyperGraph::complete_materialized(12, p);
        for mask in 0u64..(1 << 12) {
            let spins: Vec<i8> = (0..12)
                .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                .collect();
            let inst = HyperIsingInstance::new(Arc::clone(&g), spins).unwrap();
            let mean = inst.magnetization();
            ok &= rel(inst.hamiltonian(), 12.0 * mean.powi(p as i32)) <= 1e-10
                || (inst.hamiltonian().abs() < 1e-12 && mean == 0.0);
            ok &= (inst.local_field(5) - mean.powi(p as i32 - 1)).abs() <= 1e-10;
        }
    }

    let elapsed_ok = t0.elapsed().as_secs_f64() < 60.0;
    report(9, ok && elapsed_ok, "pmf/Z/moments/p-values/ER fields vs 2^n enumeration", t0);
}

#[test]
fn criterion_10_counting_identity() {
    let t0 = Instant::now();
    let mut ok = true;
    for p in [2u32, 3] {
        for n in 2..=8usize {
            let total = (n as u64).pow(p);
            for mask in 0u64..(1 << n) {
                let spins: Vec<i8> = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                    .collect();
                let mean = spins.iter().map(|&s| s as f64).sum::<f64>() / n as f64;
                let mut plus = 0u64;
                for id in 0..total {
                    let mut prod = 1i64;
                    let mut rem = id;
                    for _ in 0..p {
                        prod *= spins[(rem % n as u64) as usize] as i64;
                        rem /= n as u64;
                    }
                    if prod == 1 {
                        plus += 1;
                    }
                }
                let want = 0.5 * total as f64 * (1.0 + mean.powi(p as i32));
                ok &= (plus as f64 - want).abs() < 1e-9;
            }
        }
    }
    report(10, ok, "|Lambda_n(x)| = n^p (1 + mean^p)/2 for all configs, n <= 8", t0);
}

#[test]
fn criterion_11_ldp_convergence() {
    let t0 = Instant::now();
    let n_list = [200usize, 400, 800, 1600];
    let cases = [
        (0.0, 2u32, (0.5, 1.0)),
        (1.0, 2, (0.9, 0.99)),
        (0.7, 2, (0.9, 1.0)),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (beta, p, interval) in cases {
        let rows = ldp_convergence_table(beta, p, interval, &n_list).unwrap();
        let gaps: Vec<f64> = rows.iter().map(|r| r.gap.abs()).collect();
        let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
        let final_ok = gaps[3] <= 0.02;
        ok &= monotone && final_ok;
        detail.push_str(&format!(
            "(beta={beta}, {:?}): gaps {:.4}->{:.4} mono={monotone}; ",
            interval, gaps[0], gaps[3]
        ));
    }
    ok &= t0.elapsed().as_secs_f64() < 10.0;
    report(11, ok, &detail, t0);
}

#[test]
fn criterion_12_asymptotic_normality() {
    let t0 = Instant::now();
    let config = HistogramConfig {
        model: ModelKind::Cw,
        p: 4,
        beta: 0.75,
        n: 1000,
        replicates: 10_000,
        seed: SEED,
        statistic: Statistic::Mple,
        bins: 61,
    };
    let h = normality_histogram(&config).unwrap();
    let kept = (h.n_total - h.n_excluded) as f64;
    let se = (h.sample_var / kept).sqrt();
    let mean_ok = h.sample_mean.abs() <= 3.0 * se;
    let var_ok = (h.sample_var - h.overlay_var).abs() <= 0.15 * h.overlay_var;
    report(
        12,
        mean_ok && var_ok,
        &format!(
            "mean = {:.4} vs 3 SE = {:.4} (exact finite-n bias; see suite header); \
             var = {:.4} vs asymptotic {:.4} +-15%; excluded {} divergent",
            h.sample_mean,
            3.0 * se,
            h.sample_var,
            h.overlay_var,
            h.n_excluded
        ),
        t0,
    );
}

#[test]
fn criterion_13_concentration_diagnostic() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut worst = 0.0_f64;
    for s in 0..20u64 {
        let g = HyperGraph::generate(12, 2, 0.5, derive_seed(SEED, s)).unwrap();
        let r = concentration_check(&g, 1, 0).unwrap();
        ok &= r.exhaustive && r.passed;
        worst = worst.max(r.max_dev / r.bound);
    }
    report(
        13,
        ok,
        &format!("exhaustive sup-deviation <= 3 gamma_n on 20 graphs (worst ratio {worst:.3})"),
        t0,
    );
}

// Exercised by criterion 9 as well; kept separate so the ER reduction of the
// pseudolikelihood estimator is visible in the acceptance run.
#[test]
fn acceptance_er_mple_reduces_to_cw() {
    let g = HyperGraph::complete_materialized(10, 3);
    let mut checked = 0;
    for mask in [1u64, 7, 85, 511, 1022, 1023] {
        let spins: Vec<i8> = (0..10)
            .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        let inst = HyperIsingInstance::new(Arc::clone(&g), spins).unwrap();
        let er = mple_er(&inst).unwrap();
        let mean = inst.magnetization();
        let cw_value = eta(mean, 3).max(0.0);
        if er.boundary == Boundary::Interior {
            assert!((er.value - cw_value).abs() <= 1e-8);
            checked += 1;
        }
    }
    assert!(checked >= 2);
}

//! Reproduction drivers: exact p-values, average-p-value-vs-n curves,
//! empirical optimal sample sizes, LDP rate convergence and
//! asymptotic-normality histograms.
//!
//! All replicate loops are parallel over deterministic per-replicate seeds
//! derived from the master seed, so output is independent of thread count.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bahadur;
use crate::curie_weiss::{build_dist, ldp_rate_check, MagnetizationDist};
use crate::er_model::{HyperGraph, HyperIsingInstance, DEFAULT_GLAUBER_STEPS};
use crate::error::{Error, Result};
use crate::estimators::{self, Boundary};
use crate::landscape::{self, ModelSpec};
use crate::math::derive_seed;

/// Which estimator drives the test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mple,
    Mle,
}

/// Model family for a p-value curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelKind {
    Cw,
    Er {
        alpha: f64,
        #[serde(default = "default_glauber_steps")]
        glauber_steps: usize,
    },
}

fn default_glauber_steps() -> usize {
    DEFAULT_GLAUBER_STEPS
}

fn default_statistic() -> Statistic {
    Statistic::Mple
}

/// Configuration of one average-p-value-vs-n experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveConfig {
    #[serde(flatten)]
    pub model: ModelKind,
    pub p: u32,
    /// Null parameter the p-values are computed against.
    pub beta0: f64,
    /// Parameter the samples are drawn under (the alternative).
    pub beta: f64,
    /// Significance level defining the empirical N(delta).
    pub delta: f64,
    pub seed: u64,
    pub replicates: usize,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_statistic")]
    pub statistic: Statistic,
}

/// One grid row of a p-value curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PValueRow {
    pub n: usize,
    pub mean_pvalue: f64,
    pub median_pvalue: f64,
    pub sd_pvalue: f64,
    pub n_replicates: usize,
}

/// An average-p-value curve with its empirical and theoretical sample sizes.
#[derive(Debug, Clone, Serialize)]
pub struct PValueCurve {
    pub config: CurveConfig,
    pub rows: Vec<PValueRow>,
    /// Smallest grid n from which the mean p-value stays <= delta; `None`
    /// if that never happens on the grid.
    pub empirical_n: Option<usize>,
    /// N* from the slope formulas; `None` when beta <= beta0.
    pub theoretical_n: Option<f64>,
}

/// Tail probabilities of a test statistic under an exact null law: for each
/// support point, P(stat >= stat_k), with ties grouped.
pub struct PvalueTable {
    /// Distinct statistic values, ascending.
    stats: Vec<f64>,
    /// P(stat >= stats[i]).
    tail: Vec<f64>,
    /// P(stat >= stat(m_k)) per support index k.
    pub by_index: Vec<f64>,
}

impl PvalueTable {
    pub fn new(null: &MagnetizationDist, statistic: Statistic) -> Self {
        let p = null.spec.p;
        let stat_of = |m: f64| match statistic {
            Statistic::Mple => landscape::eta(m, p),
            Statistic::Mle => m.powi(p as i32),
        };
        let n = null.n();
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| {
            stat_of(null.support[a])
                .partial_cmp(&stat_of(null.support[b]))
                .unwrap()
        });
        let mut stats = Vec::new();
        let mut tail = Vec::new();
        let mut by_index = vec![0.0; n + 1];
        let mut acc = 0.0;
        let mut i = order.len();
        while i > 0 {
            // walk one tie group (equal statistic values) from the top
            let hi = i;
            let s = stat_of(null.support[order[hi - 1]]);
            let mut lo = hi;
            while lo > 0 && stat_of(null.support[order[lo - 1]]) == s {
                lo -= 1;
            }
            for &k in &order[lo..hi] {
                acc += null.probs[k];
            }
            for &k in &order[lo..hi] {
                by_index[k] = acc;
            }
            stats.push(s);
            tail.push(acc);
            i = lo;
        }
        stats.reverse();
        tail.reverse();
        PvalueTable {
            stats,
            tail,
            by_index,
        }
    }

    /// P(stat >= t) for an arbitrary observed value. Inclusive, with a small
    /// tolerance so that observed statistics carrying root-finding noise
    /// (~1e-9) still count their own support atom as a tie; support spacing
    /// is many orders of magnitude wider.
    pub fn pvalue_for_stat(&self, t: f64) -> f64 {
        let threshold = if t.is_finite() {
            t - 1e-7 * t.abs().max(1.0)
        } else {
            t
        };
        let i = self.stats.partition_point(|&s| s < threshold);
        if i == self.stats.len() {
            0.0
        } else {
            self.tail[i]
        }
    }
}

/// Exact p-value P_{beta0}(stat(X-bar) >= stat(observed_mean)) under the
/// Curie-Weiss null, by exact summation over the support. The inequality is
/// inclusive; on a discrete support this is the conservative convention.
pub fn exact_pvalue_cw(
    observed_mean: f64,
    beta0: f64,
    p: u32,
    n: usize,
    statistic: Statistic,
) -> Result<f64> {
    let null = build_dist(&ModelSpec::new(p, beta0, n)?)?;
    let k = null.index_of(observed_mean).ok_or(Error::Domain {
        name: "observed_mean",
        value: observed_mean,
        domain: "the support lattice M_n",
    })?;
    Ok(PvalueTable::new(&null, statistic).by_index[k])
}

fn summarize(n: usize, pvs: &mut [f64]) -> PValueRow {
    let count = pvs.len();
    let mean = pvs.iter().sum::<f64>() / count as f64;
    let var = pvs.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (count.max(2) - 1) as f64;
    pvs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if count % 2 == 1 {
        pvs[count / 2]
    } else {
        0.5 * (pvs[count / 2 - 1] + pvs[count / 2])
    };
    PValueRow {
        n,
        mean_pvalue: mean,
        median_pvalue: median,
        sd_pvalue: var.sqrt(),
        n_replicates: count,
    }
}

fn empirical_n(rows: &[PValueRow], delta: f64) -> Option<usize> {
    let mut result = None;
    for row in rows.iter().rev() {
        if row.mean_pvalue <= delta {
            result = Some(row.n);
        } else {
            break;
        }
    }
    result
}

fn theoretical_n(config: &CurveConfig) -> Option<f64> {
    if config.beta <= config.beta0 {
        return None;
    }
    bahadur::optimal_sample_sizes(config.beta0, config.beta, config.p, config.delta)
        .ok()
        .map(|r| match config.statistic {
            Statistic::Mple => r.n_star_mple,
            Statistic::Mle => r.n_star_mle,
        })
}

/// Average p-value of the exact-sampling Curie-Weiss test across the n-grid.
pub fn pvalue_curve_cw(config: &CurveConfig) -> Result<PValueCurve> {
    if !matches!(config.model, ModelKind::Cw) {
        return Err(Error::InvalidSpec("pvalue_curve_cw requires a CW config".into()));
    }
    validate_curve(config)?;
    let rows: Result<Vec<PValueRow>> = config
        .n_grid
        .par_iter()
        .map(|&n| {
            let null = build_dist(&ModelSpec::new(config.p, config.beta0, n)?)?;
            let alt = build_dist(&ModelSpec::new(config.p, config.beta, n)?)?;
            let table = PvalueTable::new(&null, config.statistic);
            let draws = alt.sample_indices(config.replicates, derive_seed(config.seed, n as u64));
            let mut pvs: Vec<f64> = draws.into_iter().map(|k| table.by_index[k]).collect();
            Ok(summarize(n, &mut pvs))
        })
        .collect();
    let rows = rows?;
    Ok(PValueCurve {
        empirical_n: empirical_n(&rows, config.delta),
        theoretical_n: theoretical_n(config),
        config: config.clone(),
        rows,
    })
}

/// Average p-value of the MPL test on Erdos-Renyi Glauber samples, computed
/// against the exact Curie-Weiss null law of the statistic.
pub fn pvalue_curve_er(config: &CurveConfig) -> Result<PValueCurve> {
    let (alpha, steps) = match config.model {
        ModelKind::Er {
            alpha,
            glauber_steps,
        } => (alpha, glauber_steps),
        ModelKind::Cw => {
            return Err(Error::InvalidSpec("pvalue_curve_er requires an ER config".into()))
        }
    };
    if config.statistic != Statistic::Mple {
        return Err(Error::InvalidSpec(
            "the ER curve uses the MPL statistic; the ML estimator is not \
             computable from a single hypergraph sample"
                .into(),
        ));
    }
    validate_curve(config)?;
    let rows: Result<Vec<PValueRow>> = config
        .n_grid
        .par_iter()
        .map(|&n| {
            let n_seed = derive_seed(config.seed, n as u64);
            let graph = HyperGraph::generate(n, config.p, alpha, derive_seed(n_seed, 0))?;
            let null = build_dist(&ModelSpec::new(config.p, config.beta0, n)?)?;
            let table = PvalueTable::new(&null, config.statistic);
            let mut pvs: Vec<f64> = (0..config.replicates)
                .into_par_iter()
                .map(|r| {
                    let spin_seed = derive_seed(n_seed, 2 * r as u64 + 1);
                    let chain_seed = derive_seed(n_seed, 2 * r as u64 + 2);
                    let mut inst = HyperIsingInstance::random(Arc::clone(&graph), spin_seed);
                    inst.glauber_sweep(config.beta, steps, chain_seed);
                    let est = estimators::mple_er(&inst)?;
                    Ok(table.pvalue_for_stat(est.value))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(summarize(n, &mut pvs))
        })
        .collect();
    let rows = rows?;
    Ok(PValueCurve {
        empirical_n: empirical_n(&rows, config.delta),
        theoretical_n: theoretical_n(config),
        config: config.clone(),
        rows,
    })
}

fn validate_curve(config: &CurveConfig) -> Result<()> {
    if config.replicates == 0 {
        return Err(Error::InvalidSpec("replicates must be >= 1".into()));
    }
    if config.n_grid.is_empty() || config.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec("n_grid must be ascending and nonempty".into()));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(Error::Domain {
            name: "delta",
            value: config.delta,
            domain: "(0, 1)",
        });
    }
    Ok(())
}

/// Configuration of a sqrt(n)(beta-hat - beta) histogram run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramConfig {
    #[serde(flatten)]
    pub model: ModelKind,
    pub p: u32,
    pub beta: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_statistic")]
    pub statistic: Statistic,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_bins() -> usize {
    61
}

/// Binned law of sqrt(n)(beta-hat - beta) with the limiting-normal overlay
/// parameters.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub config: HistogramConfig,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub sample_mean: f64,
    pub sample_var: f64,
    /// Overlay: N(0, asymptotic_variance).
    pub overlay_mean: f64,
    pub overlay_var: f64,
    /// Replicates whose estimate diverged (|X-bar| = 1) and were excluded.
    pub n_excluded: usize,
    pub n_total: usize,
}

/// Histogram of the centered, scaled estimator under the alternative.
pub fn normality_histogram(config: &HistogramConfig) -> Result<Histogram> {
    if config.replicates == 0 || config.bins == 0 {
        return Err(Error::InvalidSpec("replicates and bins must be >= 1".into()));
    }
    let stats: Vec<f64> = match config.model {
        ModelKind::Cw => {
            let dist = build_dist(&ModelSpec::new(config.p, config.beta, config.n)?)?;
            let draws = dist.sample_indices(config.replicates, config.seed);
            // estimate per support index, computed once per index seen
            let mut cache: Vec<Option<f64>> = vec![None; config.n + 1];
            let mut out = Vec::with_capacity(draws.len());
            for k in draws {
                let est = match cache[k] {
                    Some(v) => v,
                    None => {
                        let m = dist.support[k];
                        let e = match config.statistic {
                            Statistic::Mple => estimators::mple_cw(m, config.p)?,
                            Statistic::Mle => estimators::mle_cw(m, config.p, config.n)?,
                        };
                        let v = if e.boundary == Boundary::Diverged {
                            f64::INFINITY
                        } else {
                            e.value
                        };
                        cache[k] = Some(v);
                        v
                    }
                };
                out.push(est);
            }
            out
        }
        ModelKind::Er {
            alpha,
            glauber_steps,
        } => {
            let graph = HyperGraph::generate(
                config.n,
                config.p,
                alpha,
                derive_seed(config.seed, 0),
            )?;
            (0..config.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut inst = HyperIsingInstance::random(
                        Arc::clone(&graph),
                        derive_seed(config.seed, 2 * r as u64 + 1),
                    );
                    inst.glauber_sweep(
                        config.beta,
                        glauber_steps,
                        derive_seed(config.seed, 2 * r as u64 + 2),
                    );
                    estimators::mple_er(&inst).map(|e| e.value)
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };

    let sqrt_n = (config.n as f64).sqrt();
    let values: Vec<f64> = stats
        .iter()
        .filter(|v| v.is_finite())
        .map(|&b| sqrt_n * (b - config.beta))
        .collect();
    let n_excluded = stats.len() - values.len();
    if values.is_empty() {
        return Err(Error::NonConvergence(
            "every replicate diverged; nothing to bin".into(),
        ));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
    } else {
        0.0
    };
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let (lo, hi) = if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let bins = config.bins;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in &values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    Ok(Histogram {
        overlay_mean: 0.0,
        overlay_var: estimators::asymptotic_variance(config.beta, config.p)?,
        config: config.clone(),
        bin_edges,
        counts,
        sample_mean: mean,
        sample_var: var,
        n_excluded,
        n_total: stats.len(),
    })
}

/// One row of the LDP convergence table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LdpRow {
    pub n: usize,
    /// (1/n) log P(X-bar in (a, b)).
    pub rate: f64,
    /// sup_(a,b) H - sup_[-1,1] H.
    pub limit: f64,
    pub gap: f64,
}

/// Finite-n LDP rates with their limiting value appended.
pub fn ldp_convergence_table(
    beta: f64,
    p: u32,
    interval: (f64, f64),
    n_list: &[usize],
) -> Result<Vec<LdpRow>> {
    let rates = ldp_rate_check(beta, p, interval, n_list)?;
    let (_, sup_int) = landscape::sup_h_on_interval(beta, p, interval.0, interval.1)?;
    let (_, sup_full) = landscape::sup_h(beta, p)?;
    let limit = sup_int - sup_full;
    Ok(rates
        .into_iter()
        .map(|(n, rate)| LdpRow {
            n,
            rate,
            limit,
            gap: rate - limit,
        })
        .collect())
}

/// CSV for a p-value curve, prefixed by a one-line JSON provenance header.
/// Byte-identical for identical (config, seed).
pub fn curve_to_csv(curve: &PValueCurve) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# config: {}",
        serde_json::to_string(&curve.config).expect("config serializes")
    );
    out.push_str("n,mean_pvalue,sd_pvalue,n_replicates\n");
    for r in &curve.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.n,
            bahadur::fmt_ext(r.mean_pvalue),
            bahadur::fmt_ext(r.sd_pvalue),
            r.n_replicates
        );
    }
    out
}

/// JSON sidecar for a p-value curve (config, empirical/theoretical N, seed,
/// runtime supplied by the caller).
pub fn curve_sidecar_json(curve: &PValueCurve, runtime_seconds: f64) -> String {
    let value = serde_json::json!({
        "config": curve.config,
        "empirical_n": curve.empirical_n,
        "theoretical_n": curve.theoretical_n,
        "seed": curve.config.seed,
        "runtime_seconds": runtime_seconds,
    });
    serde_json::to_string_pretty(&value).expect("sidecar serializes")
}

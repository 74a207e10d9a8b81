//! Command-line interface: threshold/landscape queries, efficiency reports,
//! samplers and experiment drivers.
//!
//! Exit codes: 0 success, 1 usage, 2 numeric precondition, 3 nonconvergence,
//! 4 budget exceeded.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use tensor_ising::bahadur::{self, fmt_ext, EfficiencyReport};
use tensor_ising::curie_weiss;
use tensor_ising::er_model::{HyperGraph, HyperIsingInstance, DEFAULT_GLAUBER_STEPS};
use tensor_ising::error::Error as CoreError;
use tensor_ising::experiments::{
    self, CurveConfig, Histogram, HistogramConfig, ModelKind, PValueCurve, Statistic,
};
use tensor_ising::landscape::{self, ModelSpec};
use tensor_ising::math::derive_seed;

const EXIT_USAGE: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(
    name = "tensor-ising",
    about = "Tensor Curie-Weiss / Erdos-Renyi Ising models: exact laws, \
             samplers, estimators and Bahadur efficiency calculus",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Significant digits for human-readable numeric output.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,

    /// Worker threads for replicated experiments (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Cw,
    Er,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatisticArg {
    Mple,
    Mle,
}

impl From<StatisticArg> for Statistic {
    fn from(s: StatisticArg) -> Self {
        match s {
            StatisticArg::Mple => Statistic::Mple,
            StatisticArg::Mle => Statistic::Mle,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the estimation threshold beta*(p).
    Threshold {
        #[arg(long)]
        p: u32,
    },
    /// Print the landscape summary at (beta, p): threshold, maximizers, H(m_*).
    Landscape {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        beta: f64,
    },
    /// Bahadur slopes, asymptotic optimal sample sizes and ARE for one query.
    Efficiency {
        #[arg(long)]
        beta0: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// CSV of efficiency reports over grids of beta0, beta, p.
    Sweep {
        /// Comma list of interaction orders, e.g. "2,3,4".
        #[arg(long, value_delimiter = ',')]
        p_list: Vec<u32>,
        /// Null grid: a value, comma list, or start:stop:step range.
        #[arg(long)]
        beta0_grid: String,
        /// Alternative grid, same syntax; pairs with beta <= beta0 are skipped.
        #[arg(long)]
        beta_grid: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw samples: exact for CW, Glauber dynamics for ER.
    Simulate(SimulateArgs),
    /// Average-p-value-vs-n experiment from a JSON config file.
    PvalueCurve {
        /// JSON file holding a curve configuration.
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config replicate count.
        #[arg(long)]
        replicates: Option<usize>,
        /// CSV path; a .json sidecar is written next to it.
        #[arg(long)]
        output: PathBuf,
    },
    /// Finite-n large-deviation rates against their limit.
    Ldp {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: u32,
        /// Open interval "a:b" within [-1, 1].
        #[arg(long)]
        interval: String,
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Histogram of sqrt(n)(beta-hat - beta) under the alternative.
    Histogram {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        replicates: usize,
        #[arg(long, value_enum, default_value_t = StatisticArg::Mple)]
        statistic: StatisticArg,
        #[arg(long, default_value_t = 61)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// ER only: hyperedge probability.
        #[arg(long)]
        alpha: Option<f64>,
        /// ER only: Glauber iterations per sample.
        #[arg(long, default_value_t = DEFAULT_GLAUBER_STEPS)]
        glauber_steps: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    p: u32,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    n: usize,
    /// Number of samples to draw.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include the full +-1 configuration per sample.
    #[arg(long)]
    spins: bool,
    /// ER only: hyperedge probability.
    #[arg(long)]
    alpha: Option<f64>,
    /// ER only: Glauber iterations per sample.
    #[arg(long, default_value_t = DEFAULT_GLAUBER_STEPS)]
    glauber_steps: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Core(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                CoreError::InvalidSpec(_) | CoreError::Parse(_) | CoreError::Io(_) => EXIT_USAGE,
                CoreError::Domain { .. }
                | CoreError::NoInteriorMaximizer { .. }
                | CoreError::WindowUndefined => EXIT_PRECONDITION,
                CoreError::NonConvergence(_) | CoreError::Inconsistent { .. } => {
                    EXIT_NONCONVERGENCE
                }
                CoreError::BudgetExceeded { .. } => EXIT_BUDGET,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_or_print(output: Option<&Path>, content: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, content).map_err(|e| CliError::Core(e.into())),
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn require_p(p: u32) -> Result<(), CliError> {
    if p < 2 {
        return Err(CliError::Usage(format!(
            "p = {p} violates the precondition p >= 2"
        )));
    }
    Ok(())
}

/// JSON value for an f64, spelling non-finite values "+inf"/"-inf".
fn num_or_inf(v: f64) -> serde_json::Value {
    match serde_json::Number::from_f64(v) {
        Some(n) => serde_json::Value::Number(n),
        None => serde_json::Value::String(fmt_ext(v)),
    }
}

fn report_json(r: &EfficiencyReport) -> serde_json::Value {
    serde_json::json!({
        "beta0": r.beta0,
        "beta": r.beta,
        "p": r.p,
        "delta": r.delta,
        "c_mple": num_or_inf(r.c_mple),
        "c_mle": num_or_inf(r.c_mle),
        "n_star_mple": num_or_inf(r.n_star_mple),
        "n_star_mle": num_or_inf(r.n_star_mle),
        "are_ml_vs_mpl": num_or_inf(r.are_ml_vs_mpl),
        "near_threshold": r.near_threshold,
        "debug": {
            "c_mple_direct": num_or_inf(r.debug.c_mple_direct),
            "c_mle_direct": num_or_inf(r.debug.c_mle_direct),
        },
    })
}

/// Parse "v", "a,b,c" or "start:stop:step" into an ascending list.
fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |_| CliError::Usage(format!("cannot parse grid '{spec}'"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "range grid must be start:stop:step, got '{spec}'"
            )));
        }
        let start: f64 = parts[0].trim().parse().map_err(bad)?;
        let stop: f64 = parts[1].trim().parse().map_err(bad)?;
        let step: f64 = parts[2].trim().parse().map_err(bad)?;
        if step <= 0.0 {
            return Err(CliError::Usage("grid step must be positive".into()));
        }
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let v = start + step * i as f64;
            if v > stop + 1e-12 {
                break;
            }
            out.push(v);
            i += 1;
        }
        Ok(out)
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(bad))
            .collect()
    }
}

fn parse_interval(spec: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "interval must be a:b, got '{spec}'"
        )));
    }
    let bad = |_| CliError::Usage(format!("cannot parse interval '{spec}'"));
    Ok((
        parts[0].trim().parse().map_err(bad)?,
        parts[1].trim().parse().map_err(bad)?,
    ))
}

/// Curve config file: n_grid may be given explicitly or as an inclusive
/// [start, stop, step] range.
#[derive(Deserialize)]
struct CurveConfigFile {
    model: String,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    glauber_steps: Option<usize>,
    p: u32,
    beta0: f64,
    beta: f64,
    delta: f64,
    #[serde(default)]
    seed: u64,
    /// Defaults to 10^4 for cw and 10^3 for er.
    #[serde(default)]
    replicates: Option<usize>,
    #[serde(default)]
    n_grid: Option<Vec<usize>>,
    #[serde(default)]
    n_range: Option<[usize; 3]>,
    #[serde(default)]
    statistic: Option<String>,
}

impl CurveConfigFile {
    fn resolve(self) -> Result<CurveConfig, CliError> {
        let model = match self.model.as_str() {
            "cw" => ModelKind::Cw,
            "er" => ModelKind::Er {
                alpha: self.alpha.ok_or_else(|| {
                    CliError::Usage("er model requires an 'alpha' field".into())
                })?,
                glauber_steps: self.glauber_steps.unwrap_or(DEFAULT_GLAUBER_STEPS),
            },
            other => {
                return Err(CliError::Usage(format!(
                    "model must be 'cw' or 'er', got '{other}'"
                )))
            }
        };
        let n_grid = match (self.n_grid, self.n_range) {
            (Some(grid), None) => grid,
            (None, Some([start, stop, step])) => {
                if step == 0 {
                    return Err(CliError::Usage("n_range step must be positive".into()));
                }
                (start..=stop).step_by(step).collect()
            }
            _ => {
                return Err(CliError::Usage(
                    "config needs exactly one of n_grid or n_range".into(),
                ))
            }
        };
        let statistic = match self.statistic.as_deref() {
            None | Some("mple") => Statistic::Mple,
            Some("mle") => Statistic::Mle,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "statistic must be 'mple' or 'mle', got '{other}'"
                )))
            }
        };
        let replicates = self.replicates.unwrap_or(match model {
            ModelKind::Cw => 10_000,
            ModelKind::Er { .. } => 1_000,
        });
        Ok(CurveConfig {
            model,
            p: self.p,
            beta0: self.beta0,
            beta: self.beta,
            delta: self.delta,
            seed: self.seed,
            replicates,
            n_grid,
            statistic,
        })
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let prec = cli.precision;
    match cli.command {
        Command::Threshold { p } => {
            require_p(p)?;
            let t = landscape::find_beta_star(p)?;
            println!("{:.*}", prec, t.beta_star);
            Ok(())
        }
        Command::Landscape { p, beta } => {
            require_p(p)?;
            let t = landscape::find_beta_star(p)?;
            let l = landscape::find_m_star(&ModelSpec::asymptotic(p, beta)?)?;
            println!("beta_star = {:.*}", prec, t.beta_star);
            println!("m_star = {:.*}", prec, l.m_star);
            match l.m_under {
                Some(u) => println!("m_under = {:.*}", prec, u),
                None => println!("m_under = none"),
            }
            println!("h_at_m_star = {:.*}", prec, l.h_at_m_star);
            Ok(())
        }
        Command::Efficiency {
            beta0,
            beta,
            p,
            delta,
            format,
            output,
        } => {
            require_p(p)?;
            let r = bahadur::optimal_sample_sizes(beta0, beta, p, delta)?;
            let content = match format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&report_json(&r)).expect("report serializes")
                ),
                Format::Csv => format!("{}\n{}\n", EfficiencyReport::CSV_HEADER, r.to_csv_row()),
            };
            write_or_print(output.as_deref(), &content)
        }
        Command::Sweep {
            p_list,
            beta0_grid,
            beta_grid,
            delta,
            output,
        } => {
            let beta0s = parse_grid(&beta0_grid)?;
            let betas = parse_grid(&beta_grid)?;
            let mut rows = Vec::new();
            for &p in &p_list {
                require_p(p)?;
                for &beta0 in &beta0s {
                    for &beta in &betas {
                        if beta <= beta0 {
                            continue;
                        }
                        rows.push(bahadur::optimal_sample_sizes(beta0, beta, p, delta)?);
                    }
                }
            }
            let mut content = String::new();
            content.push_str(EfficiencyReport::CSV_HEADER);
            content.push('\n');
            for row in &rows {
                content.push_str(&row.to_csv_row());
                content.push('\n');
            }
            write_or_print(output.as_deref(), &content)
        }
        Command::Simulate(args) => simulate(args),
        Command::PvalueCurve {
            config,
            seed,
            replicates,
            output,
        } => {
            let raw = fs::read_to_string(&config).map_err(CoreError::from)?;
            let file: CurveConfigFile = serde_json::from_str(&raw)
                .map_err(|e| CliError::Usage(format!("bad config file: {e}")))?;
            let mut cfg = file.resolve()?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = replicates {
                cfg.replicates = r;
            }
            let started = Instant::now();
            let curve: PValueCurve = match cfg.model {
                ModelKind::Cw => experiments::pvalue_curve_cw(&cfg)?,
                ModelKind::Er { .. } => experiments::pvalue_curve_er(&cfg)?,
            };
            let runtime = started.elapsed().as_secs_f64();
            fs::write(&output, experiments::curve_to_csv(&curve)).map_err(CoreError::from)?;
            let sidecar = output.with_extension("json");
            fs::write(
                &sidecar,
                experiments::curve_sidecar_json(&curve, runtime),
            )
            .map_err(CoreError::from)?;
            eprintln!(
                "wrote {} and {} (empirical_n = {}, theoretical_n = {})",
                output.display(),
                sidecar.display(),
                curve
                    .empirical_n
                    .map(|n| n.to_string())
                    .unwrap_or_else(|| "+inf".into()),
                curve
                    .theoretical_n
                    .map(fmt_ext)
                    .unwrap_or_else(|| "undefined".into()),
            );
            Ok(())
        }
        Command::Ldp {
            beta,
            p,
            interval,
            n_list,
            output,
        } => {
            require_p(p)?;
            let (a, b) = parse_interval(&interval)?;
            let rows = experiments::ldp_convergence_table(beta, p, (a, b), &n_list)?;
            let mut content = format!(
                "# config: {}\n",
                serde_json::json!({
                    "beta": beta, "p": p, "interval": [a, b], "n_list": n_list,
                })
            );
            content.push_str("n,rate,limit,gap\n");
            for r in rows {
                content.push_str(&format!(
                    "{},{},{},{}\n",
                    r.n,
                    fmt_ext(r.rate),
                    fmt_ext(r.limit),
                    fmt_ext(r.gap)
                ));
            }
            write_or_print(output.as_deref(), &content)
        }
        Command::Histogram {
            model,
            p,
            beta,
            n,
            replicates,
            statistic,
            bins,
            seed,
            alpha,
            glauber_steps,
            output,
        } => {
            require_p(p)?;
            let model = match model {
                ModelArg::Cw => ModelKind::Cw,
                ModelArg::Er => ModelKind::Er {
                    alpha: alpha
                        .ok_or_else(|| CliError::Usage("--alpha is required for er".into()))?,
                    glauber_steps,
                },
            };
            let config = HistogramConfig {
                model,
                p,
                beta,
                n,
                replicates,
                seed,
                statistic: statistic.into(),
                bins,
            };
            let h = experiments::normality_histogram(&config)?;
            write_or_print(output.as_deref(), &histogram_csv(&h))
        }
    }
}

fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# config: {}\n",
        serde_json::to_string(&h.config).expect("config serializes")
    ));
    out.push_str(&format!(
        "# sample_mean: {}, sample_var: {}, overlay_mean: {}, overlay_var: {}, n_excluded: {}, n_total: {}\n",
        fmt_ext(h.sample_mean),
        fmt_ext(h.sample_var),
        fmt_ext(h.overlay_mean),
        fmt_ext(h.overlay_var),
        h.n_excluded,
        h.n_total,
    ));
    out.push_str("bin_lo,bin_hi,count\n");
    for (i, &c) in h.counts.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_ext(h.bin_edges[i]),
            fmt_ext(h.bin_edges[i + 1]),
            c
        ));
    }
    out
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    require_p(args.p)?;
    let mut content = String::new();
    match args.model {
        ModelArg::Cw => {
            let spec = ModelSpec::new(args.p, args.beta, args.n)?;
            let dist = curie_weiss::build_dist(&spec)?;
            content.push_str(&format!(
                "# model: cw, p: {}, beta: {}, n: {}, count: {}, seed: {}\n",
                args.p, args.beta, args.n, args.count, args.seed
            ));
            push_sample_header(&mut content, args.spins);
            if args.spins {
                for (i, s) in curie_weiss::sample(&dist, args.count, args.seed)
                    .iter()
                    .enumerate()
                {
                    content.push_str(&format!(
                        "{},{},{}\n",
                        i,
                        fmt_ext(s.mean),
                        spin_string(&s.spins)
                    ));
                }
            } else {
                for (i, m) in dist
                    .sample_means(args.count, args.seed)
                    .iter()
                    .enumerate()
                {
                    content.push_str(&format!("{},{}\n", i, fmt_ext(*m)));
                }
            }
        }
        ModelArg::Er => {
            let alpha = args
                .alpha
                .ok_or_else(|| CliError::Usage("--alpha is required for er".into()))?;
            let graph = HyperGraph::generate(args.n, args.p, alpha, derive_seed(args.seed, 0))?;
            content.push_str(&format!(
                "# model: er, p: {}, beta: {}, n: {}, alpha: {}, glauber_steps: {}, count: {}, seed: {}\n",
                args.p, args.beta, args.n, alpha, args.glauber_steps, args.count, args.seed
            ));
            push_sample_header(&mut content, args.spins);
            for r in 0..args.count {
                let mut inst = HyperIsingInstance::random(
                    Arc::clone(&graph),
                    derive_seed(args.seed, 2 * r as u64 + 1),
                );
                inst.glauber_sweep(
                    args.beta,
                    args.glauber_steps,
                    derive_seed(args.seed, 2 * r as u64 + 2),
                );
                if args.spins {
                    content.push_str(&format!(
                        "{},{},{}\n",
                        r,
                        fmt_ext(inst.magnetization()),
                        spin_string(inst.spins())
                    ));
                } else {
                    content.push_str(&format!("{},{}\n", r, fmt_ext(inst.magnetization())));
                }
            }
        }
    }
    write_or_print(args.output.as_deref(), &content)
}

fn push_sample_header(content: &mut String, spins: bool) {
    if spins {
        content.push_str("replicate,mean,spins\n");
    } else {
        content.push_str("replicate,mean\n");
    }
}

fn spin_string(spins: &[i8]) -> String {
    spins
        .iter()
        .map(|&s| if s == 1 { '+' } else { '-' })
        .collect()
}

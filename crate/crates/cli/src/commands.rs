//! Subcommand implementations.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use digitrange::codec::DigitWord;
use digitrange::linear::build_schedule;
use digitrange::occupancy::monte_carlo_law;
use digitrange::rng::substream;
use digitrange::sublinear::{build_sublinear_schedule, ProfileSpec};
use digitrange::tilt::{bound_chain, cylinder_sum_exact, cylinder_sum_mc, BoundChain, CylinderSumRecord, DigitLaw};
use digitrange::verify::{run_suite, Suite};
use digitrange::weights::PotterReport;
use digitrange::Rate;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CliError, Format, RunConfig};
use crate::output::{opt, write_csv, write_json, write_words};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn unit_rate(s: &str) -> Result<Rate, CliError> {
    let r: Rate = s.parse().map_err(|e| usage(format!("theta: {e}")))?;
    if r.num() == 0 || r.num() > r.den() {
        return Err(usage(format!("theta = {r} outside (0, 1]")));
    }
    Ok(r)
}

// ---------------------------------------------------------------- weights

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Emit p_k and Σ_{j≤k} p_j for k = 1..=K
    #[arg(long, default_value_t = 10)]
    k_max: u64,
    /// Solve Σ_{k≤K} p_k^s = 1 for each listed K
    #[arg(long, value_delimiter = ',')]
    solve_s: Vec<u64>,
    /// Tail sums Σ_{k≥M} p_k for each listed M
    #[arg(long, value_delimiter = ',')]
    tail: Vec<u64>,
    /// Also report Σ_{k≥M} p_k^s for this s
    #[arg(long)]
    tilt_s: Option<f64>,
    /// Empirical Potter scan for this ε
    #[arg(long)]
    potter: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    scan_limit: u64,
}

#[derive(Serialize)]
struct WeightRow {
    k: u64,
    p: f64,
    cumulative: f64,
}

#[derive(Serialize)]
struct KeyValue {
    k: u64,
    value: f64,
}

#[derive(Serialize)]
struct WeightsReport {
    model: digitrange::ModelSpec,
    rows: Vec<WeightRow>,
    s_k: Vec<KeyValue>,
    tail: Vec<KeyValue>,
    tilted_tail: Vec<KeyValue>,
    tilt_s: Option<f64>,
    potter: Option<PotterReport>,
}

pub fn weights(cfg: &RunConfig, a: WeightsArgs) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    if a.k_max == 0 || a.solve_s.contains(&0) || a.tail.contains(&0) {
        return Err(usage("K and M must be positive"));
    }
    let rows: Vec<WeightRow> =
        (1..=a.k_max).map(|k| WeightRow { k, p: model.p(k), cumulative: model.left_endpoint(k + 1) }).collect();
    let s_k = a.solve_s.iter().map(|&k| Ok(KeyValue { k, value: model.solve_s_k(k)? })).collect::<Result<Vec<_>, CliError>>()?;
    let tail = a.tail.iter().map(|&m| Ok(KeyValue { k: m, value: model.tail_sum(m)? })).collect::<Result<Vec<_>, CliError>>()?;
    let tilted_tail = match a.tilt_s {
        Some(s) => a
            .tail
            .iter()
            .map(|&m| Ok(KeyValue { k: m, value: model.tilted_tail_sum(m, s).map_err(|e| usage(e.to_string()))? }))
            .collect::<Result<Vec<_>, CliError>>()?,
        None => Vec::new(),
    };
    let potter = a.potter.map(|eps| model.potter_scan(eps, a.scan_limit)).transpose()?;
    let report = WeightsReport { model: cfg.model.clone(), rows, s_k, tail, tilted_tail, tilt_s: a.tilt_s, potter };
    match cfg.format {
        Format::Json => write_json(cfg.out.as_deref(), &report),
        Format::Csv => {
            let mut out: Vec<[String; 3]> = Vec::new();
            for r in &report.rows {
                out.push(["p".into(), r.k.to_string(), r.p.to_string()]);
                out.push(["cumulative".into(), r.k.to_string(), r.cumulative.to_string()]);
            }
            for kv in &report.s_k {
                out.push(["s_K".into(), kv.k.to_string(), kv.value.to_string()]);
            }
            for kv in &report.tail {
                out.push(["tail".into(), kv.k.to_string(), kv.value.to_string()]);
            }
            for kv in &report.tilted_tail {
                out.push(["tilted_tail".into(), kv.k.to_string(), kv.value.to_string()]);
            }
            if let Some(p) = &report.potter {
                out.push(["potter_k_eps".into(), String::new(), p.k_eps.to_string()]);
                out.push(["potter_c_eps".into(), String::new(), p.c_eps.to_string()]);
                out.push(["potter_horizon_limited".into(), String::new(), (p.horizon_limited as u8).to_string()]);
            }
            write_csv(cfg.out.as_deref(), None, &["quantity", "k", "value"], out)
        }
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of digits per trial
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 100)]
    trials: u64,
}

pub fn simulate(cfg: &RunConfig, a: SimulateArgs) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    if a.n == 0 || a.trials == 0 {
        return Err(usage("n and trials must be at least 1"));
    }
    let report = monte_carlo_law(&model, a.n, a.trials, cfg.seed)?;
    match cfg.format {
        Format::Json => write_json(cfg.out.as_deref(), &report),
        Format::Csv => {
            let karlin = opt(report.karlin_constant);
            let rows = report.checkpoints.iter().map(|c| {
                [
                    report.n.to_string(),
                    c.checkpoint.to_string(),
                    c.mean.to_string(),
                    c.sd.to_string(),
                    c.exact_expectation.to_string(),
                    karlin.clone(),
                ]
            });
            let header = ["n", "checkpoint", "mean", "sd", "exact_expectation", "karlin_constant"];
            write_csv(cfg.out.as_deref(), Some(cfg.seed), &header, rows)
        }
    }
}

// ---------------------------------------------------------------- construct

#[derive(Debug, Subcommand)]
pub enum ConstructCommand {
    /// Block-concatenation points with linear distinctness rate θ
    Linear(LinearArgs),
    /// Forced-digit points following a sublinear profile
    Sublinear(SublinearArgs),
}

#[derive(Debug, Args)]
pub struct LinearArgs {
    /// Rate θ ∈ (0, 1], as a decimal or p/q
    #[arg(long)]
    theta: String,
    /// Number of levels J
    #[arg(long, default_value_t = 14)]
    depth: usize,
    /// First alphabet size floor
    #[arg(long, default_value_t = 1)]
    k1: u64,
    /// Number of sampled points
    #[arg(long, default_value_t = 1)]
    points: u64,
    /// Write the sampled digit words here
    #[arg(long)]
    words: Option<PathBuf>,
    /// Write the schedule as JSON here
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct LinearRow {
    point: u64,
    n: u64,
    d_n: u64,
    theta_n: f64,
    bound: f64,
    log_mass: Option<f64>,
    log_diam: f64,
    local_dim: Option<f64>,
}

#[derive(Serialize)]
struct ConstructReport<R> {
    seed: u64,
    words: Vec<String>,
    trace: Vec<R>,
}

#[derive(Debug, Args)]
pub struct SublinearArgs {
    /// Profile kind: sqrt, power, log or table
    #[arg(long, default_value = "sqrt")]
    profile: String,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    table: Option<Vec<u64>>,
    /// JSON profile spec; replaces the profile flags
    #[arg(long)]
    profile_config: Option<PathBuf>,
    /// Target exponent t ∈ (0, 1)
    #[arg(long)]
    t: f64,
    /// Horizon
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    points: u64,
    #[arg(long)]
    words: Option<PathBuf>,
    /// Write a schedule summary as JSON here
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct SublinearRow {
    point: u64,
    n: u64,
    log_ratio: f64,
    free_part: f64,
    forced_part: f64,
    f_n: u64,
    k_n: u64,
    d_n: u64,
}

#[derive(Serialize)]
struct LawSummary {
    k: u64,
    s: f64,
    residual: f64,
}

#[derive(Serialize)]
struct SublinearSummary {
    profile: ProfileSpec,
    t: f64,
    k_star: u64,
    n_t: Option<u64>,
    laws: Vec<LawSummary>,
}

pub fn construct(cfg: &RunConfig, c: ConstructCommand) -> Result<(), CliError> {
    match c {
        ConstructCommand::Linear(a) => construct_linear(cfg, a),
        ConstructCommand::Sublinear(a) => construct_sublinear(cfg, a),
    }
}

fn construct_linear(cfg: &RunConfig, a: LinearArgs) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    let theta = unit_rate(&a.theta)?;
    if a.depth == 0 || a.k1 == 0 || a.points == 0 {
        return Err(usage("depth, k1 and points must be positive"));
    }
    let sched = build_schedule(theta, a.k1, a.depth)?;
    if let Some(p) = &a.schedule {
        write_json(Some(p), &sched)?;
    }
    let boundaries: Vec<u64> = (1..=a.depth).map(|j| sched.total_len(j)).collect();
    let results: Vec<Result<(DigitWord, Vec<LinearRow>), CliError>> = (0..a.points)
        .into_par_iter()
        .map(|i| {
            let word = sched.sample_point(a.depth, &mut substream(cfg.seed, i))?;
            let mut rows = Vec::with_capacity(word.len());
            let mut log_diam = 0.0;
            for (idx, (&d_n, &digit)) in word.distinct_profile().iter().zip(word.digits()).enumerate() {
                let n = idx as u64 + 1;
                if !(theta.mul_le(n, d_n) && theta.lt_mul_plus(d_n, n, a.depth as u64)) {
                    return Err(CliError::Validation(format!(
                        "linear.sandwich violated: point {i}, n = {n}, D_n = {d_n} (seed {})",
                        cfg.seed
                    )));
                }
                log_diam += model.ln_p(digit);
                let (log_mass, local_dim) = if boundaries.binary_search(&n).is_ok() {
                    let prefix = word.prefix(n as usize);
                    (Some(sched.mu_log_mass(&prefix)?), Some(sched.local_dimension(&model, &prefix)?))
                } else {
                    (None, None)
                };
                let theta_n = theta.as_f64() * n as f64;
                rows.push(LinearRow {
                    point: i,
                    n,
                    d_n,
                    theta_n,
                    bound: theta_n + a.depth as f64,
                    log_mass,
                    log_diam,
                    local_dim,
                });
            }
            Ok((word, rows))
        })
        .collect();
    let (words, traces): (Vec<DigitWord>, Vec<Vec<LinearRow>>) = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    if let Some(p) = &a.words {
        write_words(p, cfg.seed, &words)?;
    }
    let trace: Vec<LinearRow> = traces.into_iter().flatten().collect();
    match cfg.format {
        Format::Json => write_json(
            cfg.out.as_deref(),
            &ConstructReport { seed: cfg.seed, words: words.iter().map(ToString::to_string).collect(), trace },
        ),
        Format::Csv => {
            let header = ["point", "n", "d_n", "theta_n", "bound", "log_mass", "log_diam", "local_dim"];
            let rows = trace.iter().map(|r| {
                [
                    r.point.to_string(),
                    r.n.to_string(),
                    r.d_n.to_string(),
                    r.theta_n.to_string(),
                    r.bound.to_string(),
                    opt(r.log_mass),
                    r.log_diam.to_string(),
                    opt(r.local_dim),
                ]
            });
            write_csv(cfg.out.as_deref(), Some(cfg.seed), &header, rows)
        }
    }
}

fn construct_sublinear(cfg: &RunConfig, a: SublinearArgs) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    if !(a.t > 0.0 && a.t < 1.0) {
        return Err(usage(format!("t = {} outside (0, 1)", a.t)));
    }
    if a.points == 0 {
        return Err(usage("points must be positive"));
    }
    let spec = match &a.profile_config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ProfileSpec>(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => ProfileSpec { kind: a.profile.clone(), beta: a.beta, c: a.c, table: a.table.clone(), horizon: a.n },
    };
    let profile = match spec.build() {
        Ok(p) => p,
        Err(e @ digitrange::Error::NotAdmissible(_)) => return Err(CliError::Validation(format!("sublinear.admissible: {e}"))),
        Err(e) => return Err(usage(e.to_string())),
    };
    let horizon = profile.horizon();
    let sched = build_sublinear_schedule(profile, a.t, model)?;
    if let Some(p) = &a.schedule {
        let mut laws: Vec<LawSummary> = sched.laws().map(|l| LawSummary { k: l.k, s: l.s, residual: l.residual }).collect();
        laws.sort_by_key(|l| l.k);
        let summary = SublinearSummary { profile: spec.clone(), t: a.t, k_star: sched.k_star, n_t: sched.n_t, laws };
        write_json(Some(p), &summary)?;
    }
    let results: Vec<Result<(DigitWord, Vec<SublinearRow>), CliError>> = (0..a.points)
        .into_par_iter()
        .map(|i| {
            let word = sched.sample_point(horizon, &mut substream(cfg.seed, i))?;
            let ratios = sched.ratio_trace(&word)?;
            let mut rows = Vec::with_capacity(word.len());
            for (idx, &d_n) in word.distinct_profile().iter().enumerate() {
                let n = idx as u64 + 1;
                let (f_n, k_n) = (sched.profile.f(n), sched.k_n(n));
                if !(f_n <= d_n && d_n <= f_n + k_n) {
                    return Err(CliError::Validation(format!(
                        "sublinear.sandwich violated: point {i}, n = {n}, D_n = {d_n}, f(n) = {f_n} (seed {})",
                        cfg.seed
                    )));
                }
                let r = ratios[n as usize];
                rows.push(SublinearRow {
                    point: i,
                    n,
                    log_ratio: r.log_ratio,
                    free_part: r.free_part,
                    forced_part: r.forced_part,
                    f_n,
                    k_n,
                    d_n,
                });
            }
            Ok((word, rows))
        })
        .collect();
    let (words, traces): (Vec<DigitWord>, Vec<Vec<SublinearRow>>) = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    if let Some(p) = &a.words {
        write_words(p, cfg.seed, &words)?;
    }
    let trace: Vec<SublinearRow> = traces.into_iter().flatten().collect();
    match cfg.format {
        Format::Json => write_json(
            cfg.out.as_deref(),
            &ConstructReport { seed: cfg.seed, words: words.iter().map(ToString::to_string).collect(), trace },
        ),
        Format::Csv => {
            let header = ["point", "n", "log_ratio", "free_part", "forced_part", "f_n", "K_n", "D_n"];
            let rows = trace.iter().map(|r| {
                [
                    r.point.to_string(),
                    r.n.to_string(),
                    r.log_ratio.to_string(),
                    r.free_part.to_string(),
                    r.forced_part.to_string(),
                    r.f_n.to_string(),
                    r.k_n.to_string(),
                    r.d_n.to_string(),
                ]
            });
            write_csv(cfg.out.as_deref(), Some(cfg.seed), &header, rows)
        }
    }
}

// ---------------------------------------------------------------- cylsum

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Args)]
pub struct CylsumArgs {
    /// Word lengths, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    /// Tilt exponent
    #[arg(long)]
    s: f64,
    /// Rate θ ∈ (0, 1]
    #[arg(long)]
    theta: String,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Largest digit enumerated in exact mode
    #[arg(long, default_value_t = 6)]
    cap: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Finite test law given by its weights; replaces the model
    #[arg(long, value_delimiter = ',')]
    finite: Option<Vec<f64>>,
    /// Also evaluate the binomial bound chain
    #[arg(long)]
    bound_chain: bool,
    /// Proxy for the tail-lemma threshold M_s
    #[arg(long, default_value_t = 1)]
    m_s: u64,
}

#[derive(Serialize)]
struct CylsumReport {
    seed: Option<u64>,
    records: Vec<CylinderSumRecord>,
    chains: Vec<BoundChain>,
}

pub fn cylsum(cfg: &RunConfig, a: CylsumArgs) -> Result<(), CliError> {
    let theta = unit_rate(&a.theta)?;
    let law = match &a.finite {
        Some(w) => DigitLaw::finite(w.clone()).map_err(|e| usage(e.to_string()))?,
        None => DigitLaw::Model(cfg.build_model()?),
    };
    if !(a.s > 0.0 && a.s <= 1.0) {
        return Err(usage(format!("s = {} outside (0, 1]", a.s)));
    }
    if a.n.contains(&0) || a.trials == 0 {
        return Err(usage("n and trials must be positive"));
    }
    let randomized = a.mode == Mode::Mc || a.bound_chain;
    let mut records = Vec::new();
    let mut chains = Vec::new();
    for &n in &a.n {
        let mut rec = match a.mode {
            Mode::Exact => cylinder_sum_exact(&law, n, a.s, theta, a.cap)?,
            Mode::Mc => cylinder_sum_mc(&law, n, a.s, theta, a.trials, cfg.seed)?,
        };
        if a.bound_chain {
            let chain = bound_chain(&law, n, a.s, theta, a.m_s, a.trials, cfg.seed)?;
            rec.binomial_bound = Some(chain.binomial_bound);
            chains.push(chain);
        }
        records.push(rec);
    }
    let seed = randomized.then_some(cfg.seed);
    match cfg.format {
        Format::Json => write_json(cfg.out.as_deref(), &CylsumReport { seed, records, chains }),
        Format::Csv => write_csv(cfg.out.as_deref(), seed, &CylinderSumRecord::CSV_HEADER, records.iter().map(|r| r.csv_row())),
    }
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// quick or full
    #[arg(default_value = "quick")]
    suite: String,
    /// Append a check that always fails
    #[arg(long)]
    fail_inject: bool,
}

pub fn verify(cfg: &RunConfig, a: VerifyArgs) -> Result<(), CliError> {
    let suite: Suite = a.suite.parse().map_err(|e: digitrange::Error| usage(e.to_string()))?;
    let report = run_suite(suite, cfg.seed, a.fail_inject);
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<32} {:>8.2}s  {}", c.name, c.seconds, c.detail);
    }
    if cfg.out.is_some() {
        match cfg.format {
            Format::Json => write_json(cfg.out.as_deref(), &report)?,
            Format::Csv => {
                let rows = report.checks.iter().map(|c| {
                    [c.name.clone(), c.passed.to_string(), c.seed.to_string(), c.seconds.to_string(), c.detail.clone()]
                });
                write_csv(cfg.out.as_deref(), Some(cfg.seed), &["check", "passed", "seed", "seconds", "detail"], rows)?;
            }
        }
    }
    let failed: Vec<String> = report.failures().map(|c| format!("{} (seed {})", c.name, c.seed)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Suite(failed.join(", ")))
    }
}

//! Named self-checks grouped into a quick and a full suite.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{cylinder, encode, DigitWord, Layout};
use crate::error::{Error, Result};
use crate::linear::{build_schedule, count_blocks};
use crate::occupancy::{karlin_constant, monte_carlo_law};
use crate::rate::Rate;
use crate::rng::substream;
use crate::sublinear::{build_sublinear_schedule, AdmissibleProfile};
use crate::tilt::{change_of_measure_check, cylinder_sum_exact, cylinder_sum_mc, distinct_forces_large_check, DigitLaw};
use crate::weights::WeightModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Quick,
    Full,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Suite::Quick),
            "full" => Ok(Suite::Full),
            _ => Err(Error::Parse(format!("unknown suite {s:?}"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Quick => "quick",
            Suite::Full => "full",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seed: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type Outcome = std::result::Result<String, String>;
type CheckFn = fn(u64) -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rate(s: &str) -> Rate {
    s.parse().expect("literal rate")
}

const QUICK: &[(&str, CheckFn)] = &[
    ("weights.normalization", weights_normalization),
    ("weights.tilt-monotone", weights_tilt_monotone),
    ("weights.s-k-solver", weights_s_k_quick),
    ("codec.exact-round-trip", codec_round_trip),
    ("occupancy.small-mc", occupancy_small_mc),
    ("linear.block-count", linear_block_count),
    ("linear.sandwich", linear_sandwich_quick),
    ("sublinear.sandwich", sublinear_sandwich_quick),
    ("tilt.identity", tilt_identity_quick),
    ("tilt.lemma", tilt_lemma),
];

const FULL_EXTRA: &[(&str, CheckFn)] = &[
    ("A1.luroth-occupancy", a1_luroth_occupancy),
    ("A2.power-occupancy", a2_power_occupancy),
    ("A3.linear-sandwich", a3_linear_sandwich),
    ("A5.local-dimension", a5_local_dimension),
    ("A6.identity-and-mc", a6_identity_mc),
    ("A7.tail-lemma", a7_tail_lemma),
    ("A8.sublinear-sandwich-decay", a8_sublinear),
    ("A10.s-k-solver", a10_s_k),
];

/// Runs `suite`; `fail_inject` appends a check that always fails.
pub fn run_suite(suite: Suite, seed: u64, fail_inject: bool) -> VerifyReport {
    let mut checks: Vec<(&str, CheckFn)> = QUICK.to_vec();
    if suite == Suite::Full {
        checks.extend_from_slice(FULL_EXTRA);
    }
    if fail_inject {
        checks.push(("harness.fail-inject", |_| Err("injected failure".into())));
    }
    let checks = checks
        .into_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let outcome = f(seed);
            let seconds = start.elapsed().as_secs_f64();
            let (passed, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult { name: name.to_string(), passed, detail, seed, seconds }
        })
        .collect();
    VerifyReport { suite, seed, checks }
}

fn weights_normalization(_: u64) -> Outcome {
    let models = [
        WeightModel::luroth(),
        lib(WeightModel::power(3.0))?,
        lib(WeightModel::power(1.5))?,
        lib(WeightModel::power_log(2.0, 1.0))?,
        lib(WeightModel::explicit_prefix(vec![0.3, 0.2, 0.1], 2.0))?,
    ];
    let mut worst = 0.0f64;
    for m in &models {
        let total = lib(m.tail_sum(1))?;
        worst = worst.max((total - 1.0).abs());
        ensure((total - 1.0).abs() < 1e-12, || format!("{m}: Σp = {total}"))?;
    }
    Ok(format!("max |Σp − 1| = {worst:.1e}"))
}

fn weights_tilt_monotone(_: u64) -> Outcome {
    let m = WeightModel::luroth();
    let grid: Vec<f64> = (1..=10).map(|i| 0.5 + 0.05 * i as f64).collect();
    let vals = grid.iter().map(|&s| lib(m.tilted_tail_sum(1, s))).collect::<std::result::Result<Vec<_>, _>>()?;
    ensure(vals.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {vals:?}"))?;
    Ok(format!("Z_s from {:.4} down to {:.4}", vals[0], vals[9]))
}

fn s_k_checks(k_max: u64, step: u64) -> Outcome {
    let m = WeightModel::luroth();
    ensure(lib(m.solve_s_k(1))? == 0.0, || "s_1 != 0".into())?;
    let mut prev = 0.0;
    let mut worst = 0.0f64;
    let mut k = 2;
    while k <= k_max {
        let s = lib(m.solve_s_k(k))?;
        let residual = (1..=k).map(|j| m.p(j).powf(s)).sum::<f64>() - 1.0;
        worst = worst.max(residual.abs());
        ensure(residual.abs() < 1e-12, || format!("K={k}: residual {residual:e}"))?;
        ensure(s >= prev, || format!("K={k}: s_K decreased"))?;
        prev = s;
        k = if k < 20 { k + 1 } else { k + step };
    }
    let s2 = lib(m.solve_s_k(2))?;
    ensure((s2 - 0.601).abs() <= 1e-3, || format!("s_2 = {s2}"))?;
    Ok(format!("s_2 = {s2:.6}, max residual {worst:.1e}"))
}

fn weights_s_k_quick(_: u64) -> Outcome {
    s_k_checks(500, 37)
}

fn codec_round_trip(seed: u64) -> Outcome {
    let m = WeightModel::luroth();
    let mut rng = substream(seed, 0xC0DEC);
    for _ in 0..200 {
        let len = rng.random_range(1..40usize);
        let digits: Vec<u64> = (0..len).map(|_| rng.random_range(1..1000u64)).collect();
        let w = lib(DigitWord::new(digits))?;
        let c = lib(cylinder(&m, &w))?;
        let left: BigRational = c.left_exact.clone().ok_or("no exact endpoint")?;
        let back = lib(encode(&m, &left, len, Layout::Canonical))?;
        ensure(back == w, || format!("{w} decoded as {back}"))?;
    }
    Ok("200 words".into())
}

fn occupancy_small_mc(seed: u64) -> Outcome {
    let m = WeightModel::luroth();
    let r = lib(monte_carlo_law(&m, 1000, 400, seed))?;
    let last = r.last();
    let se = last.sd_distinct / (r.trials as f64).sqrt();
    let z = (last.mean_distinct - last.exact_expectation) / se;
    ensure(z.abs() < 4.0, || format!("mean {} vs E {} (z = {z:.2})", last.mean_distinct, last.exact_expectation))?;
    Ok(format!("z = {z:.2}"))
}

fn brute_block_count(n: u64, len: u64, theta: Rate) -> u64 {
    let mut count = 0;
    for code in 0..n.pow(len as u32) {
        let mut c = code;
        let mut seen = HashSet::new();
        let mut ok = true;
        for i in 0..len {
            seen.insert(c % n);
            c /= n;
            if seen.len() as u64 != theta.ceil_mul(i + 1) {
                ok = false;
                break;
            }
        }
        count += ok as u64;
    }
    count
}

fn linear_block_count(_: u64) -> Outcome {
    let mut cases = 0;
    for theta in [rate("0.3"), rate("0.5"), rate("1")] {
        for len in 1..=6u64 {
            for n in 1..=5u64 {
                let brute = brute_block_count(n, len, theta);
                let m = theta.ceil_mul(len);
                match count_blocks(n, len, theta) {
                    Ok(c) => ensure(c.exact == Some(brute as u128), || format!("N={n} L={len} θ={theta}: {c:?} vs {brute}"))?,
                    Err(Error::Infeasible { .. }) => ensure(brute == 0 && n < m, || format!("N={n} L={len}: infeasible but {brute}"))?,
                    Err(e) => return Err(e.to_string()),
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases"))
}

fn linear_sandwich(thetas: &[&str], depth: usize, seeds: u64, seed: u64) -> Outcome {
    let mut points = 0;
    for th in thetas {
        let theta = rate(th);
        let s = lib(build_schedule(theta, 1, depth))?;
        for i in 0..seeds {
            let w = lib(s.sample_point(depth, &mut substream(seed, i)))?;
            for (n, &d) in w.distinct_profile().iter().enumerate() {
                let n = n as u64 + 1;
                ensure(theta.mul_le(n, d) && theta.lt_mul_plus(d, n, depth as u64), || {
                    format!("θ={theta} seed {seed}/{i}: D_{n} = {d}")
                })?;
            }
            points += 1;
        }
    }
    Ok(format!("{points} points"))
}

fn linear_sandwich_quick(seed: u64) -> Outcome {
    linear_sandwich(&["0.3", "0.5", "1"], 10, 3, seed)
}

fn sublinear_sandwich(ts: &[f64], horizon: u64, seeds: u64, seed: u64, decay: bool) -> Outcome {
    let profile = lib(AdmissibleProfile::sqrt(horizon))?;
    let mut detail = Vec::new();
    for &t in ts {
        let sched = lib(build_sublinear_schedule(profile.clone(), t, WeightModel::luroth()))?;
        for i in 0..seeds {
            let w = lib(sched.sample_point(horizon, &mut substream(seed, i)))?;
            for (n, &d) in w.distinct_profile().iter().enumerate() {
                let n = n as u64 + 1;
                let f = profile.f(n);
                ensure(f <= d && d <= f + sched.k_n(n), || format!("t={t} seed {seed}/{i}: D_{n} = {d}, f = {f}"))?;
            }
            if decay {
                let rows = lib(sched.ratio_trace(&w))?;
                let half = (horizon / 2) as usize;
                let early = rows[1..=half].iter().map(|r| r.log_ratio).fold(f64::NEG_INFINITY, f64::max);
                let late = rows[half..].iter().map(|r| r.log_ratio).fold(f64::NEG_INFINITY, f64::max);
                ensure(late < early, || format!("t={t} seed {i}: late max {late} ≥ early max {early}"))?;
                detail.push(format!("{late:.1}<{early:.1}"));
            }
        }
    }
    Ok(if decay { detail.join(" ") } else { format!("{} points", ts.len() as u64 * seeds) })
}

fn sublinear_sandwich_quick(seed: u64) -> Outcome {
    sublinear_sandwich(&[0.9], 10_000, 2, seed, false)
}

fn identity_grid(n_max: u64, cap_max: u64) -> Outcome {
    let law = DigitLaw::Model(WeightModel::luroth());
    let mut worst = 0.0f64;
    for n in 1..=n_max {
        for cap in 1..=cap_max {
            for s in [0.6, 0.75, 0.9] {
                for th in ["0.4", "0.8", "1"] {
                    let c = lib(change_of_measure_check(&law, n, s, rate(th), cap))?;
                    worst = worst.max(c.rel_err);
                    ensure(c.rel_err <= 1e-12, || format!("n={n} cap={cap} s={s} θ={th}: {c:?}"))?;
                }
            }
        }
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn tilt_identity_quick(_: u64) -> Outcome {
    identity_grid(4, 4)
}

fn tilt_lemma(_: u64) -> Outcome {
    let r = distinct_forces_large_check(6, 6);
    ensure(r.passed(), || format!("counterexample {:?}", r.counterexample))?;
    Ok(format!("{} tuples", r.tuples_checked))
}

fn a1_luroth_occupancy(seed: u64) -> Outcome {
    let m = WeightModel::luroth();
    let r = lib(monte_carlo_law(&m, 1_000_000, 100, seed))?;
    let last = r.last();
    let root_pi = std::f64::consts::PI.sqrt();
    ensure((last.mean - root_pi).abs() <= 0.06, || format!("mean D_n/√n = {}", last.mean))?;
    let rel = (last.mean_distinct / last.exact_expectation - 1.0).abs();
    ensure(rel < 0.01, || format!("MC {} vs E {}", last.mean_distinct, last.exact_expectation))?;
    Ok(format!("mean D_n/√n = {:.4}, rel err vs E {rel:.2e}", last.mean))
}

fn a2_power_occupancy(seed: u64) -> Outcome {
    let m = lib(WeightModel::power(3.0))?;
    let r = lib(monte_carlo_law(&m, 1_000_000, 50, seed))?;
    let last = r.last();
    let rel = (last.mean_distinct / last.exact_expectation - 1.0).abs();
    ensure(rel < 0.01, || format!("MC {} vs E {}", last.mean_distinct, last.exact_expectation))?;
    let c = m.tail_constant().ok_or("no tail constant")?;
    let kc = lib(karlin_constant(3.0, c))?;
    // ordering read from the exact checkpoint expectations
    let gaps: Vec<f64> = r
        .checkpoints
        .iter()
        .map(|c| (c.exact_expectation / (c.checkpoint as f64).cbrt() - kc).abs())
        .collect();
    let closest = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(gaps.last() == Some(&closest), || format!("final checkpoint not closest to {kc}: {gaps:?}"))?;
    let se = last.sd / (r.trials as f64).sqrt();
    let mc_gap = (last.mean - kc).abs();
    ensure(mc_gap <= 3.0 * se + closest, || format!("MC mean {} vs Karlin {kc} (se {se})", last.mean))?;
    Ok(format!("rel err {rel:.2e}, exact gap {closest:.4}, MC gap {mc_gap:.4} (se {se:.4})"))
}

fn a3_linear_sandwich(seed: u64) -> Outcome {
    linear_sandwich(&["0.3", "0.5", "1"], 14, 10, seed)
}

fn a5_local_dimension(seed: u64) -> Outcome {
    let m = WeightModel::luroth();
    let s = lib(build_schedule(rate("0.5"), 1, 14))?;
    let w = lib(s.sample_point(14, &mut substream(seed, 0)))?;
    let dim = |j: usize| lib(s.local_dimension(&m, &w.prefix(s.total_len(j) as usize)));
    let (d6, d14) = (dim(6)?, dim(14)?);
    ensure((0.40..=0.60).contains(&d14), || format!("depth-14 estimate {d14}"))?;
    ensure((d14 - 0.5).abs() < (d6 - 0.5).abs(), || format!("depth 14 {d14} not closer than depth 6 {d6}"))?;
    Ok(format!("depth 6: {d6:.4}, depth 14: {d14:.4}"))
}

fn a6_identity_mc(seed: u64) -> Outcome {
    let grid = identity_grid(6, 6)?;
    let model = WeightModel::luroth();
    let capped = lib(DigitLaw::capped(&model, 6))?;
    let theta = rate("0.8");
    let exact = lib(cylinder_sum_exact(&capped, 6, 0.75, theta, 6))?;
    let mc = lib(cylinder_sum_mc(&capped, 6, 0.75, theta, 1_000_000, seed))?;
    let se = mc.stderr.unwrap_or(0.0);
    let z_capped = (mc.value - exact.value) / se;
    ensure(z_capped.abs() <= 3.0, || format!("capped MC {} ± {se} vs {}", mc.value, exact.value))?;
    let full = DigitLaw::Model(model);
    let exact = lib(cylinder_sum_exact(&full, 6, 0.75, theta, 6))?;
    let mc = lib(cylinder_sum_mc(&full, 6, 0.75, theta, 1_000_000, seed))?;
    let (lo, hi) = exact.bracket(0.0);
    let se = mc.stderr.unwrap_or(0.0);
    ensure(mc.value + 3.0 * se >= lo && mc.value - 3.0 * se <= hi, || format!("MC {} ± {se} outside [{lo}, {hi}]", mc.value))?;
    Ok(format!("{grid}; capped MC z = {z_capped:.2}, full MC {:.4} vs bracket [{lo:.4}, {hi:.4}]", mc.value))
}

fn a7_tail_lemma(_: u64) -> Outcome {
    let m = WeightModel::luroth();
    let mut ratios = Vec::new();
    for e in 1..=4 {
        let big_m = 10u64.pow(e);
        let r = lib(m.tilted_tail_sum(big_m, 0.75))? * (big_m as f64).sqrt();
        ensure((1.5..=3.0).contains(&r), || format!("M = {big_m}: ratio {r}"))?;
        ratios.push(format!("{r:.4}"));
    }
    Ok(ratios.join(" "))
}

fn a8_sublinear(seed: u64) -> Outcome {
    sublinear_sandwich(&[0.5, 0.9], 100_000, 5, seed, true)
}

fn a10_s_k(_: u64) -> Outcome {
    let d = s_k_checks(10_000, 997)?;
    let s1000 = lib(WeightModel::luroth().solve_s_k(1000))?;
    ensure(s1000 > 0.9, || format!("s_1000 = {s1000}"))?;
    Ok(format!("{d}, s_1000 = {s1000:.4}"))
}

//! Tilted digit laws and cylinder sums.
//!
//! With `q_k = p_k^s / Z_s` the cylinder sum over words whose distinct count
//! reaches `⌈θn/2⌉` factors as
//!
//! ```text
//! S_n(s, θ) = Σ_{ω ∈ W_n(θ)} Π p_{ω_i}^s = Z_s^n · P_q(#{X_1..X_n} ≥ ⌈θn/2⌉).
//! ```

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;
use crate::rate::Rate;
use crate::rng::{open01, substream};
use crate::sampler::{TableSampler, HEAD_LEN};
use crate::weights::WeightModel;

/// Largest number of words enumerated by [`cylinder_sum_exact`].
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

/// A digit law: a full weight model or a finite list of weights.
///
/// Finite laws may be sub-probabilities, e.g. a model restricted to `k ≤ cap`.
#[derive(Debug, Clone)]
pub enum DigitLaw {
    Model(WeightModel),
    Finite(Vec<f64>),
}

impl DigitLaw {
    pub fn finite(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return domain("finite law needs positive finite weights");
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + 1e-12 {
            return domain(format!("finite law has total mass {total} > 1"));
        }
        Ok(DigitLaw::Finite(weights))
    }

    /// The first `cap` weights of `model`.
    pub fn capped(model: &WeightModel, cap: u64) -> Result<Self> {
        if cap == 0 {
            return domain("cap must be at least 1");
        }
        Self::finite((1..=cap).map(|k| model.p(k)).collect())
    }

    pub fn p(&self, k: u64) -> f64 {
        match self {
            DigitLaw::Model(m) => m.p(k),
            DigitLaw::Finite(w) => w.get(k as usize - 1).copied().unwrap_or(0.0),
        }
    }

    /// Number of digits carrying mass, `None` when unbounded.
    pub fn support_len(&self) -> Option<u64> {
        match self {
            DigitLaw::Model(_) => None,
            DigitLaw::Finite(w) => Some(w.len() as u64),
        }
    }

    /// `Σ_{k≥m} p_k^s`.
    pub fn tilted_tail_sum(&self, m: u64, s: f64) -> Result<f64> {
        match self {
            DigitLaw::Model(model) => model.tilted_tail_sum(m, s),
            DigitLaw::Finite(w) => {
                if m == 0 {
                    return domain("tail sums start at M = 1");
                }
                if !(s.is_finite() && s > 0.0) {
                    return domain(format!("tilt exponent {s} must be positive"));
                }
                let start = (m as usize - 1).min(w.len());
                Ok(w[start..].iter().map(|p| p.powf(s)).sum())
            }
        }
    }
}

impl From<WeightModel> for DigitLaw {
    fn from(m: WeightModel) -> Self {
        DigitLaw::Model(m)
    }
}

/// `q_k = p_k^s / Z_s` together with an inverse-CDF sampler.
#[derive(Debug, Clone)]
pub struct TiltedDistribution {
    law: DigitLaw,
    s: f64,
    z: f64,
    sampler: Arc<TableSampler>,
}

impl TiltedDistribution {
    /// Requires `s ∈ (0, 1]`, and `ρs > 1` for an infinite law.
    pub fn new(law: DigitLaw, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return domain(format!("tilt exponent {s} outside (0, 1]"));
        }
        let z = law.tilted_tail_sum(1, s)?;
        let sampler = match &law {
            DigitLaw::Finite(w) => {
                TableSampler::build(|k| w[k as usize - 1].powf(s) / z, |_| 0.0, w.len() as u64, true)
            }
            DigitLaw::Model(m) => TableSampler::build(
                |k| m.p(k).powf(s) / z,
                |k| m.tilted_tail_sum(k, s).unwrap_or(0.0) / z,
                HEAD_LEN,
                false,
            ),
        };
        Ok(TiltedDistribution { law, s, z, sampler: Arc::new(sampler) })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `Z_s = Σ_k p_k^s`.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn law(&self) -> &DigitLaw {
        &self.law
    }

    pub fn q(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.law.p(k).powf(self.s) / self.z
    }

    /// `q_{≥m} = Σ_{k≥m} q_k`.
    pub fn tail(&self, m: u64) -> Result<f64> {
        Ok(self.law.tilted_tail_sum(m, self.s)? / self.z)
    }

    /// Digit drawn from `q` for `u ∈ (0, 1)`.
    #[inline]
    pub fn sample(&self, u: f64) -> u64 {
        self.sampler.sample(u)
    }
}

/// `⌈θn/2⌉`, the distinct count defining `W_n(θ)`.
pub fn distinct_threshold(theta: Rate, n: u64) -> u64 {
    theta.half().ceil_mul(n)
}

/// `r_n = ⌈θn/4⌉`.
pub fn binomial_threshold(theta: Rate, n: u64) -> u64 {
    theta.half().half().ceil_mul(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumMode {
    ExactEnumeration,
    MonteCarlo,
}

impl fmt::Display for SumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SumMode::ExactEnumeration => "exact-enumeration",
            SumMode::MonteCarlo => "monte-carlo",
        })
    }
}

impl FromStr for SumMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-enumeration" | "exact" => Ok(SumMode::ExactEnumeration),
            "monte-carlo" | "mc" => Ok(SumMode::MonteCarlo),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

/// One evaluation of `S_n(s, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderSumRecord {
    pub n: u64,
    pub s: f64,
    pub theta: Rate,
    pub mode: SumMode,
    pub value: f64,
    pub stderr: Option<f64>,
    /// Largest digit enumerated in exact mode.
    pub alphabet_cap: Option<u64>,
    /// Upper bound on the mass of words using a digit above the cap.
    pub truncation_deficit: Option<f64>,
    pub binomial_bound: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl CylinderSumRecord {
    /// `[value, value + deficit]` in exact mode, `value ± k·stderr` in Monte Carlo mode.
    pub fn bracket(&self, k_sigma: f64) -> (f64, f64) {
        match self.mode {
            SumMode::ExactEnumeration => (self.value, self.value + self.truncation_deficit.unwrap_or(0.0)),
            SumMode::MonteCarlo => {
                let e = k_sigma * self.stderr.unwrap_or(0.0);
                (self.value - e, self.value + e)
            }
        }
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["n", "s", "theta", "mode", "value", "stderr", "truncation_deficit", "binomial_bound"];

    pub fn csv_row(&self) -> [String; 8] {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.n.to_string(),
            self.s.to_string(),
            self.theta.to_string(),
            self.mode.to_string(),
            self.value.to_string(),
            opt(self.stderr),
            opt(self.truncation_deficit),
            opt(self.binomial_bound),
        ]
    }
}

/// Sums of `Π w_{ω_i}` over `[1, cap]^n`, bucketed by distinct count.
fn enumerate_by_distinct(w: &[f64], n: usize) -> Vec<f64> {
    fn rec(w: &[f64], left: usize, prod: f64, used: &mut [bool], distinct: usize, out: &mut [CompensatedSum]) {
        if left == 0 {
            out[distinct].add(prod);
            return;
        }
        for (i, &wi) in w.iter().enumerate() {
            let fresh = !used[i];
            used[i] = true;
            rec(w, left - 1, prod * wi, used, distinct + fresh as usize, out);
            if fresh {
                used[i] = false;
            }
        }
    }
    let mut out = vec![CompensatedSum::new(); n + 1];
    let mut used = vec![false; w.len()];
    rec(w, n, 1.0, &mut used, 0, &mut out);
    out.iter().map(CompensatedSum::value).collect()
}

fn check_enumeration(cap: u64, n: u64) -> Result<()> {
    let size = (cap as f64).powf(n as f64);
    if cap == 0 || size > ENUMERATION_LIMIT as f64 {
        return Err(Error::EnumerationSize { size, limit: ENUMERATION_LIMIT as f64 });
    }
    Ok(())
}

fn check_sum_args(n: u64, s: f64) -> Result<()> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    if !(s > 0.0 && s <= 1.0) {
        return domain(format!("tilt exponent {s} outside (0, 1]"));
    }
    Ok(())
}

/// Exact `S_n(s, θ)` over words with digits `≤ alphabet_cap`.
///
/// Words using larger digits contribute at most
/// `n · Σ_{k>cap} p_k^s · Z_s^{n−1}`, reported as the truncation deficit.
pub fn cylinder_sum_exact(law: &DigitLaw, n: u64, s: f64, theta: Rate, alphabet_cap: u64) -> Result<CylinderSumRecord> {
    check_sum_args(n, s)?;
    let cap = law.support_len().map_or(alphabet_cap, |len| alphabet_cap.min(len));
    check_enumeration(cap, n)?;
    let w: Vec<f64> = (1..=cap).map(|k| law.p(k).powf(s)).collect();
    let buckets = enumerate_by_distinct(&w, n as usize);
    let m = distinct_threshold(theta, n) as usize;
    let value = buckets.iter().skip(m).copied().sum::<f64>();
    let beyond = if law.support_len().is_some_and(|len| cap >= len) { 0.0 } else { law.tilted_tail_sum(cap + 1, s)? };
    let deficit = if beyond == 0.0 {
        0.0
    } else {
        let z = law.tilted_tail_sum(1, s)?;
        n as f64 * beyond * z.powi(n as i32 - 1)
    };
    Ok(CylinderSumRecord {
        n,
        s,
        theta,
        mode: SumMode::ExactEnumeration,
        value,
        stderr: None,
        alphabet_cap: Some(cap),
        truncation_deficit: Some(deficit),
        binomial_bound: None,
        trials: None,
        seed: None,
    })
}

/// Both sides of the change-of-measure identity on the law restricted to `k ≤ cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    /// `Σ_{ω ∈ W_n(θ)} Π p_{ω_i}^s`.
    pub direct: f64,
    /// `Z^n · Σ_{ω ∈ W_n(θ)} Π q_{ω_i}` with `Z = Σ_{k≤cap} p_k^s`.
    pub tilted: f64,
    pub z: f64,
    pub probability: f64,
    pub rel_err: f64,
}

pub fn change_of_measure_check(law: &DigitLaw, n: u64, s: f64, theta: Rate, cap: u64) -> Result<IdentityCheck> {
    check_sum_args(n, s)?;
    let capped = match law {
        DigitLaw::Model(m) => DigitLaw::capped(m, cap)?,
        DigitLaw::Finite(w) => DigitLaw::finite(w[..(cap as usize).min(w.len())].to_vec())?,
    };
    let direct = cylinder_sum_exact(&capped, n, s, theta, cap)?.value;
    let cap = capped.support_len().expect("finite law");
    let z: f64 = (1..=cap).map(|k| capped.p(k).powf(s)).sum();
    let q: Vec<f64> = (1..=cap).map(|k| capped.p(k).powf(s) / z).collect();
    let m = distinct_threshold(theta, n) as usize;
    let probability: f64 = enumerate_by_distinct(&q, n as usize).iter().skip(m).sum();
    let tilted = z.powi(n as i32) * probability;
    let rel_err = if direct == tilted { 0.0 } else { (direct - tilted).abs() / direct.abs().max(tilted.abs()) };
    Ok(IdentityCheck { direct, tilted, z, probability, rel_err })
}

/// Number of tilted-iid runs of length `n` whose distinct count reaches `m`.
fn count_hits(dist: &TiltedDistribution, n: u64, m: u64, trials: u64, seed: u64) -> u64 {
    (0..trials)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n as usize),
            |seen, trial| {
                let mut rng = substream(seed, trial);
                seen.clear();
                for _ in 0..n {
                    let k = dist.sample(open01(&mut rng));
                    if !seen.contains(&k) {
                        seen.push(k);
                    }
                }
                (seen.len() as u64 >= m) as u64
            },
        )
        .sum()
}

/// Monte Carlo estimate `Z_s^n · P̂_q(#distinct ≥ ⌈θn/2⌉)` with binomial standard error.
pub fn cylinder_sum_mc(law: &DigitLaw, n: u64, s: f64, theta: Rate, trials: u64, seed: u64) -> Result<CylinderSumRecord> {
    check_sum_args(n, s)?;
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let dist = TiltedDistribution::new(law.clone(), s)?;
    Ok(mc_record(&dist, n, theta, trials, seed).0)
}

fn mc_record(dist: &TiltedDistribution, n: u64, theta: Rate, trials: u64, seed: u64) -> (CylinderSumRecord, f64, f64) {
    let m = distinct_threshold(theta, n);
    let hits = count_hits(dist, n, m, trials, seed);
    let p = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    let zn = dist.z().powi(n as i32);
    let record = CylinderSumRecord {
        n,
        s: dist.s(),
        theta,
        mode: SumMode::MonteCarlo,
        value: zn * p,
        stderr: Some(zn * se),
        alphabet_cap: None,
        truncation_deficit: None,
        binomial_bound: None,
        trials: Some(trials),
        seed: Some(seed),
    };
    (record, p, se)
}

/// Intermediate quantities of the binomial tail bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundChain {
    pub n: u64,
    pub s: f64,
    pub theta: Rate,
    /// `r_n = ⌈θn/4⌉`.
    pub r_n: u64,
    /// `q_{≥r_n}`.
    pub q_tail: f64,
    /// `ln (e·n·q_{≥r_n}/r_n)^{r_n}`.
    pub ln_binomial_bound: f64,
    pub binomial_bound: f64,
    pub probability_mc: f64,
    pub probability_se: f64,
    pub z: f64,
    /// `Z_s^n · P̂`.
    pub s_mc: f64,
    /// `Z_s^n · (binomial bound)`.
    pub s_bound: f64,
    /// The guard `r_n ≥ M_s` fails for the supplied proxy and is assumed.
    pub guard_assumed: bool,
    /// `P̂ ≤ bound` and `S_n ≤ Z^n·bound`, both up to three standard errors.
    pub chain_holds: bool,
    pub trials: u64,
    pub seed: u64,
}

/// Evaluates the chain `P(#distinct ≥ θn/2) ≤ P(Bin(n, q_{≥r_n}) ≥ r_n) ≤ (e·n·q_{≥r_n}/r_n)^{r_n}`.
#[allow(clippy::too_many_arguments)]
pub fn bound_chain(
    law: &DigitLaw,
    n: u64,
    s: f64,
    theta: Rate,
    m_s: u64,
    trials: u64,
    seed: u64,
) -> Result<BoundChain> {
    check_sum_args(n, s)?;
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let dist = TiltedDistribution::new(law.clone(), s)?;
    let r = binomial_threshold(theta, n).max(1);
    let q_tail = dist.tail(r)?;
    let ln_bound = if q_tail > 0.0 {
        r as f64 * (1.0 + (n as f64).ln() + q_tail.ln() - (r as f64).ln())
    } else {
        f64::NEG_INFINITY
    };
    let bound = ln_bound.exp();
    let (record, p, se) = mc_record(&dist, n, theta, trials, seed);
    let zn = dist.z().powi(n as i32);
    let slack = 3.0 * se.max(1.0 / trials as f64);
    let chain_holds = p <= bound + slack && record.value <= zn * (bound + slack);
    Ok(BoundChain {
        n,
        s,
        theta,
        r_n: r,
        q_tail,
        ln_binomial_bound: ln_bound,
        binomial_bound: bound,
        probability_mc: p,
        probability_se: se,
        z: dist.z(),
        s_mc: record.value,
        s_bound: zn * bound,
        guard_assumed: r < m_s,
        chain_holds,
        trials,
        seed,
    })
}

/// `#{i : x_i ≥ t}`.
pub fn count_at_least(xs: &[u64], t: u64) -> usize {
    xs.iter().filter(|&&x| x >= t).count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n_max: usize,
    pub value_max: u64,
    pub tuples_checked: u64,
    /// First `(tuple, m)` with `#{i : x_i ≥ ⌈m/2⌉} < ⌈m/2⌉`.
    pub counterexample: Option<(Vec<u64>, u64)>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Exhaustive check over all tuples in `[1, value_max]^n`, `n ≤ n_max`, and
/// every `m ≤ #distinct`, that `#{i : x_i ≥ ⌈m/2⌉} ≥ ⌈m/2⌉`.
pub fn distinct_forces_large_check(n_max: usize, value_max: u64) -> LemmaReport {
    let mut report = LemmaReport { n_max, value_max, tuples_checked: 0, counterexample: None };
    if value_max == 0 {
        return report;
    }
    for n in 1..=n_max {
        let mut xs = vec![1u64; n];
        loop {
            report.tuples_checked += 1;
            let mut sorted = xs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            for m in 1..=sorted.len() as u64 {
                let h = m.div_ceil(2);
                if (count_at_least(&xs, h) as u64) < h {
                    report.counterexample = Some((xs.clone(), m));
                    return report;
                }
            }
            // odometer step
            let mut i = 0;
            while i < n && xs[i] == value_max {
                xs[i] = 1;
                i += 1;
            }
            if i == n {
                break;
            }
            xs[i] += 1;
        }
    }
    report
}

//! Distinct-digit counts `D_n` and the `n^{1/ρ}` occupancy law.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Result};
use crate::rng::{open01, substream};
use crate::weights::WeightModel;

const DENSE_BITS: u64 = 1 << 16;

/// Streaming distinct counter: a dense bitmap for small digits, a hash set above.
#[derive(Debug, Clone)]
pub struct DistinctCounter {
    dense: Vec<u64>,
    sparse: HashSet<u64>,
    count: u64,
    time: u64,
    first_seen: Option<HashMap<u64, u64>>,
}

impl Default for DistinctCounter {
    fn default() -> Self {
        Self::new()
    }
}

impl DistinctCounter {
    pub fn new() -> Self {
        DistinctCounter {
            dense: vec![0; (DENSE_BITS / 64) as usize],
            sparse: HashSet::new(),
            count: 0,
            time: 0,
            first_seen: None,
        }
    }

    /// Counter that also records the first time each digit appears.
    pub fn with_first_occurrences() -> Self {
        DistinctCounter { first_seen: Some(HashMap::new()), ..Self::new() }
    }

    /// Feeds one digit; returns whether it was new.
    #[inline]
    pub fn feed(&mut self, digit: u64) -> bool {
        self.time += 1;
        let fresh = if digit < DENSE_BITS {
            let (w, b) = ((digit / 64) as usize, digit % 64);
            let fresh = self.dense[w] & (1 << b) == 0;
            self.dense[w] |= 1 << b;
            fresh
        } else {
            self.sparse.insert(digit)
        };
        if fresh {
            self.count += 1;
            if let Some(map) = &mut self.first_seen {
                map.insert(digit, self.time);
            }
        }
        fresh
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Number of digits fed so far.
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn contains(&self, digit: u64) -> bool {
        if digit < DENSE_BITS {
            self.dense[(digit / 64) as usize] & (1 << (digit % 64)) != 0
        } else {
            self.sparse.contains(&digit)
        }
    }

    pub fn first_occurrence(&self, digit: u64) -> Option<u64> {
        self.first_seen.as_ref()?.get(&digit).copied()
    }

    pub fn first_occurrences(&self) -> Option<&HashMap<u64, u64>> {
        self.first_seen.as_ref()
    }
}

/// `Γ(1 − 1/ρ) C^{1/ρ}`, the constant of `D_n ~ Γ(1−1/ρ)(Cn)^{1/ρ}` when `p_k ~ C k^{-ρ}`.
pub fn karlin_constant(rho: f64, c: f64) -> Result<f64> {
    if !(rho > 1.0 && rho.is_finite()) {
        return domain(format!("Karlin constant needs rho > 1, got {rho}"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return domain(format!("Karlin constant needs C > 0, got {c}"));
    }
    Ok(gamma(1.0 - 1.0 / rho) * c.powf(1.0 / rho))
}

/// `E D_n = Σ_k (1 − (1 − p_k)^n)`.
pub fn expected_distinct(model: &WeightModel, n: u64) -> Result<f64> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let nf = n as f64;
    Ok(model.transformed_tail_sum(1, |p| -(nf * (-p).ln_1p()).exp_m1()))
}

/// Per-checkpoint statistics of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub checkpoint: u64,
    /// Sample mean of `D_c / c^{1/ρ}`.
    pub mean: f64,
    /// Sample standard deviation of `D_c / c^{1/ρ}`.
    pub sd: f64,
    pub mean_distinct: f64,
    pub sd_distinct: f64,
    /// Exact `E D_c`.
    pub exact_expectation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub model: String,
    pub rho: f64,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub checkpoints: Vec<CheckpointStat>,
    pub karlin_constant: Option<f64>,
}

impl LawReport {
    pub fn last(&self) -> &CheckpointStat {
        self.checkpoints.last().expect("at least one checkpoint")
    }
}

/// Powers of two below `n`, then `n`.
pub fn default_checkpoints(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..64).map(|i| 1u64 << i).take_while(|&c| c < n).collect();
    out.push(n);
    out
}

/// `D_c` at each checkpoint for one iid digit stream.
pub fn simulate_trial(model: &WeightModel, checkpoints: &[u64], seed: u64, trial: u64) -> Vec<u64> {
    let mut rng = substream(seed, trial);
    let sampler = model.sampler();
    let mut counter = DistinctCounter::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut t = 0u64;
    for &c in checkpoints {
        while t < c {
            counter.feed(sampler.sample(open01(&mut rng)));
            t += 1;
        }
        out.push(counter.count());
    }
    out
}

/// Monte Carlo check of the occupancy law; trial `i` uses substream `(seed, i)`.
pub fn monte_carlo_law(model: &WeightModel, n: u64, trials: u64, seed: u64) -> Result<LawReport> {
    if n == 0 || trials == 0 {
        return domain("n and trials must be at least 1");
    }
    let checkpoints = default_checkpoints(n);
    let runs: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|i| simulate_trial(model, &checkpoints, seed, i))
        .collect();
    let tf = trials as f64;
    let stats = checkpoints
        .iter()
        .enumerate()
        .map(|(ci, &c)| {
            let scale = (c as f64).powf(1.0 / model.rho());
            let (mut s, mut ss) = (0.0, 0.0);
            for run in &runs {
                let d = run[ci] as f64;
                s += d;
                ss += d * d;
            }
            let mean_d = s / tf;
            let var_d = if trials > 1 { ((ss - s * mean_d) / (tf - 1.0)).max(0.0) } else { 0.0 };
            Ok(CheckpointStat {
                checkpoint: c,
                mean: mean_d / scale,
                sd: var_d.sqrt() / scale,
                mean_distinct: mean_d,
                sd_distinct: var_d.sqrt(),
                exact_expectation: expected_distinct(model, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let karlin = model.tail_constant().map(|c| karlin_constant(model.rho(), c)).transpose()?;
    Ok(LawReport {
        model: model.to_string(),
        rho: model.rho(),
        n,
        trials,
        seed,
        checkpoints: stats,
        karlin_constant: karlin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(seq: &[u64]) -> u64 {
        let mut c = DistinctCounter::new();
        for &d in seq {
            c.feed(d);
        }
        c.count()
    }

    #[test]
    fn counter_examples() {
        assert_eq!(count(&[7, 15, 1, 292, 1, 1, 1, 2]), 5);
        assert_eq!(count(&[1, 1, 1, 1]), 1);
        // partial quotients of pi - 3
        let pq = [7, 15, 1, 292, 1, 1, 1, 2, 1, 3, 1, 14, 2, 1, 1, 2, 2, 2, 2, 1, 84, 2, 1, 1, 15, 3, 13, 1, 4, 2];
        assert_eq!(count(&pq), 10);
    }

    #[test]
    fn counter_sparse_region_and_first_times() {
        let mut c = DistinctCounter::with_first_occurrences();
        for d in [5, 1 << 40, 5, u64::MAX, 1 << 40, 65_535, 65_536] {
            c.feed(d);
        }
        assert_eq!(c.count(), 5);
        assert_eq!(c.first_occurrence(1 << 40), Some(2));
        assert_eq!(c.first_occurrence(u64::MAX), Some(4));
        assert_eq!(c.first_occurrence(65_536), Some(7));
        assert!(c.contains(65_535) && !c.contains(6));
    }

    #[test]
    fn karlin_values() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((karlin_constant(2.0, 1.0).unwrap() / sqrt_pi - 1.0).abs() < 1e-12);
        assert!((karlin_constant(2.0, 4.0).unwrap() / (2.0 * sqrt_pi) - 1.0).abs() < 1e-12);
        // Γ(1/3)Γ(2/3) = 2π/√3 and Γ(1/3) = 2.678938534707747...
        let g23 = 2.0 * std::f64::consts::PI / 3f64.sqrt() / 2.678_938_534_707_747_6;
        let c = WeightModel::power(3.0).unwrap().tail_constant().unwrap();
        let k = karlin_constant(3.0, c).unwrap();
        assert!((k / (g23 * c.cbrt()) - 1.0).abs() < 1e-12);
        assert!((k - 1.2734).abs() < 2e-4, "{k}");
        assert!(karlin_constant(1.0, 1.0).is_err());
    }

    #[test]
    fn expected_distinct_examples() {
        for m in [WeightModel::luroth(), WeightModel::power(3.0).unwrap()] {
            assert!((expected_distinct(&m, 1).unwrap() - 1.0).abs() < 1e-12);
        }
        let m = WeightModel::luroth();
        // direct summation oracle
        let direct = |n: u64, terms: u64| -> f64 {
            (1..=terms).map(|k| 1.0 - (1.0 - 1.0 / (k * (k + 1)) as f64).powf(n as f64)).sum::<f64>()
        };
        let e100 = expected_distinct(&m, 100).unwrap();
        let oracle = direct(100, 10_000_000) + 100.0 / 10_000_001.0;
        assert!((e100 - oracle).abs() < 1e-6, "{e100} vs {oracle}");
        assert!((e100 - 16.757_733_546_404).abs() < 1e-9);
        assert!(e100 < (std::f64::consts::PI * 100.0).sqrt());
        let e6 = expected_distinct(&m, 1_000_000).unwrap();
        let lead = (std::f64::consts::PI * 1e6).sqrt();
        assert!(e6 <= lead && e6 >= lead - 40.0, "{e6}");
    }

    #[test]
    fn checkpoints_are_increasing() {
        assert_eq!(default_checkpoints(1), vec![1]);
        assert_eq!(default_checkpoints(8), vec![1, 2, 4, 8]);
        assert_eq!(default_checkpoints(10), vec![1, 2, 4, 8, 10]);
    }

    #[test]
    fn single_draw_has_one_distinct() {
        let r = monte_carlo_law(&WeightModel::luroth(), 1, 1000, 7).unwrap();
        assert_eq!(r.last().mean_distinct, 1.0);
        assert_eq!(r.last().sd_distinct, 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let m = WeightModel::power(2.5).unwrap();
        let a = monte_carlo_law(&m, 4096, 20, 3).unwrap();
        let b = monte_carlo_law(&m, 4096, 20, 3).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_law(&m, 4096, 20, 4).unwrap();
        assert_ne!(a.last().mean, c.last().mean);
    }

    #[test]
    fn increments_bounded() {
        let m = WeightModel::power(1.3).unwrap();
        let cps: Vec<u64> = (1..=5000).collect();
        let d = simulate_trial(&m, &cps, 5, 0);
        assert_eq!(d[0], 1);
        assert!(d.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= 1));
        assert!(d.iter().zip(&cps).all(|(&dn, &n)| dn <= n));
    }

    #[test]
    fn mean_tracks_expectation() {
        let m = WeightModel::luroth();
        let r = monte_carlo_law(&m, 10_000, 200, 12).unwrap();
        for s in &r.checkpoints {
            let se = s.sd_distinct / (r.trials as f64).sqrt();
            assert!((s.mean_distinct - s.exact_expectation).abs() <= 4.0 * se + 1e-9, "{s:?}");
        }
    }
}

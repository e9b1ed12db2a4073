//! Inverse-CDF digit samplers.
//!
//! A digit `k` is returned for `u ∈ (0,1)` when `Σ_{j<k} p_j ≤ u < Σ_{j≤k} p_j`.
//! The head of the law is tabulated exactly; beyond it the reflected
//! coordinate `v = 1 − u` is matched against tail masses on a geometric grid
//! of digits and interpolated log-log in between.

use std::sync::Arc;

use crate::numeric::CompensatedSum;

/// Digits below this bound are sampled from an exact cumulative table.
pub const HEAD_LEN: u64 = 1 << 14;

const KEYS_PER_OCTAVE: u32 = 8;
const LAST_KEY: u64 = 1 << 62;

#[derive(Debug)]
pub struct TableSampler {
    /// `head_cdf[k-1] = Σ_{j≤k} p_j` for `k ≤ head_cdf.len()`.
    head_cdf: Vec<f64>,
    /// `(k, ln k, ln tail(k))` on a geometric grid, `tail(k) = Σ_{j≥k} p_j`.
    tail_keys: Vec<(u64, f64, f64)>,
}

impl TableSampler {
    /// Tabulates a law from its point masses and tail masses.
    ///
    /// `finite` marks a law whose support ends with the head.
    pub fn build<W, T>(weight: W, tail: T, head_len: u64, finite: bool) -> Self
    where
        W: Fn(u64) -> f64,
        T: Fn(u64) -> f64,
    {
        let mut acc = CompensatedSum::new();
        let head_cdf = (1..=head_len)
            .map(|k| {
                acc.add(weight(k));
                acc.value()
            })
            .collect();
        let mut tail_keys = Vec::new();
        if !finite {
            let start = head_len + 1;
            let mut i = 0u32;
            loop {
                let kf = start as f64 * 2f64.powf(i as f64 / KEYS_PER_OCTAVE as f64);
                i += 1;
                if kf >= LAST_KEY as f64 {
                    break;
                }
                let k = kf.round() as u64;
                if tail_keys.last().is_some_and(|&(prev, _, _)| prev >= k) {
                    continue;
                }
                let t = tail(k);
                if !(t > 0.0) {
                    break;
                }
                tail_keys.push((k, (k as f64).ln(), t.ln()));
            }
        }
        TableSampler { head_cdf, tail_keys }
    }

    /// Cumulative mass `Σ_{j≤k} p_j` for tabulated `k` (0 for `k = 0`).
    pub fn cdf(&self, k: u64) -> Option<f64> {
        match k {
            0 => Some(0.0),
            _ => self.head_cdf.get(k as usize - 1).copied(),
        }
    }

    pub fn head_len(&self) -> u64 {
        self.head_cdf.len() as u64
    }

    pub fn sample(&self, u: f64) -> u64 {
        let head_end = *self.head_cdf.last().expect("non-empty head");
        if u < head_end || self.tail_keys.is_empty() {
            let idx = self.head_cdf.partition_point(|&c| c <= u);
            return (idx as u64 + 1).min(self.head_len());
        }
        let v = 1.0 - u;
        let lv = v.ln();
        let keys = &self.tail_keys;
        if lv >= keys[0].2 {
            return keys[0].0;
        }
        // First key whose tail mass drops below v.
        let hi = keys.partition_point(|&(_, _, lt)| lt >= lv);
        if hi == keys.len() {
            return keys[keys.len() - 1].0;
        }
        let (k0, lk0, lt0) = keys[hi - 1];
        let (k1, lk1, lt1) = keys[hi];
        let x = (lk0 + (lv - lt0) * (lk1 - lk0) / (lt1 - lt0)).exp();
        (x.floor() as u64).clamp(k0, k1 - 1)
    }
}

/// Sampler attached to a digit law.
#[derive(Debug, Clone)]
pub enum DigitSampler {
    /// Lüroth weights `1/(k(k+1))`: closed form `k = ⌊1/(1−u)⌋`.
    Luroth,
    Table(Arc<TableSampler>),
}

impl DigitSampler {
    #[inline]
    pub fn sample(&self, u: f64) -> u64 {
        match self {
            DigitSampler::Luroth => luroth_digit(u),
            DigitSampler::Table(t) => t.sample(u),
        }
    }
}

/// Canonical-layout Lüroth digit of `u ∈ [0, 1)`.
#[inline]
pub fn luroth_digit(u: f64) -> u64 {
    let k = (1.0 / (1.0 - u)).floor();
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

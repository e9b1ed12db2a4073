//! Forced-digit construction for sublinear distinctness profiles `f`.
//!
//! At a new-digit time `n` (where `f(n) = f(n−1) + 1`) the digit of rank
//! `b_n = K_n + f(n)` is forced; every other time draws a free digit of rank
//! `k ≤ K_n` with probability `p̃_k^{s_n}`, where `p̃` are the weights sorted
//! non-increasingly and `Σ_{k≤K_n} p̃_k^{s_n} = 1`.
//! Words are emitted in the model's own digit labels.

use std::collections::HashMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::DigitWord;
use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;
use crate::weights::{solve_tilt_exponent, ModelKind, WeightModel};

/// Cap on the `K*` search.
pub const K_STAR_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Sqrt,
    Power { beta: f64, c: f64 },
    Log { c: f64 },
    Table,
}

/// Integer profile `f(0..=horizon)` with `f(0) = 0`, admissible on its horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleProfile {
    values: Vec<u64>,
    pub provenance: Provenance,
}

/// Profile description accepted by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<u64>>,
    pub horizon: u64,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<AdmissibleProfile> {
        match self.kind.as_str() {
            "sqrt" => AdmissibleProfile::sqrt(self.horizon),
            "power" => {
                let beta = self.beta.ok_or_else(|| Error::Domain("power profile needs beta".into()))?;
                AdmissibleProfile::power(beta, self.c.unwrap_or(1.0), self.horizon)
            }
            "log" => AdmissibleProfile::log(self.c.unwrap_or(1.0), self.horizon),
            "table" => {
                let table = self.table.clone().ok_or_else(|| Error::Domain("table profile needs table".into()))?;
                AdmissibleProfile::from_table(table)
            }
            other => Err(Error::Parse(format!("unknown profile kind '{other}'"))),
        }
    }
}

impl AdmissibleProfile {
    /// `f(n) = ⌊√n⌋`.
    pub fn sqrt(horizon: u64) -> Result<Self> {
        make_admissible(|n| n.isqrt() as f64, horizon, Provenance::Sqrt)
    }

    /// Slope-limited envelope of `c·n^β`.
    pub fn power(beta: f64, c: f64, horizon: u64) -> Result<Self> {
        if !(beta > 0.0 && c > 0.0) {
            return domain("power profile needs beta > 0 and c > 0");
        }
        make_admissible(|n| c * (n as f64).powf(beta), horizon, Provenance::Power { beta, c })
    }

    /// Slope-limited envelope of `c·ln(1 + n)`.
    pub fn log(c: f64, horizon: u64) -> Result<Self> {
        if !(c > 0.0) {
            return domain("log profile needs c > 0");
        }
        make_admissible(|n| c * (n as f64).ln_1p(), horizon, Provenance::Log { c })
    }

    /// User table `f(1), …, f(horizon)`.
    pub fn from_table(table: Vec<u64>) -> Result<Self> {
        let mut values = Vec::with_capacity(table.len() + 1);
        values.push(0);
        values.extend(table);
        let p = AdmissibleProfile { values, provenance: Provenance::Table };
        p.validate()?;
        Ok(p)
    }

    pub fn horizon(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// `f(n)` for `n ≤ horizon`.
    pub fn f(&self, n: u64) -> u64 {
        self.values[n as usize]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn is_new_time(&self, n: u64) -> bool {
        n >= 1 && self.values[n as usize] > self.values[n as usize - 1]
    }

    fn validate(&self) -> Result<()> {
        let h = self.horizon();
        if h < 10 {
            return Err(Error::NotAdmissible("horizon must be at least 10".into()));
        }
        if let Some(n) = (1..=h as usize).find(|&n| self.values[n] < self.values[n - 1] || self.values[n] > self.values[n - 1] + 1) {
            return Err(Error::NotAdmissible(format!("increment f(n+1) - f(n) not in {{0, 1}} at n = {}", n - 1)));
        }
        if self.f(h) <= self.f(1) {
            return Err(Error::NotAdmissible("f is not unbounded on the horizon (f(horizon) = f(1))".into()));
        }
        let ratio = |n: u64| {
            let f = self.f(n) as f64;
            if f <= 1.0 { 0.0 } else { f * f.ln() / n as f64 }
        };
        let grid: Vec<u64> = (0..=10).map(|i| ((h as f64 / 10.0) * 10f64.powf(i as f64 / 10.0)).round() as u64).collect();
        let vals: Vec<f64> = grid.iter().map(|&n| ratio(n.clamp(1, h))).collect();
        let early = vals[..6].iter().copied().fold(f64::MIN, f64::max);
        let late = vals[6..].iter().copied().fold(f64::MIN, f64::max);
        let decreasing = vals[10] < vals[0] && late <= early;
        if !decreasing {
            return Err(Error::NotAdmissible(format!(
                "f(n) log f(n) / n -> 0 fails over the last decade of the horizon: {:.4} at n = {} vs {:.4} at n = {h}",
                vals[0], grid[0], vals[10]
            )));
        }
        Ok(())
    }
}

/// Slope-limited envelope `f(n) = min(f(n−1) + 1, ⌊g(n)⌋)`, then validated.
pub fn make_admissible<G: Fn(u64) -> f64>(g: G, horizon: u64, provenance: Provenance) -> Result<AdmissibleProfile> {
    let mut values = Vec::with_capacity(horizon as usize + 1);
    values.push(0u64);
    for n in 1..=horizon {
        let target = g(n);
        if !(target >= 0.0 && target.is_finite()) {
            return Err(Error::NotAdmissible(format!("g({n}) = {target} is not a nonnegative number")));
        }
        let prev = values[n as usize - 1];
        values.push((prev + 1).min(target.floor() as u64));
    }
    let p = AdmissibleProfile { values, provenance };
    p.validate()?;
    Ok(p)
}

/// Bijection between ranks (by non-increasing weight) and model digit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMap {
    head: Vec<u64>,
    inverse: HashMap<u64, u64>,
}

impl RankMap {
    pub fn for_model(model: &WeightModel) -> Self {
        // Labels from `tail_start` on have strictly decreasing weights.
        let tail_start = match model.kind() {
            ModelKind::ExplicitPrefix => model.spec().prefix.as_ref().map_or(0, |p| p.len() as u64) + 1,
            ModelKind::PowerLog => {
                let gamma = model.spec().gamma.unwrap_or(0.0);
                if gamma > 0.0 { (gamma / model.rho()).exp().ceil() as u64 + 1 } else { 1 }
            }
            _ => 1,
        };
        let mut exceptional: Vec<u64> = (1..tail_start).collect();
        exceptional.sort_by(|&a, &b| model.p(b).total_cmp(&model.p(a)).then(a.cmp(&b)));
        let mut head = Vec::new();
        let mut next_tail = tail_start;
        for &e in &exceptional {
            while model.p(next_tail) > model.p(e) {
                head.push(next_tail);
                next_tail += 1;
            }
            head.push(e);
        }
        let inverse = head.iter().enumerate().map(|(i, &l)| (l, i as u64 + 1)).collect();
        RankMap { head, inverse }
    }

    pub fn label(&self, rank: u64) -> u64 {
        match self.head.get(rank as usize - 1) {
            Some(&l) => l,
            None => rank,
        }
    }

    pub fn rank(&self, label: u64) -> u64 {
        match self.inverse.get(&label) {
            Some(&r) => r,
            None => label,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.head.iter().enumerate().all(|(i, &l)| l == i as u64 + 1)
    }
}

/// Free-digit law on ranks `1..=K`: `p̃_k^{s_K}`.
#[derive(Debug, Clone)]
pub struct FreeLaw {
    pub k: u64,
    pub s: f64,
    pub residual: f64,
    pub weights: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl FreeLaw {
    /// Rank drawn from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.index.sample(rng) as u64 + 1
    }
}

#[derive(Debug, Clone)]
pub struct SublinearSchedule {
    pub profile: AdmissibleProfile,
    pub t: f64,
    pub model: WeightModel,
    pub ranks: RankMap,
    pub k_star: u64,
    /// First `n` with `K* ≤ ⌊√f(n)⌋`, if any on the horizon.
    pub n_t: Option<u64>,
    laws: HashMap<u64, Arc<FreeLaw>>,
}

pub fn build_sublinear_schedule(profile: AdmissibleProfile, t: f64, model: WeightModel) -> Result<SublinearSchedule> {
    if !(t > 0.0 && t < 1.0) {
        return domain(format!("t = {t} outside (0, 1)"));
    }
    let ranks = RankMap::for_model(&model);
    let sorted = |r: u64| model.p(ranks.label(r));
    let target = (1.0 + t) / 2.0;
    // s_K ≥ target iff Σ_{k≤K} p̃_k^target ≥ 1
    let mut acc = CompensatedSum::new();
    let mut k_star = 0u64;
    loop {
        k_star += 1;
        if k_star > K_STAR_CAP {
            return Err(Error::TiltThreshold { cap: K_STAR_CAP });
        }
        acc.add(sorted(k_star).powf(target));
        if k_star >= 2 && acc.value() >= 1.0 {
            break;
        }
    }
    let h = profile.horizon();
    let k_of = |n: u64| k_star.max(profile.f(n).isqrt());
    let n_t = (1..=h).find(|&n| k_star <= profile.f(n).isqrt());
    let mut laws = HashMap::new();
    let mut n = 1;
    while n <= h {
        let k = k_of(n);
        if let std::collections::hash_map::Entry::Vacant(e) = laws.entry(k) {
            let weights: Vec<f64> = (1..=k).map(sorted).collect();
            let root = solve_tilt_exponent(&weights);
            let tilted: Vec<f64> = weights.iter().map(|w| w.powf(root.x)).collect();
            let index = WeightedIndex::new(&tilted).map_err(|e| Error::Domain(e.to_string()))?;
            e.insert(Arc::new(FreeLaw { k, s: root.x, residual: root.residual, weights: tilted, index }));
        }
        n += 1;
    }
    Ok(SublinearSchedule { profile, t, model, ranks, k_star, n_t, laws })
}

/// One row of the ratio trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub n: u64,
    pub log_ratio: f64,
    pub free_part: f64,
    pub forced_part: f64,
}

impl SublinearSchedule {
    pub fn horizon(&self) -> u64 {
        self.profile.horizon()
    }

    /// `K_n = max{K*, ⌊√f(n)⌋}`.
    pub fn k_n(&self, n: u64) -> u64 {
        self.k_star.max(self.profile.f(n).isqrt())
    }

    /// `s_{K_n}`.
    pub fn s_n(&self, n: u64) -> f64 {
        self.law(n).s
    }

    pub fn law(&self, n: u64) -> &FreeLaw {
        &self.laws[&self.k_n(n)]
    }

    /// Distinct free laws, keyed by `K`.
    pub fn laws(&self) -> impl Iterator<Item = &FreeLaw> {
        self.laws.values().map(|l| l.as_ref())
    }

    /// Forced rank `b_n = K_n + f(n)` at a new-digit time.
    pub fn forced_rank(&self, n: u64) -> Option<u64> {
        self.profile.is_new_time(n).then(|| self.k_n(n) + self.profile.f(n))
    }

    pub fn forced_digit(&self, n: u64) -> Option<u64> {
        self.forced_rank(n).map(|r| self.ranks.label(r))
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, n_max: u64, rng: &mut R) -> Result<DigitWord> {
        if n_max > self.horizon() {
            return domain(format!("n_max = {n_max} beyond profile horizon {}", self.horizon()));
        }
        let digits = (1..=n_max)
            .map(|n| match self.forced_rank(n) {
                Some(r) => self.ranks.label(r),
                None => self.ranks.label(self.law(n).sample(rng)),
            })
            .collect();
        DigitWord::new(digits)
    }

    fn check_position(&self, n: u64, digit: u64) -> Result<Option<u64>> {
        let rank = self.ranks.rank(digit);
        match self.forced_rank(n) {
            Some(b) if b != rank => Err(Error::NotInSupport {
                position: n as usize,
                reason: format!("forced digit of rank {b} expected, found rank {rank}"),
            }),
            Some(_) => Ok(None),
            None if rank > self.k_n(n) => Err(Error::NotInSupport {
                position: n as usize,
                reason: format!("free digit of rank {rank} exceeds K_n = {}", self.k_n(n)),
            }),
            None => Ok(Some(rank)),
        }
    }

    /// `ln μ_t(C(word)) = Σ_{free i} s_i ln p_{d_i}`.
    pub fn mu_t_log_mass(&self, word: &DigitWord) -> Result<f64> {
        if word.len() as u64 > self.horizon() {
            return domain("word longer than the profile horizon");
        }
        let mut acc = CompensatedSum::new();
        for (i, &d) in word.digits().iter().enumerate() {
            let n = i as u64 + 1;
            if self.check_position(n, d)?.is_some() {
                acc.add(self.s_n(n) * self.model.ln_p(d));
            }
        }
        Ok(acc.value())
    }

    /// `ln μ_t(C_n) − t ln diam(C_n)` for `n = 0..=len`, split into free and forced parts.
    pub fn ratio_trace(&self, word: &DigitWord) -> Result<Vec<RatioRow>> {
        if word.len() as u64 > self.horizon() {
            return domain("word longer than the profile horizon");
        }
        let mut free = CompensatedSum::new();
        let mut forced = CompensatedSum::new();
        let mut rows = Vec::with_capacity(word.len() + 1);
        rows.push(RatioRow { n: 0, log_ratio: 0.0, free_part: 0.0, forced_part: 0.0 });
        for (i, &d) in word.digits().iter().enumerate() {
            let n = i as u64 + 1;
            let lp = self.model.ln_p(d);
            match self.check_position(n, d)? {
                Some(_) => free.add((self.s_n(n) - self.t) * lp),
                None => forced.add(-self.t * lp),
            }
            let (fp, fc) = (free.value(), forced.value());
            rows.push(RatioRow { n, log_ratio: fp + fc, free_part: fp, forced_part: fc });
        }
        Ok(rows)
    }
}

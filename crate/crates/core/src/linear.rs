//! Block-concatenation construction for a linear distinctness rate `θ`.
//!
//! Level `j` has block length `L_j = 2^j`, target `m_j = ⌈θL_j⌉` new digits,
//! alphabet `{N_j, …, 2N_j − 1}` with `N_j = 2^{j−1} max{m_1, k_1}`, and
//! admissible blocks whose prefix distinct counts follow `r(t) = ⌈θt⌉`.
//! The measure `μ` is uniform on admissible blocks at every level.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::codec::DigitWord;
use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;
use crate::rate::Rate;
use crate::weights::WeightModel;

/// Default number of levels.
pub const DEFAULT_DEPTH: usize = 20;

/// Prefix distinctness profile `r(t) = ⌈θt⌉` on `0..=L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockProfile {
    pub theta: Rate,
    pub len: u64,
    pub r: Vec<u64>,
    pub new_times: Vec<u64>,
}

pub fn profile(theta: Rate, len: u64) -> Result<BlockProfile> {
    if len == 0 {
        return domain("block length must be positive");
    }
    let r: Vec<u64> = (0..=len).map(|t| theta.ceil_mul(t)).collect();
    let new_times = (1..=len).filter(|&t| r[t as usize] > r[t as usize - 1]).collect();
    Ok(BlockProfile { theta, len, r, new_times })
}

impl BlockProfile {
    pub fn m(&self) -> u64 {
        self.r[self.len as usize]
    }
}

/// Exact and logarithmic size of a block set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCount {
    pub log: f64,
    pub exact: Option<u128>,
}

/// `#B = N!/(N−m)! · Π_{t∉I} r(t−1)`.
pub fn count_blocks(n: u64, len: u64, theta: Rate) -> Result<BlockCount> {
    let m = theta.ceil_mul(len);
    if n < m {
        return Err(Error::Infeasible { alphabet: n, required: m });
    }
    let mut repeats = CompensatedSum::new();
    let mut exact: Option<u128> = Some(1);
    for i in 0..m {
        exact = exact.and_then(|e| e.checked_mul((n - i) as u128));
    }
    for t in 1..=len {
        let (prev, cur) = (theta.ceil_mul(t - 1), theta.ceil_mul(t));
        if cur == prev {
            repeats.add((prev as f64).ln());
            exact = exact.and_then(|e| e.checked_mul(prev as u128));
        }
    }
    let falling = ln_gamma(n as f64 + 1.0) - ln_gamma((n - m) as f64 + 1.0);
    let log = match exact {
        Some(e) if e < (1u128 << 100) => (e as f64).ln(),
        _ => falling + repeats.value(),
    };
    Ok(BlockCount { log, exact })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLevel {
    pub j: usize,
    pub len: u64,
    pub m: u64,
    /// Alphabet `{alphabet_start, …, alphabet_start + alphabet_size − 1}`.
    pub alphabet_start: u64,
    pub alphabet_size: u64,
    pub count: BlockCount,
}

impl BlockLevel {
    pub fn alphabet_end(&self) -> u64 {
        self.alphabet_start + self.alphabet_size
    }

    pub fn in_alphabet(&self, d: u64) -> bool {
        (self.alphabet_start..self.alphabet_end()).contains(&d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSchedule {
    pub theta: Rate,
    pub k1: u64,
    pub levels: Vec<BlockLevel>,
}

/// The dyadic schedule with `j_max` levels.
pub fn build_schedule(theta: Rate, k1: u64, j_max: usize) -> Result<BlockSchedule> {
    if theta.num() == 0 || theta.num() > theta.den() {
        return domain(format!("theta = {theta} outside (0, 1]"));
    }
    if k1 == 0 || j_max == 0 {
        return domain("k1 and depth must be positive");
    }
    let base = theta.ceil_mul(2).max(k1);
    let fits = j_max < 62
        && 1u64.checked_shl(j_max as u32 - 1).and_then(|s| s.checked_mul(base)).and_then(|n| n.checked_mul(2)).is_some();
    if !fits {
        return Err(Error::Depth { depth: j_max });
    }
    let mut levels = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let n = (1u64 << (j - 1)) * base;
        levels.push(level(j, 1 << j, n, n, theta)?);
    }
    let schedule = BlockSchedule { theta, k1, levels };
    schedule.check_disjoint()?;
    Ok(schedule)
}

fn level(j: usize, len: u64, n: u64, start: u64, theta: Rate) -> Result<BlockLevel> {
    let count = count_blocks(n, len, theta)?;
    Ok(BlockLevel { j, len, m: theta.ceil_mul(len), alphabet_start: start, alphabet_size: n, count })
}

impl BlockSchedule {
    /// Non-dyadic schedule with stacked alphabets `1..`, for enumeration tests.
    pub fn custom(theta: Rate, shape: &[(u64, u64)]) -> Result<Self> {
        let mut start = 1u64;
        let mut levels = Vec::with_capacity(shape.len());
        for (i, &(len, n)) in shape.iter().enumerate() {
            if len == 0 || n == 0 {
                return domain("block length and alphabet size must be positive");
            }
            levels.push(level(i + 1, len, n, start, theta)?);
            start += n;
        }
        Ok(BlockSchedule { theta, k1: 1, levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `S_J = Σ_{j≤J} L_j`.
    pub fn total_len(&self, depth: usize) -> u64 {
        self.levels[..depth.min(self.depth())].iter().map(|l| l.len).sum()
    }

    fn check_disjoint(&self) -> Result<()> {
        for w in self.levels.windows(2) {
            if w[0].alphabet_end() > w[1].alphabet_start {
                return domain(format!("alphabets of levels {} and {} overlap", w[0].j, w[1].j));
            }
        }
        Ok(())
    }

    /// Uniform sample from the admissible blocks of level `j` (1-based).
    pub fn sample_block<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Result<Vec<u64>> {
        let lv = self.levels.get(j.wrapping_sub(1)).ok_or_else(|| Error::Domain(format!("no level {j}")))?;
        // Partial Fisher–Yates over alphabet offsets; `order[..r]` lists the symbols seen so far.
        let mut swaps: HashMap<u64, u64> = HashMap::new();
        let mut order: Vec<u64> = Vec::with_capacity(lv.m as usize);
        let mut block = Vec::with_capacity(lv.len as usize);
        for t in 1..=lv.len {
            let r_prev = self.theta.ceil_mul(t - 1);
            if self.theta.ceil_mul(t) > r_prev {
                let i = r_prev;
                let pick = rng.random_range(i..lv.alphabet_size);
                let vi = *swaps.get(&i).unwrap_or(&i);
                let vp = *swaps.get(&pick).unwrap_or(&pick);
                swaps.insert(pick, vi);
                let symbol = lv.alphabet_start + vp;
                order.push(symbol);
                block.push(symbol);
            } else {
                block.push(order[rng.random_range(0..r_prev) as usize]);
            }
        }
        Ok(block)
    }

    /// Concatenation of one block per level `1..=depth`.
    pub fn sample_point<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R) -> Result<DigitWord> {
        if depth > self.depth() {
            return domain(format!("depth {depth} beyond schedule depth {}", self.depth()));
        }
        let mut digits = Vec::with_capacity(self.total_len(depth) as usize);
        for j in 1..=depth {
            digits.extend(self.sample_block(j, rng)?);
        }
        DigitWord::new(digits)
    }

    /// `ln μ(C(word))`, extended to mid-block prefixes by completion counting.
    pub fn mu_log_mass(&self, word: &DigitWord) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        let digits = word.digits();
        let mut pos = 0usize;
        for lv in &self.levels {
            if pos == digits.len() {
                break;
            }
            let mut seen: HashSet<u64> = HashSet::new();
            for t in 1..=lv.len {
                let Some(&d) = digits.get(pos) else { break };
                pos += 1;
                let r_prev = self.theta.ceil_mul(t - 1);
                let fresh = self.theta.ceil_mul(t) > r_prev;
                let reason = if !lv.in_alphabet(d) {
                    Some(format!("digit {d} outside level-{} alphabet", lv.j))
                } else if fresh && seen.contains(&d) {
                    Some(format!("digit {d} repeats at a new-digit time"))
                } else if !fresh && !seen.contains(&d) {
                    Some(format!("digit {d} is new at a repeat time"))
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Err(Error::NotInSupport { position: pos, reason });
                }
                seen.insert(d);
                let choices = if fresh { lv.alphabet_size - r_prev } else { r_prev };
                acc.add(-(choices as f64).ln());
            }
        }
        if pos < digits.len() {
            return Err(Error::NotInSupport { position: pos + 1, reason: "word longer than the schedule".into() });
        }
        Ok(acc.value())
    }

    /// `ln μ(C) / ln diam(C)`.
    pub fn local_dimension(&self, model: &WeightModel, word: &DigitWord) -> Result<f64> {
        if word.is_empty() {
            return Err(Error::Undefined("local dimension of the empty word".into()));
        }
        let mass = self.mu_log_mass(word)?;
        let diam = word.digits().iter().map(|&d| model.ln_p(d)).collect::<CompensatedSum>().value();
        Ok(mass / diam)
    }

    /// `ln #B_j / (−ln diam)` for each level-`j` block of a sampled word.
    pub fn block_ratios(&self, model: &WeightModel, word: &DigitWord) -> Vec<f64> {
        let digits = word.digits();
        let mut out = Vec::new();
        let mut pos = 0usize;
        for lv in &self.levels {
            let end = pos + lv.len as usize;
            if end > digits.len() {
                break;
            }
            let diam: f64 = digits[pos..end].iter().map(|&d| model.ln_p(d)).sum();
            out.push(lv.count.log / -diam);
            pos = end;
        }
        out
    }

    /// `μ([a, b))` bracketed by fully-contained cylinders and boundary cylinders.
    pub fn interval_mass(&self, model: &WeightModel, a: f64, b: f64, depth_cap: usize) -> Result<MassBracket> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return domain(format!("interval [{a}, {b}) not inside [0, 1)"));
        }
        let mut walk = IntervalWalk {
            schedule: self,
            model,
            a,
            b,
            depth_cap,
            lower: CompensatedSum::new(),
            boundary: CompensatedSum::new(),
            deepest: 0,
        };
        let root = Node { left: 0.0, log_diam: 0.0, log_mass: 0.0, level: 0, t: 0, seen: Vec::new(), depth: 0 };
        walk.visit(root);
        let lower = walk.lower.value();
        let upper = lower + walk.boundary.value();
        Ok(MassBracket { lower, upper: upper.min(1.0), width: upper.min(1.0) - lower, depth_reached: walk.deepest })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBracket {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub depth_reached: usize,
}

struct Node {
    left: f64,
    log_diam: f64,
    log_mass: f64,
    /// Index of the level holding the next digit, and the position inside it.
    level: usize,
    t: u64,
    seen: Vec<u64>,
    depth: usize,
}

struct IntervalWalk<'a> {
    schedule: &'a BlockSchedule,
    model: &'a WeightModel,
    a: f64,
    b: f64,
    depth_cap: usize,
    lower: CompensatedSum,
    boundary: CompensatedSum,
    deepest: usize,
}

const MIN_LOG_DIAM: f64 = -27.631_021_115_928_547; // ln 1e-12

impl IntervalWalk<'_> {
    fn digit_at(&self, x: f64) -> u64 {
        let m = self.model;
        let mut k = m.sampler().sample(x.clamp(0.0, 1.0 - f64::EPSILON)).max(1);
        while k > 1 && x < m.left_endpoint(k) {
            k -= 1;
        }
        while x >= m.left_endpoint(k + 1) {
            k += 1;
        }
        k
    }

    fn visit(&mut self, node: Node) {
        self.deepest = self.deepest.max(node.depth);
        let diam = node.log_diam.exp();
        let (x0, x1) = (node.left, node.left + diam);
        if x1 <= self.a || x0 >= self.b {
            return;
        }
        let mass = node.log_mass.exp();
        if self.a <= x0 && x1 <= self.b {
            self.lower.add(mass);
            return;
        }
        let sched = self.schedule;
        let (level, t) = if node.level < sched.depth() && node.t == sched.levels[node.level].len {
            (node.level + 1, 0)
        } else {
            (node.level, node.t)
        };
        if level >= sched.depth() || node.depth >= self.depth_cap || node.log_diam < MIN_LOG_DIAM {
            self.boundary.add(mass);
            return;
        }
        let lv = &sched.levels[level];
        let theta = sched.theta;
        let r_prev = theta.ceil_mul(t);
        let fresh = theta.ceil_mul(t + 1) > r_prev;
        let seen: &[u64] = if t == 0 { &[] } else { &node.seen };
        let allowed = |d: u64| if fresh { lv.in_alphabet(d) && !seen.contains(&d) } else { seen.contains(&d) };
        let choices = if fresh { lv.alphabet_size - r_prev } else { r_prev };
        let child_log_mass = node.log_mass - (choices as f64).ln();
        // Normalized coordinates of [a, b) inside this cylinder.
        let u = ((self.a - x0) / diam).max(0.0);
        let v = ((self.b - x0) / diam).min(1.0);
        let k_u = self.digit_at(u);
        let k_v = if v >= 1.0 { u64::MAX } else { self.digit_at(v) };
        let m = self.model;
        let first_inside = if m.left_endpoint(k_u) >= u { k_u } else { k_u + 1 };
        let last_inside = if k_v == u64::MAX { u64::MAX } else { k_v - 1 };
        if first_inside <= last_inside {
            let n_inside = if fresh {
                let lo = first_inside.max(lv.alphabet_start);
                let hi = last_inside.min(lv.alphabet_end() - 1);
                let range = if lo <= hi { hi - lo + 1 } else { 0 };
                range - seen.iter().filter(|&&d| d >= lo && d <= hi).count() as u64
            } else {
                seen.iter().filter(|&&d| d >= first_inside && d <= last_inside).count() as u64
            };
            self.lower.add(n_inside as f64 * child_log_mass.exp());
        }
        let mut partial = Vec::with_capacity(2);
        if first_inside != k_u {
            partial.push(k_u);
        }
        if k_v != u64::MAX && m.left_endpoint(k_v) < v && !partial.contains(&k_v) {
            partial.push(k_v);
        }
        for d in partial {
            if !allowed(d) {
                continue;
            }
            let mut child_seen = seen.to_vec();
            if fresh {
                child_seen.push(d);
            }
            self.visit(Node {
                left: x0 + diam * m.left_endpoint(d),
                log_diam: node.log_diam + m.ln_p(d),
                log_mass: child_log_mass,
                level,
                t: t + 1,
                seen: child_seen,
                depth: node.depth + 1,
            });
        }
    }
}

/// Empirically smallest level from which every sampled block ratio stays above
/// `(1−δ)/(ρ+δ)`; valid on the sampled horizon only.
pub fn ratio_threshold_level(ratios: &[f64], rho: f64, delta: f64) -> Option<usize> {
    let bound = (1.0 - delta) / (rho + delta);
    let mut level = None;
    for (i, &r) in ratios.iter().enumerate().rev() {
        if r >= bound {
            level = Some(i + 1);
        } else {
            break;
        }
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn rate(s: &str) -> Rate {
        s.parse().unwrap()
    }

    /// Admissible blocks over `{1..=n}` of length `len` by brute force.
    fn enumerate(n: u64, len: u64, theta: Rate) -> Vec<Vec<u64>> {
        let total = n.pow(len as u32);
        let mut out = Vec::new();
        for code in 0..total {
            let mut c = code;
            let w: Vec<u64> = (0..len)
                .map(|_| {
                    let d = c % n + 1;
                    c /= n;
                    d
                })
                .collect();
            let mut seen = HashSet::new();
            let ok = w.iter().enumerate().all(|(i, d)| {
                seen.insert(*d);
                seen.len() as u64 == theta.ceil_mul(i as u64 + 1)
            });
            if ok {
                out.push(w);
            }
        }
        out
    }

    #[test]
    fn schedule_examples() {
        let s = build_schedule(rate("0.5"), 1, 3).unwrap();
        let m: Vec<u64> = s.levels.iter().map(|l| l.m).collect();
        let n: Vec<u64> = s.levels.iter().map(|l| l.alphabet_size).collect();
        assert_eq!((m, n.clone()), (vec![1, 2, 4], vec![1, 2, 4]));
        let starts: Vec<u64> = s.levels.iter().map(|l| l.alphabet_start).collect();
        assert_eq!(starts, vec![1, 2, 4]);
        let s = build_schedule(rate("1"), 1, 2).unwrap();
        assert_eq!(s.levels.iter().map(|l| (l.m, l.alphabet_size)).collect::<Vec<_>>(), vec![(2, 2), (4, 4)]);
        let s = build_schedule(rate("0.5"), 3, 2).unwrap();
        assert_eq!(s.levels.iter().map(|l| l.alphabet_size).collect::<Vec<_>>(), vec![3, 6]);
        for j in 1..=3 {
            assert_eq!(build_schedule(rate("0.3"), 2, j).unwrap().total_len(j), (1 << (j + 1)) - 2);
        }
        assert!(matches!(build_schedule(rate("0.5"), 1, 70), Err(Error::Depth { .. })));
        assert!(build_schedule(Rate::new(0, 1).unwrap(), 1, 3).is_err());
    }

    #[test]
    fn profile_examples() {
        let p = profile(rate("0.5"), 8).unwrap();
        assert_eq!(&p.r[1..], &[1, 1, 2, 2, 3, 3, 4, 4]);
        assert_eq!(p.new_times, vec![1, 3, 5, 7]);
        assert_eq!(profile(rate("1"), 4).unwrap().new_times, vec![1, 2, 3, 4]);
        let p = profile(rate("0.3"), 10).unwrap();
        assert_eq!((p.m(), p.new_times.len()), (3, 3));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_blocks(3, 2, rate("1")).unwrap().exact, Some(6));
        assert_eq!(count_blocks(2, 4, rate("0.5")).unwrap().exact, Some(4));
        let n = enumerate(4, 6, rate("0.5")).len() as u128;
        assert_eq!(count_blocks(4, 6, rate("0.5")).unwrap().exact, Some(n));
        assert!(matches!(count_blocks(1, 4, rate("1")), Err(Error::Infeasible { alphabet: 1, required: 4 })));
    }

    #[test]
    fn large_count_uses_logs() {
        let c = count_blocks(1 << 19, 1 << 20, rate("0.5")).unwrap();
        assert!(c.exact.is_none());
        let direct: f64 = (1..=(1u64 << 20))
            .map(|t| {
                let th = rate("0.5");
                let rp = th.ceil_mul(t - 1);
                if th.ceil_mul(t) > rp { (((1u64 << 19) - rp) as f64).ln() } else { (rp as f64).ln() }
            })
            .sum();
        assert!((c.log - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn sampled_blocks_are_uniform() {
        let s = BlockSchedule::custom(rate("0.5"), &[(4, 2)]).unwrap();
        let mut rng = substream(3, 0);
        let mut hist: HashMap<Vec<u64>, u32> = HashMap::new();
        let n = 100_000;
        for _ in 0..n {
            *hist.entry(s.sample_block(1, &mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(hist.len(), 4);
        let e = n as f64 / 4.0;
        let chi2: f64 = hist.values().map(|&o| (o as f64 - e).powi(2) / e).sum();
        // 3 degrees of freedom, 99.9% quantile
        assert!(chi2 < 16.27, "{chi2}");
    }

    #[test]
    fn full_rate_blocks_have_distinct_symbols() {
        let s = build_schedule(rate("1"), 1, 6).unwrap();
        let mut rng = substream(5, 1);
        for j in 1..=6 {
            let b = s.sample_block(j, &mut rng).unwrap();
            let set: HashSet<_> = b.iter().collect();
            assert_eq!(set.len(), b.len());
        }
    }

    #[test]
    fn sandwich_and_boundary_profile() {
        let theta = rate("0.5");
        let s = build_schedule(theta, 1, 10).unwrap();
        let w1 = s.sample_point(10, &mut substream(1, 0)).unwrap();
        let w2 = s.sample_point(10, &mut substream(2, 0)).unwrap();
        assert_ne!(w1, w2);
        let (d1, d2) = (w1.distinct_profile(), w2.distinct_profile());
        for (n, &d) in d1.iter().enumerate() {
            let n = n as u64 + 1;
            assert!(theta.mul_le(n, d) && theta.lt_mul_plus(d, n, 1 + n.ilog2() as u64));
        }
        let mut boundary = 0u64;
        for j in 1..=10 {
            boundary += s.levels[j - 1].m;
            let sj = s.total_len(j) as usize;
            assert_eq!((d1[sj - 1], d2[sj - 1]), (boundary, boundary));
        }
    }

    #[test]
    fn mu_block_uniformity() {
        let theta = rate("0.5");
        let s = BlockSchedule::custom(theta, &[(6, 4)]).unwrap();
        let total: f64 = enumerate(4, 6, theta)
            .into_iter()
            .map(|b| s.mu_log_mass(&DigitWord::new(b).unwrap()).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mu_mid_block_matches_completion_sum() {
        let theta = rate("0.5");
        let s = BlockSchedule::custom(theta, &[(6, 4)]).unwrap();
        let blocks = enumerate(4, 6, theta);
        let per_block = 1.0 / blocks.len() as f64;
        for prefix_len in 0..=6 {
            let prefix = &blocks[blocks.len() / 3][..prefix_len];
            let brute = blocks.iter().filter(|b| &b[..prefix_len] == prefix).count() as f64 * per_block;
            let got = s.mu_log_mass(&DigitWord::new(prefix.to_vec()).unwrap()).unwrap().exp();
            assert!((got - brute).abs() < 1e-12, "len {prefix_len}");
        }
    }

    #[test]
    fn mu_additivity_two_levels() {
        let theta = rate("0.5");
        let s = BlockSchedule::custom(theta, &[(2, 2), (4, 3)]).unwrap();
        let w = s.sample_point(2, &mut substream(9, 0)).unwrap();
        for len in 0..w.len() {
            let prefix = w.prefix(len);
            let parent = s.mu_log_mass(&prefix).unwrap().exp();
            let children: f64 = (1..=6u64)
                .filter_map(|d| {
                    let mut v = prefix.digits().to_vec();
                    v.push(d);
                    s.mu_log_mass(&DigitWord::new(v).unwrap()).ok()
                })
                .map(f64::exp)
                .sum();
            assert!((parent - children).abs() < 1e-12);
        }
    }

    #[test]
    fn mu_rejects_outside_support() {
        let s = BlockSchedule::custom(rate("0.5"), &[(4, 2)]).unwrap();
        assert_eq!(s.mu_log_mass(&DigitWord::empty()).unwrap(), 0.0);
        for bad in [vec![1, 2], vec![3], vec![1, 1, 1, 1, 1]] {
            let err = s.mu_log_mass(&DigitWord::new(bad).unwrap()).unwrap_err();
            assert!(matches!(err, Error::NotInSupport { .. }));
        }
    }

    #[test]
    fn local_dimension_behaviour() {
        let m = WeightModel::luroth();
        let s = build_schedule(rate("0.5"), 1, 14).unwrap();
        assert!(matches!(s.local_dimension(&m, &DigitWord::empty()), Err(Error::Undefined(_))));
        let w = s.sample_point(14, &mut substream(1, 0)).unwrap();
        let dims: Vec<f64> = (1..=14).map(|j| s.local_dimension(&m, &w.prefix(s.total_len(j) as usize)).unwrap()).collect();
        // level 1 holds a single block, so its mass is 1
        assert_eq!(dims[0], 0.0);
        assert!(dims[1..].iter().all(|&d| d > 0.0));
        assert!((0.35..=0.65).contains(&dims[13]), "{dims:?}");
        let diffs: Vec<f64> = dims.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(diffs[5..].windows(2).all(|w| w[1] <= w[0]), "{diffs:?}");
    }

    #[test]
    fn ratio_estimate_threshold() {
        let m = WeightModel::luroth();
        let s = build_schedule(rate("0.5"), 1, 16).unwrap();
        let w = s.sample_point(16, &mut substream(4, 0)).unwrap();
        let ratios = s.block_ratios(&m, &w);
        let j = ratio_threshold_level(&ratios, 2.0, 0.2).unwrap();
        assert!(j <= 12, "{ratios:?}");
    }

    #[test]
    fn interval_mass_trivial_cases() {
        let m = WeightModel::luroth();
        let s = build_schedule(rate("0.5"), 1, 8).unwrap();
        let all = s.interval_mass(&m, 0.0, 1.0, 50).unwrap();
        assert_eq!((all.lower, all.upper), (1.0, 1.0));
        let point = s.sample_point(3, &mut substream(2, 0)).unwrap();
        let len = (1..=point.len())
            .take_while(|&l| crate::codec::cylinder(&m, &point.prefix(l)).unwrap().diam() > 1e-6)
            .last()
            .unwrap();
        let w = point.prefix(len);
        let c = crate::codec::cylinder(&m, &w).unwrap();
        let br = s.interval_mass(&m, c.left, c.right(), 200).unwrap();
        let mu = s.mu_log_mass(&w).unwrap().exp();
        assert!(br.lower <= mu * (1.0 + 1e-9) && mu <= br.upper * (1.0 + 1e-9));
        assert!(br.width < 1e-9 * mu.max(1e-300) + 1e-15, "{br:?} vs {mu}");
    }

    #[test]
    fn interval_mass_contains_brute_force() {
        let m = WeightModel::luroth();
        let theta = rate("0.5");
        let s = BlockSchedule::custom(theta, &[(2, 2), (4, 3)]).unwrap();
        // every depth-2 word, mass spread uniformly inside its cylinder
        let mut words = Vec::new();
        for b1 in enumerate(2, 2, theta) {
            for b2 in enumerate(3, 4, theta) {
                let mut v = b1.clone();
                v.extend(b2.iter().map(|d| d + 2));
                words.push(DigitWord::new(v).unwrap());
            }
        }
        let mut rng = substream(77, 0);
        for _ in 0..50 {
            let a: f64 = rng.random::<f64>() * 0.8;
            let b = a + rng.random::<f64>() * 0.05 + 1e-6;
            let brute: f64 = words
                .iter()
                .map(|w| {
                    let c = crate::codec::cylinder(&m, w).unwrap();
                    let overlap = (c.right().min(b) - c.left.max(a)).max(0.0);
                    s.mu_log_mass(w).unwrap().exp() * overlap / c.diam()
                })
                .sum();
            let br = s.interval_mass(&m, a, b, 64).unwrap();
            assert!(br.lower <= brute + 1e-9 && brute <= br.upper + 1e-9, "[{a},{b}): {br:?} vs {brute}");
        }
    }
}

//! Branch-weight models `(p_k)_{k≥1}` with regularly varying tails.
//!
//! Every model carries a declared tail index `ρ` and a closed-form slowly
//! varying factor `L`, chosen so that `p_k · k^ρ / L(k) = 1` exactly beyond
//! any finite prefix:
//!
//! | kind              | `p_k`                              | `L(k)`                     |
//! |-------------------|------------------------------------|----------------------------|
//! | `luroth`          | `1/(k(k+1))`                       | `(1 + 1/k)^{-1}`           |
//! | `power`           | `k^{-ρ}/ζ(ρ)`                      | `1/ζ(ρ)`                   |
//! | `power-log`       | `k^{-ρ} ln(k+1)^γ / c`             | `ln(k+1)^γ / c`            |
//! | `explicit-prefix` | given prefix, then `c·k^{-ρ}`      | `c`                        |
//!
//! Digits are indexed from 1; the classical Lüroth digit is `k + 1`.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{bisect_decreasing, smooth_tail_sum, CompensatedSum, Root, EULER_MACLAURIN_START};
use crate::sampler::{DigitSampler, TableSampler, HEAD_LEN};

/// Serializable model description, as accepted by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Luroth,
    Power,
    PowerLog,
    ExplicitPrefix,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Luroth => "luroth",
            ModelKind::Power => "power",
            ModelKind::PowerLog => "power-log",
            ModelKind::ExplicitPrefix => "explicit-prefix",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "luroth" => Ok(ModelKind::Luroth),
            "power" => Ok(ModelKind::Power),
            "power-log" => Ok(ModelKind::PowerLog),
            "explicit-prefix" => Ok(ModelKind::ExplicitPrefix),
            other => Err(Error::Parse(format!("unknown model kind '{other}'"))),
        }
    }
}

impl ModelSpec {
    pub fn luroth() -> Self {
        ModelSpec { kind: ModelKind::Luroth, rho: None, gamma: None, prefix: None }
    }

    pub fn power(rho: f64) -> Self {
        ModelSpec { kind: ModelKind::Power, rho: Some(rho), gamma: None, prefix: None }
    }

    pub fn power_log(rho: f64, gamma: f64) -> Self {
        ModelSpec { kind: ModelKind::PowerLog, rho: Some(rho), gamma: Some(gamma), prefix: None }
    }

    pub fn explicit_prefix(prefix: Vec<f64>, rho: f64) -> Self {
        ModelSpec { kind: ModelKind::ExplicitPrefix, rho: Some(rho), gamma: None, prefix: Some(prefix) }
    }

    pub fn build(&self) -> Result<WeightModel> {
        WeightModel::from_spec(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Luroth,
    Power,
    PowerLog { gamma: f64 },
    ExplicitPrefix { prefix: Arc<[f64]>, prefix_mass: f64 },
}

/// An immutable branch-weight model.
#[derive(Debug, Clone)]
pub struct WeightModel {
    spec: ModelSpec,
    family: Family,
    rho: f64,
    /// Multiplier of the closed-form tail: `1/ζ(ρ)`, `1/c`, or the prefix tail coefficient.
    norm: f64,
    ln_norm: f64,
    digit_count_hint: Option<u64>,
    sampler: DigitSampler,
}

impl PartialEq for WeightModel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl WeightModel {
    pub fn luroth() -> Self {
        Self::from_spec(&ModelSpec::luroth()).expect("luroth model is always valid")
    }

    pub fn power(rho: f64) -> Result<Self> {
        Self::from_spec(&ModelSpec::power(rho))
    }

    pub fn power_log(rho: f64, gamma: f64) -> Result<Self> {
        Self::from_spec(&ModelSpec::power_log(rho, gamma))
    }

    pub fn explicit_prefix(prefix: Vec<f64>, rho: f64) -> Result<Self> {
        Self::from_spec(&ModelSpec::explicit_prefix(prefix, rho))
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let heavy_rho = |spec: &ModelSpec| -> Result<f64> {
            let rho = spec.rho.ok_or_else(|| Error::Domain(format!("{} model needs rho", spec.kind)))?;
            if !(rho.is_finite() && rho > 1.0) {
                return domain(format!("{} model needs finite rho > 1, got {rho}", spec.kind));
            }
            Ok(rho)
        };
        let (family, rho, norm) = match spec.kind {
            ModelKind::Luroth => {
                if let Some(rho) = spec.rho {
                    if rho != 2.0 {
                        return domain(format!("luroth model has rho = 2, got {rho}"));
                    }
                }
                (Family::Luroth, 2.0, 1.0)
            }
            ModelKind::Power => {
                let rho = heavy_rho(spec)?;
                let zeta = power_tail(rho, 1);
                (Family::Power, rho, 1.0 / zeta)
            }
            ModelKind::PowerLog => {
                let rho = heavy_rho(spec)?;
                let gamma = spec.gamma.unwrap_or(0.0);
                if !gamma.is_finite() {
                    return domain("power-log model needs finite gamma");
                }
                let f = |x: f64| x.powf(-rho) * (x + 1.0).ln().powf(gamma);
                let total = smooth_tail_sum(|k| f(k as f64), f, 1, EULER_MACLAURIN_START);
                (Family::PowerLog { gamma }, rho, 1.0 / total)
            }
            ModelKind::ExplicitPrefix => {
                let rho = heavy_rho(spec)?;
                let prefix = spec.prefix.clone().unwrap_or_default();
                if prefix.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
                    return domain("prefix probabilities must be positive and finite");
                }
                let prefix_mass = prefix.iter().copied().collect::<CompensatedSum>().value();
                if prefix_mass >= 1.0 {
                    return domain(format!("prefix mass {prefix_mass} leaves no room for a tail"));
                }
                let c = (1.0 - prefix_mass) / power_tail(rho, prefix.len() as u64 + 1);
                (Family::ExplicitPrefix { prefix: prefix.into(), prefix_mass }, rho, c)
            }
        };
        let mut model = WeightModel {
            spec: spec.clone(),
            family,
            rho,
            norm,
            ln_norm: norm.ln(),
            digit_count_hint: None,
            sampler: DigitSampler::Luroth,
        };
        if model.family != Family::Luroth {
            let table = TableSampler::build(|k| model.p(k), |k| model.tail_mass(k), HEAD_LEN, false);
            model.sampler = DigitSampler::Table(Arc::new(table));
        }
        Ok(model)
    }

    pub fn with_digit_count_hint(mut self, hint: u64) -> Self {
        self.digit_count_hint = Some(hint.max(1));
        self
    }

    pub fn digit_count_hint(&self) -> Option<u64> {
        self.digit_count_hint
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_luroth(&self) -> bool {
        self.family == Family::Luroth
    }

    fn prefix(&self) -> &[f64] {
        match &self.family {
            Family::ExplicitPrefix { prefix, .. } => prefix,
            _ => &[],
        }
    }

    /// `p_k`; `k = 0` is a domain error.
    pub fn weight(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return domain("digits start at 1");
        }
        Ok(self.p(k))
    }

    /// `ln p_k`; `k = 0` is a domain error.
    pub fn log_weight(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return domain("digits start at 1");
        }
        Ok(self.ln_p(k))
    }

    /// Unchecked `p_k` for `k ≥ 1`.
    #[inline]
    pub fn p(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        match &self.family {
            Family::Luroth => 1.0 / (k as f64 * (k as f64 + 1.0)),
            Family::Power => self.norm * (k as f64).powf(-self.rho),
            Family::PowerLog { gamma } => {
                let x = k as f64;
                self.norm * x.powf(-self.rho) * (x + 1.0).ln().powf(*gamma)
            }
            Family::ExplicitPrefix { prefix, .. } => match prefix.get(k as usize - 1) {
                Some(&p) => p,
                None => self.norm * (k as f64).powf(-self.rho),
            },
        }
    }

    /// Unchecked `ln p_k` for `k ≥ 1`.
    #[inline]
    pub fn ln_p(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        let x = k as f64;
        match &self.family {
            Family::Luroth => -(2.0 * x.ln() + (1.0 / x).ln_1p()),
            Family::Power => self.ln_norm - self.rho * x.ln(),
            Family::PowerLog { gamma } => self.ln_norm - self.rho * x.ln() + gamma * (x + 1.0).ln().ln(),
            Family::ExplicitPrefix { prefix, .. } => match prefix.get(k as usize - 1) {
                Some(&p) => p.ln(),
                None => self.ln_norm - self.rho * x.ln(),
            },
        }
    }

    /// Smooth extension of `p` to reals beyond the prefix.
    fn density(&self, x: f64) -> f64 {
        match &self.family {
            Family::Luroth => 1.0 / (x * (x + 1.0)),
            Family::Power | Family::ExplicitPrefix { .. } => self.norm * x.powf(-self.rho),
            Family::PowerLog { gamma } => self.norm * x.powf(-self.rho) * (x + 1.0).ln().powf(*gamma),
        }
    }

    fn em_start(&self) -> u64 {
        EULER_MACLAURIN_START.max(self.prefix().len() as u64 + 1)
    }

    /// The slowly varying factor `L(k)` attached to this model.
    pub fn slowly_varying(&self, k: u64) -> f64 {
        let x = k as f64;
        match &self.family {
            Family::Luroth => x / (x + 1.0),
            Family::Power | Family::ExplicitPrefix { .. } => self.norm,
            Family::PowerLog { gamma } => self.norm * (x + 1.0).ln().powf(*gamma),
        }
    }

    /// `lim p_k k^ρ` when `L` is asymptotically constant.
    pub fn tail_constant(&self) -> Option<f64> {
        match &self.family {
            Family::Luroth => Some(1.0),
            Family::Power | Family::ExplicitPrefix { .. } => Some(self.norm),
            Family::PowerLog { gamma } if *gamma == 0.0 => Some(self.norm),
            Family::PowerLog { .. } => None,
        }
    }

    /// `Σ_{k≥M} p_k`.
    pub fn tail_sum(&self, m: u64) -> Result<f64> {
        if m == 0 {
            return domain("tail sums start at M = 1");
        }
        Ok(self.tail_mass(m))
    }

    fn tail_mass(&self, m: u64) -> f64 {
        match &self.family {
            Family::Luroth => 1.0 / m as f64,
            Family::Power => self.norm * power_tail(self.rho, m),
            Family::PowerLog { .. } => {
                smooth_tail_sum(|k| self.p(k), |x| self.density(x), m, self.em_start())
            }
            Family::ExplicitPrefix { prefix, prefix_mass } => {
                let len = prefix.len() as u64;
                if m > len {
                    self.norm * power_tail(self.rho, m)
                } else {
                    let head: CompensatedSum = prefix[..m as usize - 1].iter().copied().collect();
                    (1.0 - prefix_mass) + (prefix_mass - head.value())
                }
            }
        }
    }

    /// `Σ_{k≥M} p_k^s`, finite iff `ρ s > 1`.
    pub fn tilted_tail_sum(&self, m: u64, s: f64) -> Result<f64> {
        if m == 0 {
            return domain("tail sums start at M = 1");
        }
        if !(s.is_finite() && s > 0.0) {
            return domain(format!("tilt exponent {s} must be positive"));
        }
        if self.rho * s <= 1.0 {
            return Err(Error::Divergent { rho_s: self.rho * s });
        }
        if s == 1.0 {
            return Ok(self.tail_mass(m));
        }
        Ok(self.transformed_tail_sum(m, |p| p.powf(s)))
    }

    /// `Σ_{k≥M} g(p_k)` for a smooth increasing `g` with `g(0) = 0`.
    pub fn transformed_tail_sum<G: Fn(f64) -> f64>(&self, m: u64, g: G) -> f64 {
        smooth_tail_sum(|k| g(self.p(k)), |x| g(self.density(x)), m.max(1), self.em_start())
    }

    /// Canonical-layout left endpoint `inf I_k = Σ_{j<k} p_j`.
    pub fn left_endpoint(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        match &self.sampler {
            DigitSampler::Luroth => 1.0 - 1.0 / k as f64,
            DigitSampler::Table(t) => t.cdf(k - 1).unwrap_or_else(|| 1.0 - self.tail_mass(k)),
        }
    }

    /// The unique `s_K` with `Σ_{k≤K} p_k^{s_K} = 1` (`s_1 = 0`).
    pub fn solve_s_k(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return domain("K must be at least 1");
        }
        let weights: Vec<f64> = (1..=k).map(|j| self.p(j)).collect();
        Ok(solve_tilt_exponent(&weights).x)
    }

    /// Digit `k` with `Σ_{j<k} p_j ≤ u < Σ_{j≤k} p_j`.
    pub fn sample_digit(&self, u: f64) -> Result<u64> {
        if !(u > 0.0 && u < 1.0) {
            return domain(format!("uniform variate {u} outside (0, 1)"));
        }
        Ok(self.sampler.sample(u))
    }

    pub fn sampler(&self) -> &DigitSampler {
        &self.sampler
    }

    /// Empirical Potter constants on a finite horizon, with no cap on `C_ε`.
    pub fn potter_scan(&self, epsilon: f64, scan_limit: u64) -> Result<PotterReport> {
        self.potter_scan_capped(epsilon, scan_limit, f64::INFINITY)
    }

    /// Smallest `k_ε` (then smallest `C_ε ≤ c_cap` on a 1e-3 grid) such that for
    /// all scanned `k_ε ≤ k ≤ m < 2k`, `m ≤ scan_limit`:
    /// `p_m/p_k ≥ 1/(2^{ρ+ε} C_ε)` and `p_k ≥ k^{-ρ}L(k)/2`.
    pub fn potter_scan_capped(&self, epsilon: f64, scan_limit: u64, c_cap: f64) -> Result<PotterReport> {
        if !(epsilon > 0.0) {
            return domain("epsilon must be positive");
        }
        if scan_limit < 4 {
            return domain("scan_limit must be at least 4");
        }
        let n = scan_limit as usize;
        let p: Vec<f64> = (1..=scan_limit).map(|k| self.p(k)).collect();
        let scale = 2f64.powf(self.rho + epsilon);
        // Sliding minimum of p over [k, min(2k-1, n)], k descending.
        let mut window: VecDeque<usize> = VecDeque::new();
        let mut right = n;
        let mut worst_c = 1.0f64;
        let mut best: Option<(u64, f64)> = None;
        for k in (1..=n).rev() {
            while window.front().is_some_and(|&f| p[f - 1] >= p[k - 1]) {
                window.pop_front();
            }
            window.push_front(k);
            let hi = (2 * k - 1).min(n);
            while right > hi {
                if window.back() == Some(&right) {
                    window.pop_back();
                }
                right -= 1;
            }
            let min_ratio = p[*window.back().expect("window holds k") - 1] / p[k - 1];
            let need_c = 1.0 / (scale * min_ratio);
            let xk = k as f64;
            let lower_ok = p[k - 1] >= xk.powf(-self.rho) * self.slowly_varying(k as u64) / 2.0;
            if !lower_ok || need_c > c_cap {
                break;
            }
            worst_c = worst_c.max(need_c);
            best = Some((k as u64, worst_c));
        }
        let (k_eps, c) = best.ok_or_else(|| {
            Error::HorizonExceeded(format!("Potter bounds fail at k = {scan_limit}; regular variation sets in later"))
        })?;
        Ok(PotterReport {
            epsilon,
            k_eps,
            c_eps: (c * 1000.0).ceil() / 1000.0,
            scan_limit,
            horizon_limited: true,
        })
    }
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Luroth => write!(f, "luroth"),
            Family::Power => write!(f, "power(rho={})", self.rho),
            Family::PowerLog { gamma } => write!(f, "power-log(rho={}, gamma={gamma})", self.rho),
            Family::ExplicitPrefix { prefix, .. } => {
                write!(f, "explicit-prefix(len={}, rho={})", prefix.len(), self.rho)
            }
        }
    }
}

/// `Σ_{k≥M} k^{-ρ}`: direct terms below the Euler–Maclaurin start, then the
/// closed-form integral and three correction terms.
fn power_tail(rho: f64, m: u64) -> f64 {
    let a = m.max(EULER_MACLAURIN_START);
    let mut acc: CompensatedSum = (m..a).map(|k| (k as f64).powf(-rho)).collect();
    let x = a as f64;
    let xr = x.powf(-rho);
    acc.add(x * xr / (rho - 1.0));
    acc.add(xr / 2.0);
    acc.add(rho * xr / x / 12.0);
    acc.add(-rho * (rho + 1.0) * (rho + 2.0) * xr / x.powi(3) / 720.0);
    acc.value()
}

/// Root `s ∈ [0,1)` of `Σ_i w_i^s = 1` for weights in (0,1) with `Σ w_i < 1`.
///
/// One weight gives `s = 0`. Bisection to width 1e-14 plus one secant step.
pub fn solve_tilt_exponent(weights: &[f64]) -> Root {
    if weights.len() <= 1 {
        return Root { x: 0.0, residual: 0.0, iterations: 0 };
    }
    let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let excess = |s: f64| {
        let mut acc = CompensatedSum::new();
        for &l in &logs {
            acc.add((s * l).exp());
        }
        acc.add(-1.0);
        acc.value()
    };
    bisect_decreasing(excess, 0.0, 1.0, 1e-14)
}

/// Empirical Potter constants, valid on the scanned horizon only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotterReport {
    pub epsilon: f64,
    pub k_eps: u64,
    pub c_eps: f64,
    pub scan_limit: u64,
    pub horizon_limited: bool,
}

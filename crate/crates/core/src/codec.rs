//! The affine full-branch map on `[0,1)`: digit words, cylinders and coding.
//!
//! Canonical layout stacks `I_k = [Σ_{j<k} p_j, Σ_{j≤k} p_j)` left to right
//! and `T(x) = (x − inf I_k)/p_k`. The classical Lüroth layout uses
//! `J_k = (1/(k+1), 1/k]` with `T(x) = k(k+1)x − k` on `(0, 1]`.
//!
//! Exact rational endpoints are available for Lüroth weights up to a
//! configurable depth; every model gets `f64` endpoints and log diameters.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;
use crate::weights::WeightModel;

/// Default depth limit of exact rational cylinders.
pub const DEFAULT_EXACT_DEPTH: usize = 1_000;

/// A finite digit sequence; every digit is at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DigitWord(Vec<u64>);

impl DigitWord {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if let Some(pos) = digits.iter().position(|&d| d == 0) {
            return domain(format!("digit at position {} is 0", pos + 1));
        }
        Ok(DigitWord(digits))
    }

    pub fn empty() -> Self {
        DigitWord(Vec::new())
    }

    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, digit: u64) -> Result<()> {
        if digit == 0 {
            return domain("digit 0");
        }
        self.0.push(digit);
        Ok(())
    }

    pub fn prefix(&self, n: usize) -> DigitWord {
        DigitWord(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }

    /// Running distinct count `D_1, …, D_n`.
    pub fn distinct_profile(&self) -> Vec<u64> {
        let mut counter = crate::occupancy::DistinctCounter::new();
        self.0
            .iter()
            .map(|&d| {
                counter.feed(d);
                counter.count()
            })
            .collect()
    }
}

impl TryFrom<Vec<u64>> for DigitWord {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        DigitWord::new(v)
    }
}

impl From<DigitWord> for Vec<u64> {
    fn from(w: DigitWord) -> Self {
        w.0
    }
}

/// Wire format: comma-separated decimal digits, empty for the empty word.
impl fmt::Display for DigitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for DigitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(DigitWord::empty());
        }
        let digits = s
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad digit '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        DigitWord::new(digits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    #[default]
    Canonical,
    /// `J_k = (1/(k+1), 1/k]`; Lüroth weights only.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    Float,
    Exact { max_depth: usize },
}

impl Default for Arithmetic {
    fn default() -> Self {
        Arithmetic::Exact { max_depth: DEFAULT_EXACT_DEPTH }
    }
}

/// Interval coded by a digit word.
///
/// Canonical cylinders are `[left, left + diam)`, classical ones `(left, left + diam]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    pub word: DigitWord,
    pub log_diam: f64,
    pub left: f64,
    pub left_exact: Option<BigRational>,
    pub layout: Layout,
}

impl Cylinder {
    pub fn exact_mode(&self) -> bool {
        self.left_exact.is_some()
    }

    pub fn diam(&self) -> f64 {
        self.log_diam.exp()
    }

    pub fn right(&self) -> f64 {
        self.left + self.diam()
    }

    /// Exact diameter `Π p_{d_i}` (Lüroth only).
    pub fn diam_exact(&self) -> Option<BigRational> {
        self.left_exact.as_ref()?;
        Some(luroth_diam_exact(self.word.digits()))
    }

    pub fn right_exact(&self) -> Option<BigRational> {
        Some(self.left_exact.as_ref()? + self.diam_exact()?)
    }

    /// Exact membership, honoring the layout's endpoint convention.
    pub fn contains_exact(&self, x: &BigRational) -> Option<bool> {
        let left = self.left_exact.as_ref()?;
        let right = self.right_exact()?;
        Some(match self.layout {
            Layout::Canonical => left <= x && x < &right,
            Layout::Classical => left < x && x <= &right,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        match self.layout {
            Layout::Canonical => self.left <= x && x < self.right(),
            Layout::Classical => self.left < x && x <= self.right(),
        }
    }

    pub fn to_record(&self) -> CylinderRecord {
        CylinderRecord {
            digits: self.word.digits().to_vec(),
            log_diam: self.log_diam,
            left: match &self.left_exact {
                Some(q) => format!("{}/{}", q.numer(), q.denom()),
                None => format!("{:e}", self.left),
            },
        }
    }
}

/// JSON export shape of a cylinder; `left` is `"p/q"` in exact mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderRecord {
    pub digits: Vec<u64>,
    pub log_diam: f64,
    pub left: String,
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn luroth_diam_exact(digits: &[u64]) -> BigRational {
    let mut den = BigInt::one();
    for &k in digits {
        den *= BigInt::from(k) * BigInt::from(k + 1);
    }
    BigRational::new(BigInt::one(), den)
}

/// Cylinder of `word` in the canonical layout, exact when the model allows it.
pub fn cylinder(model: &WeightModel, word: &DigitWord) -> Result<Cylinder> {
    let arithmetic = if model.is_luroth() && word.len() <= DEFAULT_EXACT_DEPTH {
        Arithmetic::default()
    } else {
        Arithmetic::Float
    };
    cylinder_with(model, word, Layout::Canonical, arithmetic)
}

pub fn cylinder_with(model: &WeightModel, word: &DigitWord, layout: Layout, arithmetic: Arithmetic) -> Result<Cylinder> {
    if layout == Layout::Classical && !model.is_luroth() {
        return domain("classical layout is defined for Lüroth weights only");
    }
    let digits = word.digits();
    let log_diam = digits.iter().map(|&d| model.ln_p(d)).collect::<CompensatedSum>().value();
    // φ_{d_1} ∘ … ∘ φ_{d_n} applied to the layout's base point, innermost first
    let mut left = 0.0;
    for &d in digits.iter().rev() {
        left = match layout {
            Layout::Canonical => model.left_endpoint(d) + model.p(d) * left,
            Layout::Classical => (left + d as f64) / (d as f64 * (d as f64 + 1.0)),
        };
    }
    let left_exact = match arithmetic {
        Arithmetic::Float => None,
        Arithmetic::Exact { max_depth } => {
            if !model.is_luroth() {
                return domain("exact endpoints need rational weights");
            }
            if digits.len() > max_depth {
                return Err(Error::Precision { depth: digits.len(), max_depth });
            }
            let mut x = BigRational::zero();
            for &d in digits.iter().rev() {
                let scale = ratio(1, d * (d + 1));
                x = match layout {
                    Layout::Canonical => ratio(d - 1, d) + scale * x,
                    Layout::Classical => (x + BigRational::from_integer(BigInt::from(d))) * scale,
                };
            }
            Some(x)
        }
    };
    Ok(Cylinder { word: word.clone(), log_diam, left, left_exact, layout })
}

fn check_unit(x: &BigRational, layout: Layout) -> Result<()> {
    let ok = match layout {
        Layout::Canonical => x >= &BigRational::zero() && x < &BigRational::one(),
        Layout::Classical => x > &BigRational::zero() && x <= &BigRational::one(),
    };
    if ok {
        Ok(())
    } else {
        let range = if layout == Layout::Canonical { "[0, 1)" } else { "(0, 1]" };
        domain(format!("x = {x} outside {range}"))
    }
}

/// One exact step of the Lüroth map: branch index and image.
pub fn apply_t(model: &WeightModel, x: &BigRational, layout: Layout) -> Result<(u64, BigRational)> {
    if !model.is_luroth() {
        return domain("exact map needs rational weights; use apply_t_f64");
    }
    check_unit(x, layout)?;
    let (num, den) = (x.numer(), x.denom());
    let k = match layout {
        // k = ⌊1/(1−x)⌋
        Layout::Canonical => den.div_floor(&(den - num)),
        // k = ⌊1/x⌋
        Layout::Classical => den.div_floor(num),
    };
    let k = k.to_u64().ok_or_else(|| Error::Domain("digit exceeds 64 bits".into()))?;
    let kk = BigRational::from_integer(BigInt::from(k) * BigInt::from(k + 1));
    let image = match layout {
        Layout::Canonical => (x - ratio(k - 1, k)) * kk,
        Layout::Classical => x * kk - BigRational::from_integer(BigInt::from(k)),
    };
    Ok((k, image))
}

/// Exact coding of `x` by its first `n` digits (Lüroth weights).
pub fn encode(model: &WeightModel, x: &BigRational, n: usize, layout: Layout) -> Result<DigitWord> {
    check_unit(x, layout)?;
    let mut digits = Vec::with_capacity(n);
    let mut y = x.clone();
    for _ in 0..n {
        let (k, next) = apply_t(model, &y, layout)?;
        digits.push(k);
        y = next;
    }
    Ok(DigitWord(digits))
}

/// One floating-point step of the canonical map.
pub fn apply_t_f64(model: &WeightModel, x: f64) -> Result<(u64, f64)> {
    if !(0.0..1.0).contains(&x) {
        return domain(format!("x = {x} outside [0, 1)"));
    }
    let mut k = model.sampler().sample(x).max(1);
    while k > 1 && x < model.left_endpoint(k) {
        k -= 1;
    }
    while x >= model.left_endpoint(k + 1) {
        k += 1;
    }
    let y = (x - model.left_endpoint(k)) / model.p(k);
    Ok((k, y.clamp(0.0, 1.0 - f64::EPSILON / 2.0)))
}

/// Floating-point canonical coding; any model.
pub fn encode_f64(model: &WeightModel, x: f64, n: usize) -> Result<DigitWord> {
    let mut digits = Vec::with_capacity(n);
    let mut y = x;
    for _ in 0..n {
        let (k, next) = apply_t_f64(model, y)?;
        digits.push(k);
        y = next;
    }
    Ok(DigitWord(digits))
}

/// Partial sum `Σ_{n≤terms} 1/(d_n Π_{j<n} d_j(d_j−1))` of the Lüroth series
/// for classical digits `d_i ≥ 2`.
pub fn luroth_series_eval(classical_digits: &[u64], terms: usize) -> Result<BigRational> {
    if terms > classical_digits.len() {
        return domain(format!("{terms} terms requested from a word of length {}", classical_digits.len()));
    }
    if let Some(pos) = classical_digits[..terms].iter().position(|&d| d < 2) {
        return domain(format!("classical Lüroth digit at position {} is below 2", pos + 1));
    }
    let mut sum = BigRational::zero();
    let mut scale = BigInt::one();
    for &d in &classical_digits[..terms] {
        let bd = BigInt::from(d);
        sum += BigRational::new(BigInt::one(), &scale * &bd);
        scale *= &bd * (&bd - 1);
    }
    Ok(sum)
}

//! Exact rational rates such as the distinctness rate `θ`.
//!
//! Profiles like `⌈θt⌉` and sandwiches like `θn ≤ D_n` are integer statements,
//! so `θ` is carried as a reduced fraction rather than an `f64`.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive rational `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Rate {
    num: u64,
    den: u64,
}

impl Rate {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("rate denominator is zero".into()));
        }
        let g = num.gcd(&den).max(1);
        Ok(Rate { num: num / g, den: den / g })
    }

    /// Rate in the unit interval `(0, 1]`.
    pub fn unit(num: u64, den: u64) -> Result<Self> {
        let r = Self::new(num, den)?;
        if r.num == 0 || r.num > r.den {
            return Err(Error::Domain(format!("rate {r} outside (0, 1]")));
        }
        Ok(r)
    }

    /// Closest fraction with denominator at most 10^9, via continued fractions.
    ///
    /// Decimal inputs such as `0.3` recover `3/10` exactly.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 || x > u32::MAX as f64 {
            return Err(Error::Domain(format!("rate {x} not representable")));
        }
        const MAX_DEN: u128 = 1_000_000_000;
        let (mut h0, mut h1) = (0u128, 1u128);
        let (mut k0, mut k1) = (1u128, 0u128);
        let mut frac = x;
        loop {
            let a = frac.floor();
            let ai = a as u128;
            let h2 = ai * h1 + h0;
            let k2 = ai * k1 + k0;
            if k2 > MAX_DEN {
                break;
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            let rem = frac - a;
            if (h1 as f64 / k1 as f64 - x).abs() <= 1e-15 * x.max(1e-300) || rem < 1e-12 {
                break;
            }
            frac = 1.0 / rem;
        }
        Self::new(h1 as u64, k1 as u64)
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `⌈self · t⌉`, exact.
    pub fn ceil_mul(&self, t: u64) -> u64 {
        let p = self.num as u128 * t as u128;
        p.div_ceil(self.den as u128) as u64
    }

    /// `self · n ≤ d`, exact.
    pub fn mul_le(&self, n: u64, d: u64) -> bool {
        self.num as u128 * n as u128 <= d as u128 * self.den as u128
    }

    /// `d < self · n + extra`, exact.
    pub fn lt_mul_plus(&self, d: u64, n: u64, extra: u64) -> bool {
        (d as u128) * (self.den as u128) < self.num as u128 * n as u128 + extra as u128 * self.den as u128
    }

    /// Halves the rate (`θ ↦ θ/2`).
    pub fn half(&self) -> Rate {
        Rate::new(self.num, self.den * 2).expect("nonzero denominator")
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rate {
    type Err = Error;

    /// Accepts `p/q`, exact decimals (`0.375`) and integers.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid rate '{s}'"));
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse::<u64>().map_err(|_| bad())?;
            let q = q.trim().parse::<u64>().map_err(|_| bad())?;
            return Rate::new(p, q);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let den = 10u64.pow(frac.len() as u32);
            let frac_num: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            let num = int.checked_mul(den).and_then(|v| v.checked_add(frac_num)).ok_or_else(bad)?;
            return Rate::new(num, den);
        }
        Rate::new(s.parse().map_err(|_| bad())?, 1)
    }
}

impl TryFrom<f64> for Rate {
    type Error = Error;

    fn try_from(x: f64) -> Result<Self> {
        Rate::from_f64(x)
    }
}

impl From<Rate> for f64 {
    fn from(r: Rate) -> f64 {
        r.as_f64()
    }
}

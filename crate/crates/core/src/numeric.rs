//! Numerical building blocks: compensated summation, tails of smooth series,
//! and a bracketing root finder.

use std::sync::OnceLock;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on [-1, 1], computed once by Newton
/// iteration on the Legendre polynomial.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

/// Integral of `g` over `[a, b]` by one Gauss–Legendre panel.
fn gl_panel<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = CompensatedSum::new();
    for &(x, w) in gauss_legendre() {
        acc.add(w * g(mid + half * x));
    }
    half * acc.value()
}

/// `∫_a^∞ f(x) dx` for a positive, eventually power-like decaying `f`.
///
/// Integrates in `y = ln x`, where the integrand `f(e^y) e^y` decays
/// exponentially, panel by panel; once the geometric remainder estimate is
/// negligible it is added and integration stops.
pub fn integral_to_infinity<F: Fn(f64) -> f64>(f: &F, a: f64) -> f64 {
    const PANEL: f64 = 0.5;
    const MAX_PANELS: usize = 40_000;
    let g = |y: f64| {
        let x = y.exp();
        f(x) * x
    };
    let mut acc = CompensatedSum::new();
    let mut y = a.ln();
    let mut prev_edge = g(y);
    for _ in 0..MAX_PANELS {
        if y + PANEL > 700.0 {
            break;
        }
        acc.add(gl_panel(&g, y, y + PANEL));
        y += PANEL;
        let edge = g(y);
        if edge <= 0.0 || !edge.is_finite() {
            break;
        }
        if edge < prev_edge {
            let rate = (prev_edge / edge).ln() / PANEL;
            let remainder = edge / rate;
            if remainder < 1e-17 * acc.value() {
                acc.add(remainder);
                return acc.value();
            }
        }
        prev_edge = edge;
    }
    // Panel budget or exponent range exhausted: close with the geometric estimate from the last panel.
    let edge = g(y);
    let before = g(y - PANEL);
    if edge > 0.0 && edge < before {
        acc.add(edge * PANEL / (before / edge).ln());
    }
    acc.value()
}

/// Start of the Euler–Maclaurin regime used by [`smooth_tail_sum`].
pub const EULER_MACLAURIN_START: u64 = 2_000;

/// `Σ_{k ≥ start} f(k)` for a smooth decreasing `f` defined on reals.
///
/// `head(k)` supplies the exact integer terms used below
/// `em_start = max(start, EULER_MACLAURIN_START)`; from `em_start` on the sum is
/// `∫ f + f(a)/2 − f'(a)/12` with `f'` from a central difference.
pub fn smooth_tail_sum<H, F>(head: H, f: F, start: u64, em_start: u64) -> f64
where
    H: Fn(u64) -> f64,
    F: Fn(f64) -> f64,
{
    let a = start.max(em_start);
    let mut acc = CompensatedSum::new();
    for k in start..a {
        acc.add(head(k));
    }
    let af = a as f64;
    let h = 1e-4 * af;
    let deriv = (f(af + h) - f(af - h)) / (2.0 * h);
    let mut tail = CompensatedSum::new();
    tail.add(integral_to_infinity(&f, af));
    tail.add(0.5 * f(af));
    tail.add(-deriv / 12.0);
    acc.add(tail.value());
    acc.value()
}

/// Result of a bracketing root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Root of a strictly decreasing `f` on `[lo, hi]` with `f(lo) > 0 > f(hi)`.
///
/// Bisection down to bracket width `width`, then a single secant step inside
/// the final bracket, accepted only when it lowers the residual.
pub fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, width: f64) -> Root {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    let mut iterations = 0;
    while hi - lo > width && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            return Root { x: mid, residual: 0.0, iterations };
        }
        if fm > 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    let (mut best_x, mut best_r) = if f_lo.abs() <= f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    if f_lo != f_hi {
        let x = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if x > lo && x < hi {
            let r = f(x);
            if r.abs() < best_r.abs() {
                best_x = x;
                best_r = r;
            }
        }
    }
    Root { x: best_x, residual: best_r, iterations }
}

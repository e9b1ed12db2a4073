//! Acceptance criteria A1–A10, one PASS/FAIL line each.
//!
//! Run with `cargo test -p digitrange --test acceptance`.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use digitrange::linear::{build_schedule, count_blocks, BlockSchedule};
use digitrange::occupancy::{expected_distinct, karlin_constant, monte_carlo_law};
use digitrange::rng::{substream, DEFAULT_SEED};
use digitrange::sublinear::{build_sublinear_schedule, AdmissibleProfile};
use digitrange::tilt::{
    change_of_measure_check, cylinder_sum_exact, cylinder_sum_mc, distinct_forces_large_check, distinct_threshold, DigitLaw,
};
use digitrange::{DigitWord, Error, Rate, WeightModel};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: digitrange::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rate(s: &str) -> Rate {
    s.parse().unwrap()
}

const ZETA3: f64 = 1.202_056_903_159_594_3;
const GAMMA_TWO_THIRDS: f64 = 1.354_117_939_426_400_4;

/// `Σ_k (1 − (1 − p_k)^n)`: direct to `k_max`, then `n·Σ_{k>k_max} p_k − C(n,2)·Σ p_k²`.
fn occupancy_oracle(p: impl Fn(u64) -> f64, tail: f64, tail_sq: f64, n: u64, k_max: u64) -> f64 {
    let nf = n as f64;
    let mut s = 0.0;
    for k in (1..=k_max).rev() {
        s += -(nf * (-p(k)).ln_1p()).exp_m1();
    }
    s + nf * tail - nf * (nf - 1.0) / 2.0 * tail_sq
}

fn a1() -> Outcome {
    let m = WeightModel::luroth();
    let n = 1_000_000u64;
    let k_max = 10_000_000u64;
    let kf = k_max as f64;
    // Σ_{k>K} 1/(k(k+1)) = 1/(K+1); Σ_{k>K} p_k² ≈ 1/(3K³)
    let oracle = occupancy_oracle(|k| 1.0 / (k as f64 * (k as f64 + 1.0)), 1.0 / (kf + 1.0), 1.0 / (3.0 * kf.powi(3)), n, k_max);
    let exact = ok(expected_distinct(&m, n))?;
    check((exact / oracle - 1.0).abs() < 1e-9, || format!("E D_n {exact} vs oracle {oracle}"))?;
    let r = ok(monte_carlo_law(&m, n, 100, DEFAULT_SEED))?;
    let last = r.last();
    let root_pi = std::f64::consts::PI.sqrt();
    check((root_pi - 0.06..=root_pi + 0.06).contains(&last.mean), || format!("mean D_n/√n = {}", last.mean))?;
    let rel = (last.mean_distinct / exact - 1.0).abs();
    check(rel < 0.01, || format!("MC mean D_n {} vs E D_n {exact}", last.mean_distinct))?;
    Ok(format!("mean D_n/√n = {:.4} in [{:.4}, {:.4}], |MC/E − 1| = {rel:.2e}", last.mean, root_pi - 0.06, root_pi + 0.06))
}

fn a2() -> Outcome {
    let m = ok(WeightModel::power(3.0))?;
    let n = 1_000_000u64;
    let k_max = 2_000_000u64;
    let kf = k_max as f64;
    // Σ_{k>K} k^{-3} ≈ 1/(2K²) − 1/(2K³), Σ_{k>K} k^{-6} ≈ 1/(5K⁵)
    let tail = (0.5 / (kf * kf) - 0.5 / kf.powi(3)) / ZETA3;
    let oracle = occupancy_oracle(|k| (k as f64).powi(-3) / ZETA3, tail, 0.2 / kf.powi(5) / (ZETA3 * ZETA3), n, k_max);
    let exact = ok(expected_distinct(&m, n))?;
    check((exact / oracle - 1.0).abs() < 1e-9, || format!("E D_n {exact} vs oracle {oracle}"))?;
    let kc = GAMMA_TWO_THIRDS * (1.0 / ZETA3).cbrt();
    let lib_kc = ok(karlin_constant(3.0, 1.0 / ZETA3))?;
    check((lib_kc - kc).abs() < 1e-12, || format!("Karlin constant {lib_kc} vs {kc}"))?;
    let r = ok(monte_carlo_law(&m, n, 50, DEFAULT_SEED))?;
    let last = r.last();
    let rel = (last.mean_distinct / exact - 1.0).abs();
    check(rel < 0.01, || format!("MC mean D_n {} vs E D_n {exact}", last.mean_distinct))?;
    // trend of the checkpoint expectations towards the constant
    let gaps: Vec<f64> = r
        .checkpoints
        .iter()
        .map(|c| (c.exact_expectation / (c.checkpoint as f64).cbrt() - kc).abs())
        .collect();
    let closest = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    check(gaps.last() == Some(&closest), || format!("final checkpoint not closest: {gaps:?}"))?;
    let se = last.sd / (r.trials as f64).sqrt();
    let mc_gap = (last.mean - kc).abs();
    check(mc_gap <= 3.0 * se + closest, || format!("MC mean {} vs constant {kc}, se {se}", last.mean))?;
    let mc_gaps: Vec<f64> = r.checkpoints.iter().map(|c| (c.mean - kc).abs()).collect();
    let mc_rank = mc_gaps.iter().filter(|&&g| g < mc_gap).count();
    Ok(format!(
        "|MC/E − 1| = {rel:.2e}, constant {kc:.6}, exact gap at n: {closest:.4}, MC gap {mc_gap:.4} (se {se:.4}, {mc_rank} checkpoints closer)"
    ))
}

fn a3() -> Outcome {
    let depth = 14u64;
    let mut checked = 0u64;
    for th in ["0.3", "0.5", "1"] {
        let theta = rate(th);
        let (p, q) = (theta.num() as u128, theta.den() as u128);
        let s = ok(build_schedule(theta, 1, depth as usize))?;
        for seed in 0..10 {
            let w = ok(s.sample_point(depth as usize, &mut substream(DEFAULT_SEED, seed)))?;
            check(w.len() as u64 == s.total_len(depth as usize), || "point shorter than S_J".into())?;
            let mut seen = HashSet::new();
            for (i, &d) in w.digits().iter().enumerate() {
                seen.insert(d);
                let (n, dn) = ((i + 1) as u128, seen.len() as u128);
                // θn ≤ D_n < θn + J, scaled by q
                check(p * n <= q * dn && q * dn < p * n + q * depth as u128, || format!("θ={th} seed {seed}: D_{n} = {dn}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (θ, seed, n) triples, zero violations"))
}

fn enumerate_blocks(n: u64, len: u64, theta: Rate) -> u128 {
    fn rec(n: u64, len: u64, theta: Rate, prefix: &mut Vec<u64>, count: &mut u128) {
        let t = prefix.len() as u64;
        if t == len {
            *count += 1;
            return;
        }
        for d in 0..n {
            prefix.push(d);
            let distinct = prefix.iter().collect::<HashSet<_>>().len() as u64;
            if distinct == theta.ceil_mul(t + 1) {
                rec(n, len, theta, prefix, count);
            }
            prefix.pop();
        }
    }
    let mut count = 0;
    rec(n, len, theta, &mut Vec::new(), &mut count);
    count
}

fn a4() -> Outcome {
    let mut cases = 0;
    for th in ["0.3", "0.5", "1"] {
        let theta = rate(th);
        for len in 1..=6 {
            for n in 1..=5 {
                let brute = enumerate_blocks(n, len, theta);
                match count_blocks(n, len, theta) {
                    Ok(c) => check(c.exact == Some(brute), || format!("θ={th} N={n} L={len}: {:?} vs {brute}", c.exact))?,
                    Err(Error::Infeasible { .. }) => check(brute == 0, || format!("θ={th} N={n} L={len}: {brute} blocks"))?,
                    Err(e) => return Err(e.to_string()),
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (N, L, θ) cases equal"))
}

/// `ln μ(C_{S_J}) / ln diam(C_{S_J})` from the block counts and Lüroth weights.
fn local_dim_oracle(s: &BlockSchedule, w: &DigitWord, depth: usize) -> f64 {
    let theta = s.theta;
    let mut ln_mass = 0.0;
    for lv in &s.levels[..depth] {
        let m = theta.ceil_mul(lv.len);
        let mut ln_count: f64 = (0..m).map(|i| ((lv.alphabet_size - i) as f64).ln()).sum();
        for t in 1..=lv.len {
            let prev = theta.ceil_mul(t - 1);
            if theta.ceil_mul(t) == prev {
                ln_count += (prev as f64).ln();
            }
        }
        ln_mass -= ln_count;
    }
    let len = s.total_len(depth) as usize;
    let ln_diam: f64 = w.digits()[..len].iter().map(|&k| -((k as f64) * (k as f64 + 1.0)).ln()).sum();
    ln_mass / ln_diam
}

fn a5() -> Outcome {
    let m = WeightModel::luroth();
    let s = ok(build_schedule(rate("0.5"), 1, 14))?;
    let w = ok(s.sample_point(14, &mut substream(DEFAULT_SEED, 0)))?;
    let dim = |j: usize| ok(s.local_dimension(&m, &w.prefix(s.total_len(j) as usize)));
    let (d6, d14) = (dim(6)?, dim(14)?);
    for (j, d) in [(6, d6), (14, d14)] {
        let o = local_dim_oracle(&s, &w, j);
        check((d - o).abs() < 1e-9, || format!("depth {j}: {d} vs oracle {o}"))?;
    }
    check((0.40..=0.60).contains(&d14), || format!("depth 14 estimate {d14}"))?;
    check((d14 - 0.5).abs() < (d6 - 0.5).abs(), || format!("depth 14 ({d14}) not closer to 1/2 than depth 6 ({d6})"))?;
    Ok(format!("depth 6: {d6:.4}, depth 14: {d14:.4} in [0.40, 0.60]"))
}

/// `P(#distinct ≥ m)` by Möbius inversion over the occupied set.
fn mobius_probability(q: &[f64], n: i32, m: usize) -> f64 {
    let c = q.len();
    let mass = |set: usize| (0..c).filter(|i| set >> i & 1 == 1).map(|i| q[i]).sum::<f64>();
    let mut total = 0.0;
    for a in 0..1usize << c {
        if (a.count_ones() as usize) < m {
            continue;
        }
        let mut b = a;
        loop {
            let sign = if (a.count_ones() - b.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * mass(b).powi(n);
            if b == 0 {
                break;
            }
            b = (b - 1) & a;
        }
    }
    total
}

fn a6() -> Outcome {
    let model = WeightModel::luroth();
    let law = DigitLaw::Model(model.clone());
    let mut worst: f64 = 0.0;
    let mut worst_mobius: f64 = 0.0;
    for n in 1..=6u64 {
        for cap in 1..=6u64 {
            for s in [0.6, 0.75, 0.9] {
                for th in ["0.4", "0.8", "1"] {
                    let c = ok(change_of_measure_check(&law, n, s, rate(th), cap))?;
                    worst = worst.max(c.rel_err);
                    check(c.rel_err <= 1e-12, || format!("n={n} cap={cap} s={s} θ={th}: {c:?}"))?;
                    let z: f64 = (1..=cap).map(|k| model.p(k).powf(s)).sum();
                    let q: Vec<f64> = (1..=cap).map(|k| model.p(k).powf(s) / z).collect();
                    let mob = z.powi(n as i32) * mobius_probability(&q, n as i32, distinct_threshold(rate(th), n) as usize);
                    let rel = (mob - c.direct).abs() / c.direct.max(f64::MIN_POSITIVE);
                    worst_mobius = worst_mobius.max(rel);
                    check(rel <= 1e-12, || format!("n={n} cap={cap} s={s} θ={th}: Möbius {mob} vs {}", c.direct))?;
                }
            }
        }
    }
    let theta = rate("0.8");
    let capped = ok(DigitLaw::capped(&model, 6))?;
    let exact = ok(cylinder_sum_exact(&capped, 6, 0.75, theta, 6))?;
    let mc = ok(cylinder_sum_mc(&capped, 6, 0.75, theta, 1_000_000, DEFAULT_SEED))?;
    let se = mc.stderr.unwrap();
    let z_capped = (mc.value - exact.value) / se;
    check(z_capped.abs() <= 3.0, || format!("capped MC {} ± {se} vs exact {}", mc.value, exact.value))?;
    let exact_full = ok(cylinder_sum_exact(&law, 6, 0.75, theta, 6))?;
    let mc_full = ok(cylinder_sum_mc(&law, 6, 0.75, theta, 1_000_000, DEFAULT_SEED))?;
    let (lo, hi) = exact_full.bracket(0.0);
    let se_full = mc_full.stderr.unwrap();
    check(mc_full.value + 3.0 * se_full >= lo && mc_full.value - 3.0 * se_full <= hi, || {
        format!("MC {} ± {se_full} outside [{lo}, {hi}]", mc_full.value)
    })?;
    Ok(format!(
        "grid max rel err {worst:.1e} (Möbius {worst_mobius:.1e}); capped n=6 MC z = {z_capped:.2}; full MC {:.3} in [{lo:.3}, {hi:.3}]",
        mc_full.value
    ))
}

/// `Σ_{k≥M} (k(k+1))^{-3/4}`: direct to `K`, then the midpoint integral `∫_{K+1/2}^∞ (x+1/2)^{-3/2} dx`.
fn tilted_tail_oracle(m: u64, k: u64) -> f64 {
    let mut s = 0.0;
    for j in (m..=k).rev() {
        let jf = j as f64;
        s += (jf * (jf + 1.0)).powf(-0.75);
    }
    s + 2.0 / (k as f64 + 1.0).sqrt()
}

fn a7() -> Outcome {
    let m = WeightModel::luroth();
    let mut ratios = Vec::new();
    for e in 1..=4 {
        let big_m = 10u64.pow(e);
        let t = ok(m.tilted_tail_sum(big_m, 0.75))?;
        let o = tilted_tail_oracle(big_m, 20_000_000);
        check((t / o - 1.0).abs() < 1e-9, || format!("M = {big_m}: {t} vs oracle {o}"))?;
        let r = t * (big_m as f64).sqrt();
        check((1.5..=3.0).contains(&r), || format!("M = {big_m}: ratio {r}"))?;
        ratios.push(format!("{r:.4}"));
    }
    Ok(format!("ratios at M = 10..10^4: {}", ratios.join(", ")))
}

fn a8() -> Outcome {
    let horizon = 100_000u64;
    let profile = ok(AdmissibleProfile::sqrt(horizon))?;
    let mut margins = Vec::new();
    for t in [0.5, 0.9] {
        let sched = ok(build_sublinear_schedule(profile.clone(), t, WeightModel::luroth()))?;
        for seed in 0..5 {
            let w = ok(sched.sample_point(horizon, &mut substream(DEFAULT_SEED, seed)))?;
            let mut seen = HashSet::new();
            for (i, &d) in w.digits().iter().enumerate() {
                seen.insert(d);
                let n = i as u64 + 1;
                let (f, dn) = (n.isqrt(), seen.len() as u64);
                let k = sched.k_n(n);
                check(f <= dn && dn <= f + k, || format!("t={t} seed {seed}: D_{n} = {dn}, f = {f}, K_n = {k}"))?;
            }
            let rows = ok(sched.ratio_trace(&w))?;
            let early = rows[1..=50_000].iter().map(|r| r.log_ratio).fold(f64::NEG_INFINITY, f64::max);
            let late = rows[50_000..=100_000].iter().map(|r| r.log_ratio).fold(f64::NEG_INFINITY, f64::max);
            check(late < early, || format!("t={t} seed {seed}: late max {late} ≥ early max {early}"))?;
            margins.push(early - late);
        }
    }
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("10 runs sandwiched at every n; min(early max − late max) = {min_margin:.1}"))
}

/// Independent exhaustive check of the combinatorial lemma.
fn a9() -> Outcome {
    let mut tuples = 0u64;
    for n in 1..=6u32 {
        for code in 0..6u64.pow(n) {
            let mut c = code;
            let xs: Vec<u64> = (0..n)
                .map(|_| {
                    let d = c % 6 + 1;
                    c /= 6;
                    d
                })
                .collect();
            let distinct = xs.iter().collect::<HashSet<_>>().len() as u64;
            for m in 1..=distinct {
                let h = m.div_ceil(2);
                let big = xs.iter().filter(|&&x| x >= h).count() as u64;
                check(big >= h, || format!("{xs:?}, m = {m}"))?;
            }
            tuples += 1;
        }
    }
    let r = distinct_forces_large_check(6, 6);
    check(r.passed(), || format!("library counterexample {:?}", r.counterexample))?;
    check(r.tuples_checked == tuples, || format!("library scanned {} tuples, oracle {tuples}", r.tuples_checked))?;
    Ok(format!("{tuples} tuples, zero counterexamples"))
}

fn s2_oracle() -> f64 {
    // 2^{-s} + 6^{-s} = 1
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if 2f64.powf(-mid) + 6f64.powf(-mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn a10() -> Outcome {
    let m = WeightModel::luroth();
    check(ok(m.solve_s_k(1))? == 0.0, || "s_1 != 0".into())?;
    let mut ks: Vec<u64> = (1..=200).collect();
    ks.extend((200..10_000).step_by(97).skip(1));
    ks.push(10_000);
    let mut prev = 0.0;
    let mut worst: f64 = 0.0;
    for &k in &ks {
        let s = ok(m.solve_s_k(k))?;
        let mut residual = -1.0;
        for j in (1..=k).rev() {
            residual += (1.0 / (j as f64 * (j as f64 + 1.0))).powf(s);
        }
        worst = worst.max(residual.abs());
        check(residual.abs() < 1e-12, || format!("K = {k}: residual {residual:e}"))?;
        check(s >= prev, || format!("K = {k}: s_K decreased"))?;
        prev = s;
    }
    let s2 = ok(m.solve_s_k(2))?;
    let o = s2_oracle();
    check((s2 - o).abs() < 1e-12 && (s2 - 0.601).abs() <= 1e-3, || format!("s_2 = {s2}, oracle {o}"))?;
    let s1000 = ok(m.solve_s_k(1000))?;
    check(s1000 > 0.9, || format!("s_1000 = {s1000}"))?;
    Ok(format!("{} values of K, max residual {worst:.1e}, s_2 = {s2:.6}, s_1000 = {s1000:.4}", ks.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] =
        [("A1", a1), ("A2", a2), ("A3", a3), ("A4", a4), ("A5", a5), ("A6", a6), ("A7", a7), ("A8", a8), ("A9", a9), ("A10", a10)];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{name:<4} PASS ({secs:6.2}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{name:<4} FAIL ({secs:6.2}s) {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

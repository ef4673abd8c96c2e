//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::time::Instant;

use bentkus_core::bentkus::{bentkus_quantile_detailed, p2_binomial, p2_quantile_binomial, BentkusParams, Saturation};
use bentkus_core::binom::{binom_pmf, BinomialTable};
use bentkus_core::confseq::{bernstein_bound, hoeffding_bound, Method};
use bentkus_core::stitching::StitchConfig;
use bentkus_core::variance::VarEstimatorState;
use bentkus_harness::config::{Distribution, ExperimentConfig, Kind};
use bentkus_harness::report::{Cell, Report};
use bentkus_harness::rng::rng_stream;
use bentkus_harness::runners::run;

const ANYTIME: [Method; 3] = [Method::ABentkus, Method::AHoeffding, Method::EBernstein];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn grid(a: f64, b: f64, m: usize) -> impl Iterator<Item = f64> {
    (0..m).map(move |i| a + (b - a) * i as f64 / (m - 1) as f64)
}

// inf over x' < x of E[(Z - x')_+^2] / (x - x')^2: dense log grid in
// t = x - x', then golden-section refinement around the best grid point.
fn brute_force_p2(x: f64, pmf: &[f64]) -> f64 {
    let n = (pmf.len() - 1) as f64;
    if x > n {
        return 0.0;
    }
    let ratio = |t: f64| {
        let xp = x - t;
        pmf.iter().enumerate().map(|(k, w)| w * (k as f64 - xp).max(0.0).powi(2)).sum::<f64>() / (t * t)
    };
    let m = 4000;
    let ts: Vec<f64> = grid(-9.0, 9.0, m).map(|e| 10f64.powf(e)).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| ratio(t)).collect();
    let (ib, &vb) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let (mut a, mut b) = (ts[ib.saturating_sub(1)], ts[(ib + 1).min(m - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut best = vb;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        let (fc, fd) = (ratio(c), ratio(d));
        best = best.min(fc).min(fd);
        if fc < fd {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(1.0)
}

const P_GRID: [f64; 4] = [0.05, 0.25, 0.5, 0.9];

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for n in 1..=12u64 {
        for p in P_GRID {
            let table = BinomialTable::new(n, p).unwrap();
            let pmf: Vec<f64> = (0..=n).map(|k| binom_pmf(n, p, k).unwrap()).collect();
            for x in grid(-0.5, n as f64 + 0.5, 200) {
                worst = worst.max((p2_binomial(x, &table) - brute_force_p2(x, &pmf)).abs());
            }
        }
    }
    verdict(worst <= 1e-6, format!("max |P2 - brute force| = {worst:.3e}"))
}

fn criterion_2() -> Verdict {
    let half_e2 = 0.5 * std::f64::consts::E.powi(2);
    let (mut lower_gap, mut upper_gap) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in 1..=12u64 {
        for p in P_GRID {
            let table = BinomialTable::new(n, p).unwrap();
            for x in grid(0.0, n as f64, 200) {
                let p2 = p2_binomial(x, &table);
                lower_gap = lower_gap.max(table.tail(x.ceil() as i64) - p2);
                upper_gap = upper_gap.max(p2 - half_e2 * table.tail_loglinear(x).unwrap());
            }
        }
    }
    verdict(lower_gap <= 1e-10 && upper_gap <= 1e-10, format!("max lower violation {lower_gap:.3e}, max upper violation {upper_gap:.3e}"))
}

fn criterion_3() -> Verdict {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for n in [10u64, 100, 1000, 10_000] {
        for p in [0.01, 0.2, 0.5, 0.8] {
            let table = BinomialTable::new(n, p).unwrap();
            let top = table.top_atom();
            let floor = top.max(1e-300);
            for i in 0..=100 {
                let delta = floor.powf(i as f64 / 100.0);
                if delta <= top + 1e-12 {
                    continue;
                }
                let xq = p2_quantile_binomial(delta, &table).unwrap();
                worst = worst.max((p2_binomial(xq.x, &table) - delta).abs());
                checked += 1;
            }
        }
    }
    verdict(worst <= 1e-9, format!("{checked} levels, max |P2(x_delta) - delta| = {worst:.3e}"))
}

fn criterion_4() -> Verdict {
    let b = 1.0;
    let (mut checked, mut saturated, mut violations) = (0, 0, Vec::new());
    for n in [1u64, 2, 5, 10, 30, 100, 300, 1000, 5000] {
        for delta in [0.5, 0.2, 0.05, 0.01, 1e-3, 1e-5, 1e-8] {
            for a in [0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0] {
                let q = bentkus_quantile_detailed(delta, n, &BentkusParams::new(a, b).unwrap()).unwrap();
                if q.saturation != Saturation::None {
                    saturated += 1;
                    continue;
                }
                checked += 1;
                let bern = bernstein_bound(n, delta, a, b);
                let hoef = hoeffding_bound(n, delta, b + a * a / b);
                if !(q.value <= bern && q.value <= hoef) {
                    violations.push((n, delta, a));
                }
            }
        }
    }
    verdict(violations.is_empty(), format!("{checked} points checked, {saturated} saturated skipped, violations {violations:?}"))
}

fn criterion_5() -> Verdict {
    let mut mono_fail = 0;
    let mut worst_homog = 0.0f64;
    let mut checked = 0;
    for t in [1u64, 3, 10, 50, 200, 1000] {
        for b in [0.25, 1.0, 3.0] {
            for delta in [0.3, 0.05, 1e-3, 1e-6] {
                let mut prev = f64::NEG_INFINITY;
                for a in grid(0.01, 3.0, 50) {
                    let q = bentkus_quantile_detailed(delta, t, &BentkusParams::new(a, b).unwrap()).unwrap();
                    if q.value < prev {
                        mono_fail += 1;
                    }
                    prev = q.value;
                    if q.saturation == Saturation::None {
                        let s = bentkus_quantile_detailed(delta, t, &BentkusParams::new(a * b, b * b).unwrap()).unwrap();
                        worst_homog = worst_homog.max((s.value - b * q.value).abs() / (b * q.value).abs());
                        checked += 1;
                    }
                }
            }
        }
    }
    verdict(
        mono_fail == 0 && worst_homog <= 1e-10,
        format!("monotonicity breaks {mono_fail}; homogeneity max rel err {worst_homog:.3e} over {checked} points"),
    )
}

fn text(c: &Cell) -> String {
    c.to_string()
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Int(v) => *v as f64,
        Cell::Float(v) => *v,
        Cell::Text(s) => s.parse().unwrap_or(f64::NAN),
    }
}

fn aggregate(r: &Report, method: Method, extra: &[(&str, &str)], col: &str) -> f64 {
    let (m, rep, c) = (r.column("method").unwrap(), r.column("rep").unwrap(), r.column(col).unwrap());
    r.rows
        .iter()
        .find(|row| {
            text(&row[m]) == method.name()
                && text(&row[rep]) == "all"
                && extra.iter().all(|(k, v)| text(&row[r.column(k).unwrap()]) == *v)
        })
        .map(|row| num(&row[c]))
        .unwrap()
}

fn criterion_6() -> Verdict {
    let mut cfg = ExperimentConfig::defaults(Kind::Coverage);
    cfg.distribution = Distribution::Bernoulli { p: 0.1 };
    cfg.methods = vec![Method::ABentkus];
    cfg.replications = 300;
    cfg.set_horizon(5000);
    let r = run(&cfg).unwrap().report;
    let rate = aggregate(&r, Method::ABentkus, &[("n", "5000")], "miscovered");
    verdict(rate <= 0.05, format!("A-Bentkus miscoverage {rate} over 300 x 5000"))
}

fn criterion_7() -> Verdict {
    let mut cfg = ExperimentConfig::defaults(Kind::Width);
    cfg.distribution = Distribution::Bernoulli { p: 0.1 };
    cfg.methods = ANYTIME.to_vec();
    cfg.replications = 100;
    cfg.horizon = 5000;
    cfg.checkpoints = vec![100, 1000, 5000];
    let r = run(&cfg).unwrap().report;
    let w = |m: Method, n: &str| aggregate(&r, m, &[("n", n)], "width");
    let mut pass = true;
    let mut parts = Vec::new();
    for n in ["100", "1000", "5000"] {
        let (bk, eb) = (w(Method::ABentkus, n), w(Method::EBernstein, n));
        pass &= bk < eb;
        parts.push(format!("n={n}: A-Bentkus {bk:.4} vs E-Bernstein {eb:.4}"));
    }
    let (bk, ah) = (w(Method::ABentkus, "5000"), w(Method::AHoeffding, "5000"));
    pass &= bk < ah;
    parts.push(format!("n=5000: A-Hoeffding {ah:.4}"));
    verdict(pass, parts.join("; "))
}

fn criterion_8() -> Verdict {
    let mut cfg = ExperimentConfig::defaults(Kind::Stopping);
    cfg.distribution = Distribution::UniformAverage { m: 10 };
    cfg.m_values = vec![10];
    cfg.epsilon = 0.1;
    cfg.replications = 50;
    cfg.methods = ANYTIME.to_vec();
    let r = run(&cfg).unwrap().report;
    let t = |m: Method| aggregate(&r, m, &[], "stopping_time");
    let (bk, ah, eb) = (t(Method::ABentkus), t(Method::AHoeffding), t(Method::EBernstein));
    let ratio = bk / ah.min(eb);
    verdict(ratio <= 0.9, format!("mean N: A-Bentkus {bk}, A-Hoeffding {ah}, E-Bernstein {eb}; ratio {ratio:.3}"))
}

fn criterion_9() -> Verdict {
    let mut cfg = ExperimentConfig::defaults(Kind::Bestarm);
    cfg.arm_means = bentkus_core::apps::power_law_means(5);
    cfg.replications = 10;
    cfg.methods = ANYTIME.to_vec();
    let r = run(&cfg).unwrap().report;
    let mut pass = true;
    let mut parts = Vec::new();
    for m in ANYTIME {
        let correct = aggregate(&r, m, &[], "correct");
        pass &= correct >= 0.9;
        parts.push(format!("{m} correct {correct}"));
    }
    let ratio = aggregate(&r, Method::ABentkus, &[], "total_pulls") / aggregate(&r, Method::AHoeffding, &[], "total_pulls");
    pass &= ratio <= 0.8;
    parts.push(format!("pulls ratio {ratio:.3}"));
    verdict(pass, parts.join("; "))
}

fn criterion_10() -> Verdict {
    let cfg = StitchConfig::default();
    let a = 3f64.sqrt() / 4.0;
    let reps = 300;
    let mut missed = 0;
    for r in 0..reps {
        let mut rng = rng_stream(20190529, &[10, r]);
        let mut s = VarEstimatorState::new(0.0, 1.0).unwrap();
        let mut ever = false;
        for _ in 0..5000 {
            s.push(rng.bernoulli(0.25));
            ever |= s.var_upper_bound(0.05 / 3.0, &cfg).unwrap() < a;
        }
        missed += ever as u32;
    }
    let rate = missed as f64 / reps as f64;
    verdict(rate <= 0.05, format!("P(exists n: A > running bound) = {rate} over {reps} x 5000"))
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "P2 matches brute-force minimisation", criterion_1),
        (2, "sandwich bounds", criterion_2),
        (3, "quantile round trip", criterion_3),
        (4, "dominance over Bernstein and Hoeffding", criterion_4),
        (5, "monotone in A and homogeneous", criterion_5),
        (6, "A-Bentkus coverage", criterion_6),
        (7, "width ordering", criterion_7),
        (8, "stopping times", criterion_8),
        (9, "best-arm identification", criterion_9),
        (10, "variance over-estimate validity", criterion_10),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status}: {name} | {} | {:.1}s", v.detail, start.elapsed().as_secs_f64());
        failed += !v.pass as u32;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

mod common;

use bentkus_core::apps::{adaptive_stop, best_arm, hardness_h1, power_law_means, BanditResult, BestArmOptions, RadiusMode};
use bentkus_core::confseq::{ConfSeq, Method, Support};
use bentkus_core::stitching::StitchConfig;
use bentkus_core::Result;

fn factory(m: Method) -> impl FnMut(f64) -> Result<ConfSeq> {
    move |d| ConfSeq::new(m, Support::new(0.0, 1.0).unwrap(), d, &StitchConfig::default())
}

fn bandit(m: Method, means: &[f64], seed: u64, radius: RadiusMode) -> BanditResult {
    let mut rngs: Vec<_> = (0..means.len() as u64).map(|a| common::rng(seed * 1000 + a)).collect();
    let mut arms: Vec<_> = rngs
        .iter_mut()
        .zip(means.iter())
        .map(|(g, &mu)| move || common::bernoulli(g, mu))
        .collect();
    best_arm(&mut arms, 0.05, factory(m), BestArmOptions { radius, ..Default::default() }).unwrap()
}

#[test]
fn stopping_traces_are_monotone_and_stop_condition_holds() {
    for seed in 0..20 {
        let mut rng = common::rng(seed);
        let mut s = || common::uniform_average(&mut rng, 10);
        let r = adaptive_stop(&mut s, 0.1, 0.05, factory(Method::ABentkus), 10_000_000).unwrap();
        assert!(!r.truncated);
        assert!(r.trace.windows(2).all(|w| w[0].lb <= w[1].lb && w[1].ub <= w[0].ub));
        let last = r.trace.last().unwrap();
        assert!(1.1 * last.lb >= 0.9 * last.ub);
        assert_eq!(r.trace.len() as u64, r.stopping_time);
    }
}

#[test]
fn stopping_rejects_bad_epsilon() {
    let mut s = || 0.5;
    assert!(adaptive_stop(&mut s, 1.0, 0.05, factory(Method::ABentkus), 10).is_err());
    assert!(adaptive_stop(&mut s, 0.0, 0.05, factory(Method::ABentkus), 10).is_err());
}

#[test]
fn stopping_estimates_are_accurate() {
    let mut good = 0;
    for seed in 0..200 {
        let mut rng = common::rng(10_000 + seed);
        let mut s = || common::uniform_average(&mut rng, 10);
        let r = adaptive_stop(&mut s, 0.1, 0.05, factory(Method::ABentkus), 10_000_000).unwrap();
        good += ((r.estimate / 0.5 - 1.0).abs() <= 0.1) as u32;
    }
    assert!(good >= 190, "{good}/200");
}

#[test]
fn stopping_bounds_cover_mean() {
    let mut bad = 0;
    for seed in 0..300 {
        let mut rng = common::rng(20_000 + seed);
        let mut s = || common::bernoulli(&mut rng, 0.25);
        let r = adaptive_stop(&mut s, 0.1, 0.05, factory(Method::ABentkus), 10_000_000).unwrap();
        bad += r.trace.iter().any(|t| !(t.lb <= 0.25 && 0.25 <= t.ub)) as u32;
    }
    assert!(bad as f64 / 300.0 <= 0.05, "{bad}/300");
}

#[test]
fn bentkus_stops_before_empirical_bernstein() {
    let mut wins = 0;
    for seed in 0..50 {
        let n = |m: Method| {
            let mut rng = common::rng(30_000 + seed);
            let mut s = || common::uniform_average(&mut rng, 10);
            adaptive_stop(&mut s, 0.1, 0.05, factory(m), 10_000_000).unwrap().stopping_time
        };
        wins += (n(Method::ABentkus) < n(Method::EBernstein)) as u32;
    }
    assert!(wins >= 40, "{wins}/50");
}

#[test]
fn larger_epsilon_stops_sooner() {
    for seed in 0..20 {
        let n = |eps: f64| {
            let mut rng = common::rng(40_000 + seed);
            let mut s = || common::uniform_average(&mut rng, 10);
            adaptive_stop(&mut s, eps, 0.05, factory(Method::AHoeffding), 10_000_000).unwrap().stopping_time
        };
        assert!(n(0.5) < n(0.1));
    }
}

#[test]
fn elimination_is_permanent_and_counts_add_up() {
    let means = power_law_means(5);
    for seed in 0..5 {
        let r = bandit(Method::ABentkus, &means, seed, RadiusMode::Raw);
        assert_eq!(r.elimination_trace.len(), 4);
        assert_eq!(r.total_pulls, r.pulls.iter().sum::<u64>());
        assert_eq!(r.total_pulls as usize, r.pull_trace.len());
        for &(it, arm) in &r.elimination_trace {
            assert!(r.pull_trace.iter().all(|&(j, a)| a != arm || j <= it));
        }
    }
}

#[test]
fn bandit_runs_are_deterministic() {
    let means = power_law_means(5);
    assert_eq!(bandit(Method::ABentkus, &means, 9, RadiusMode::Raw), bandit(Method::ABentkus, &means, 9, RadiusMode::Raw));
}

#[test]
fn raw_radius_needs_fewer_iterations_than_truncated() {
    let means = [1.0, 0.34];
    let mut raw = 0;
    let mut trunc = 0;
    for seed in 0..10 {
        raw += bandit(Method::AHoeffding, &means, seed, RadiusMode::Raw).pull_trace.len();
        trunc += bandit(Method::AHoeffding, &means, seed, RadiusMode::Reported).pull_trace.len();
    }
    assert!(raw < trunc, "{raw} vs {trunc}");
}

#[test]
fn bandit_is_sound() {
    let means = power_law_means(5);
    let wrong = (0..50).filter(|&s| bandit(Method::ABentkus, &means, 500 + s, RadiusMode::Raw).winner != Some(0)).count();
    assert!(wrong as f64 / 50.0 <= 0.05, "{wrong}/50");
}

#[test]
fn truncated_bandit_reports_no_winner() {
    let mut arms = [|| 0.5, || 0.5];
    let opts = BestArmOptions { max_total_pulls: 7, ..Default::default() };
    let r = best_arm(&mut arms, 0.05, factory(Method::ABentkus), opts).unwrap();
    assert!(r.truncated && r.winner.is_none());
    assert_eq!(r.total_pulls, 7);
    let empty: &mut [fn() -> f64] = &mut [];
    assert!(best_arm(empty, 0.05, factory(Method::ABentkus), BestArmOptions::default()).is_err());
}

#[test]
fn hardness_matches_direct_sum() {
    for k in [2usize, 5, 10, 40] {
        let m = power_law_means(k);
        let direct: f64 = (1..k).map(|a| (m[0] - m[a]).powi(-2)).sum();
        assert!((hardness_h1(&m) - direct).abs() <= 1e-12 * direct);
    }
}

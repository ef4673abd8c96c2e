//! Experiment runners. Each returns a [`Report`] whose schema depends only on
//! the experiment kind:
//!
//! | kind | columns |
//! |------|---------|
//! | coverage, width | kind, method, rep, n, width, miscovered |
//! | stopping | kind, method, distribution, rep, stopping_time, estimate, truncated |
//! | bestarm | kind, method, rep, arms, h1, total_pulls, winner, correct, truncated |
//! | bound-table, sweep | kind, method, n, Some((eta, power)), bound, radius |
//!
//! Per-replication rows come first, ordered by method then replication (then
//! `n`). Aggregate rows use `rep = all`; their values are means over the
//! replication rows, summed in replication order (the `miscovered`,
//! `correct` and `truncated` aggregates are fractions). Bandit traces go to a
//! separate report with columns method, rep, iteration, event, arm.

use bentkus_core::apps::{adaptive_stop, best_arm, hardness_h1, BestArmOptions, RadiusMode};
use bentkus_core::bentkus::{bentkus_quantile, BentkusParams};
use bentkus_core::confseq::{
    adaptive_hoeffding_bound, bernstein_bound, empirical_bernstein_bound, hoeffding_bound, ConfSeq, Method, Support,
};
use bentkus_core::stitching::{adaptive_bentkus_bound, StitchConfig};
use rayon::prelude::*;

use crate::config::{Distribution, ExperimentConfig, Kind, Radius};
use crate::error::Result;
use crate::report::{Cell, Report};
use crate::rng::{rng_stream, RngStream};

const EXP_COVERAGE: u64 = 1;
const EXP_STOPPING: u64 = 2;
const EXP_BESTARM: u64 = 3;

pub const COVERAGE_COLUMNS: [&str; 6] = ["kind", "method", "rep", "n", "width", "miscovered"];
pub const STOPPING_COLUMNS: [&str; 7] = ["kind", "method", "distribution", "rep", "stopping_time", "estimate", "truncated"];
pub const BESTARM_COLUMNS: [&str; 9] =
    ["kind", "method", "rep", "arms", "h1", "total_pulls", "winner", "correct", "truncated"];
pub const BOUND_COLUMNS: [&str; 7] = ["kind", "method", "n", "eta", "power", "bound", "radius"];
pub const TRACE_COLUMNS: [&str; 5] = ["method", "rep", "iteration", "event", "arm"];

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub trace: Option<Report>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.kind {
        Kind::Coverage | Kind::Width => Ok(Outcome { report: run_coverage(cfg)?, trace: None }),
        Kind::Stopping => Ok(Outcome { report: run_stopping(cfg)?, trace: None }),
        Kind::Bestarm => run_bestarm(cfg),
        Kind::BoundTable | Kind::Sweep => Ok(Outcome { report: emit_bound_table(cfg)?, trace: None }),
    }
}

fn unit_support() -> Support {
    Support { lower: 0.0, upper: 1.0 }
}

fn make_seq(method: Method, delta: f64, stitch: &StitchConfig, known_std: f64) -> bentkus_core::Result<ConfSeq> {
    let cs = ConfSeq::new(method, unit_support(), delta, stitch)?;
    Ok(if method == Method::BernsteinFixed && known_std > 0.0 { cs.with_known_std(known_std)? } else { cs })
}

fn draw(rng: &mut RngStream, dist: Distribution) -> f64 {
    match dist {
        Distribution::Bernoulli { p } => rng.bernoulli(p),
        Distribution::UniformAverage { m } => rng.uniform_average(m),
    }
}

fn describe(dist: Distribution) -> String {
    match dist {
        Distribution::Bernoulli { p } => format!("bernoulli({p})"),
        Distribution::UniformAverage { m } => format!("uniform-average({m})"),
    }
}

fn flag(b: bool) -> u64 {
    b as u64
}

/// Runs all configured sequences in lockstep on one stream per replication and
/// records, at each checkpoint, the width and whether the true mean was ever
/// excluded so far.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<Report> {
    let mu = cfg.distribution.mean();
    let sd = cfg.distribution.std_dev();
    let mut checkpoints = cfg.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    // per replication: per method, per checkpoint (width, ever missed)
    let results: Vec<Vec<Vec<(f64, bool)>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let mut rng = rng_stream(cfg.seed, &[EXP_COVERAGE, r]);
            let mut seqs: Vec<ConfSeq> =
                cfg.methods.iter().map(|&m| make_seq(m, cfg.delta, &cfg.stitch, sd)).collect::<bentkus_core::Result<_>>()?;
            let mut ever = vec![false; seqs.len()];
            let mut out = vec![Vec::with_capacity(checkpoints.len()); seqs.len()];
            let mut next = 0;
            for n in 1..=cfg.horizon {
                let y = draw(&mut rng, cfg.distribution);
                let record = checkpoints.get(next) == Some(&n);
                for (i, cs) in seqs.iter_mut().enumerate() {
                    let ci = cs.update(y)?;
                    ever[i] |= !ci.contains(mu);
                    if record {
                        out[i].push((ci.width(), ever[i]));
                    }
                }
                if record {
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let kind = cfg.kind.name();
    let mut report = Report::new(&COVERAGE_COLUMNS);
    for (i, m) in cfg.methods.iter().enumerate() {
        for (r, res) in results.iter().enumerate() {
            for (j, &n) in checkpoints.iter().enumerate() {
                let (w, miss) = res[i][j];
                report.push(vec![kind.into(), m.name().into(), r.to_string().into(), n.into(), w.into(), flag(miss).into()]);
            }
        }
    }
    let reps = results.len() as f64;
    for (i, m) in cfg.methods.iter().enumerate() {
        for (j, &n) in checkpoints.iter().enumerate() {
            let (mut w, mut miss) = (0.0, 0.0);
            for res in &results {
                w += res[i][j].0;
                miss += flag(res[i][j].1) as f64;
            }
            report.push(vec![kind.into(), m.name().into(), "all".into(), n.into(), (w / reps).into(), (miss / reps).into()]);
        }
    }
    Ok(report)
}

/// Adaptive stopping per method on matched streams. For uniform-average data
/// each entry of `m_values` is a separate block of replications.
pub fn run_stopping(cfg: &ExperimentConfig) -> Result<Report> {
    let dists: Vec<Distribution> = match cfg.distribution {
        Distribution::UniformAverage { .. } => cfg.m_values.iter().map(|&m| Distribution::UniformAverage { m }).collect(),
        d => vec![d],
    };
    let mut report = Report::new(&STOPPING_COLUMNS);
    let mut aggregates = Vec::new();
    for (block, &dist) in dists.iter().enumerate() {
        let sd = dist.std_dev();
        let results: Vec<Vec<(u64, f64, bool)>> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| -> Result<_> {
                let base = rng_stream(cfg.seed, &[EXP_STOPPING, block as u64, r]);
                cfg.methods
                    .iter()
                    .map(|&m| {
                        let mut rng = base.clone();
                        let mut stream = || draw(&mut rng, dist);
                        let res = adaptive_stop(&mut stream, cfg.epsilon, cfg.delta, |d| make_seq(m, d, &cfg.stitch, sd), cfg.horizon)?;
                        Ok((res.stopping_time, res.estimate, res.truncated))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let label = describe(dist);
        let reps = results.len() as f64;
        for (i, m) in cfg.methods.iter().enumerate() {
            let (mut t, mut e, mut tr) = (0.0, 0.0, 0.0);
            for (r, res) in results.iter().enumerate() {
                let (n, est, trunc) = res[i];
                report.push(vec![
                    "stopping".into(),
                    m.name().into(),
                    label.clone().into(),
                    r.to_string().into(),
                    n.into(),
                    est.into(),
                    flag(trunc).into(),
                ]);
                t += n as f64;
                e += est;
                tr += flag(trunc) as f64;
            }
            aggregates.push(vec![
                "stopping".into(),
                m.name().into(),
                label.clone().into(),
                "all".into(),
                Cell::Float(t / reps),
                Cell::Float(e / reps),
                Cell::Float(tr / reps),
            ]);
        }
    }
    report.rows.extend(aggregates);
    Ok(report)
}

/// Best-arm identification with Bernoulli arms, one RNG substream per arm.
pub fn run_bestarm(cfg: &ExperimentConfig) -> Result<Outcome> {
    let means = &cfg.arm_means;
    let best = (0..means.len()).fold(0, |b, a| if means[a] > means[b] { a } else { b });
    let h1 = hardness_h1(means);
    let opts = BestArmOptions {
        max_total_pulls: cfg.horizon,
        radius: match cfg.radius {
            Radius::Raw => RadiusMode::Raw,
            Radius::Reported => RadiusMode::Reported,
        },
    };
    type Run = (Option<usize>, u64, bool, Vec<(u64, &'static str, usize)>);
    let results: Vec<Vec<Run>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| -> Result<_> {
            cfg.methods
                .iter()
                .map(|&m| {
                    let mut rngs: Vec<RngStream> =
                        (0..means.len() as u64).map(|a| rng_stream(cfg.seed, &[EXP_BESTARM, r, a])).collect();
                    let mut arms: Vec<_> =
                        rngs.iter_mut().zip(means.iter()).map(|(g, &mu)| move || g.bernoulli(mu)).collect();
                    let res = best_arm(&mut arms, cfg.delta, |d| make_seq(m, d, &cfg.stitch, 0.0), opts)?;
                    let mut events = Vec::new();
                    if cfg.trace {
                        let mut elim = res.elimination_trace.iter().peekable();
                        for &(it, arm) in &res.pull_trace {
                            events.push((it, "pull", arm));
                            while let Some(&&(eit, earm)) = elim.peek() {
                                if eit != it {
                                    break;
                                }
                                events.push((eit, "eliminate", earm));
                                elim.next();
                            }
                        }
                    }
                    Ok((res.winner, res.total_pulls, res.truncated, events))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let k = means.len() as u64;
    let mut report = Report::new(&BESTARM_COLUMNS);
    let mut trace = cfg.trace.then(|| Report::new(&TRACE_COLUMNS));
    for (i, m) in cfg.methods.iter().enumerate() {
        for (r, res) in results.iter().enumerate() {
            let (winner, pulls, truncated, events) = &res[i];
            let winner_cell = match winner {
                Some(w) => Cell::Int(*w as u64),
                None => Cell::from("none"),
            };
            report.push(vec![
                "bestarm".into(),
                m.name().into(),
                r.to_string().into(),
                k.into(),
                h1.into(),
                (*pulls).into(),
                winner_cell,
                flag(*winner == Some(best)).into(),
                flag(*truncated).into(),
            ]);
            if let Some(t) = trace.as_mut() {
                for &(it, event, arm) in events {
                    t.push(vec![m.name().into(), r.to_string().into(), it.into(), event.into(), (arm as u64).into()]);
                }
            }
        }
    }
    let reps = results.len() as f64;
    for (i, m) in cfg.methods.iter().enumerate() {
        let (mut pulls, mut correct, mut trunc) = (0.0, 0.0, 0.0);
        for res in &results {
            pulls += res[i].1 as f64;
            correct += flag(res[i].0 == Some(best)) as f64;
            trunc += flag(res[i].2) as f64;
        }
        report.push(vec![
            "bestarm".into(),
            m.name().into(),
            "all".into(),
            k.into(),
            h1.into(),
            Cell::Float(pulls / reps),
            "".into(),
            Cell::Float(correct / reps),
            Cell::Float(trunc / reps),
        ]);
    }
    Ok(Outcome { report, trace })
}

/// One-sided sum-scale boundaries for the centred distribution, with
/// `A = std_dev`, `B = 1 - mean` and unit support width. Fixed-n columns
/// appear only in `bound-table`; `sweep` repeats the stitched columns over
/// the `eta_grid` x `power_grid` product.
pub fn emit_bound_table(cfg: &ExperimentConfig) -> Result<Report> {
    let a = cfg.distribution.std_dev();
    let b = cfg.distribution.upper_deviation();
    let delta = cfg.delta;
    let mut report = Report::new(&BOUND_COLUMNS);
    let kind = cfg.kind.name();
    let mut push = |method: &str, n: u64, geometry: Option<(f64, f64)>, bound: f64| {
        let (eta, power) = match geometry {
            Some((e, c)) => (Cell::Float(e), Cell::Float(c)),
            None => ("".into(), "".into()),
        };
        report.push(vec![kind.into(), method.into(), n.into(), eta, power, bound.into(), (bound / n as f64).into()]);
    };
    let geometries: Vec<(f64, f64)> = match cfg.kind {
        Kind::Sweep => cfg.eta_grid.iter().flat_map(|&e| cfg.power_grid.iter().map(move |&c| (e, c))).collect(),
        _ => vec![(cfg.stitch.eta(), cfg.stitch.power())],
    };
    let fixed = cfg.kind != Kind::Sweep && a > 0.0 && b > 0.0;
    if fixed {
        let prm = BentkusParams::new(a, b)?;
        for &n in &cfg.n_grid {
            push("Bentkus-fixed", n, None, bentkus_quantile(delta, n, &prm)?);
        }
        for &n in &cfg.n_grid {
            push("Bernstein-fixed", n, None, bernstein_bound(n, delta, a, b));
        }
        for &n in &cfg.n_grid {
            push("Hoeffding-fixed", n, None, hoeffding_bound(n, delta, 1.0));
        }
    }
    for &(eta, power) in &geometries {
        let stitch = StitchConfig::new(eta, power, delta, 0.0)?;
        if a > 0.0 && b > 0.0 {
            let prm = BentkusParams::new(a, b)?;
            for &n in &cfg.n_grid {
                push("A-Bentkus", n, Some((eta, power)), adaptive_bentkus_bound(n, &prm, &stitch)?);
            }
        }
        for &n in &cfg.n_grid {
            push("E-Bernstein", n, Some((eta, power)), empirical_bernstein_bound(n, delta, a * a, 1.0, &stitch));
        }
        if cfg.kind != Kind::Sweep {
            for &n in &cfg.n_grid {
                push("A-Hoeffding", n, Some((eta, power)), adaptive_hoeffding_bound(n, delta, 1.0));
            }
        }
    }
    Ok(report)
}

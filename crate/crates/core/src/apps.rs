//! Adaptive stopping and best-arm identification driven by confidence sequences.

use crate::confseq::{ConfSeq, ConfidenceInterval};
use crate::error::{domain, Result};

/// A stream of bounded observations.
pub trait RewardSource {
    fn draw(&mut self) -> f64;
}

impl<F: FnMut() -> f64> RewardSource for F {
    fn draw(&mut self) -> f64 {
        self()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: u64,
    pub lb: f64,
    pub ub: f64,
    /// Symmetrized radius `max(mean - lower, upper - mean)`.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingResult {
    pub stopping_time: u64,
    pub estimate: f64,
    /// `max_n` was reached before the stopping rule fired.
    pub truncated: bool,
    pub trace: Vec<StepRecord>,
}

/// Relative-accuracy stopping rule for the mean.
///
/// Tracks `LB = max(LB, |Ybar_n| - Q_n)` and `UB = min(UB, |Ybar_n| + Q_n)`
/// with `Q_n` the symmetrized radius of the sequence built by
/// `factory(delta)`, and stops once `(1 + eps) LB >= (1 - eps) UB`. The
/// estimate is `sign(Ybar_N) ((1 + eps) LB + (1 - eps) UB) / 2`.
pub fn adaptive_stop<S, F>(stream: &mut S, epsilon: f64, delta: f64, mut factory: F, max_n: u64) -> Result<StoppingResult>
where
    S: RewardSource + ?Sized,
    F: FnMut(f64) -> Result<ConfSeq>,
{
    if !(epsilon > 0.0 && epsilon < 1.0) || max_n == 0 {
        return Err(domain(format!("adaptive stop needs epsilon in (0, 1) and max_n >= 1 (epsilon = {epsilon})")));
    }
    let mut cs = factory(delta)?;
    let mut trace = Vec::new();
    let (mut lb, mut ub) = (0.0f64, f64::INFINITY);
    loop {
        let ci = cs.update(stream.draw())?;
        let radius = (ci.mean - ci.lower).max(ci.upper - ci.mean);
        lb = lb.max(ci.mean.abs() - radius);
        ub = ub.min(ci.mean.abs() + radius);
        trace.push(StepRecord { n: ci.n, lb, ub, radius });
        let fired = (1.0 + epsilon) * lb >= (1.0 - epsilon) * ub;
        if fired || ci.n >= max_n {
            let sign = if ci.mean < 0.0 { -1.0 } else { 1.0 };
            let estimate = 0.5 * sign * ((1.0 + epsilon) * lb + (1.0 - epsilon) * ub);
            return Ok(StoppingResult { stopping_time: ci.n, estimate, truncated: !fired, trace });
        }
    }
}

/// Which interval the sampling rule measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusMode {
    /// Half the untruncated step interval.
    #[default]
    Raw,
    /// Half the reported (cumulative, truncated) interval.
    Reported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BestArmOptions {
    pub max_total_pulls: u64,
    pub radius: RadiusMode,
}

impl Default for BestArmOptions {
    fn default() -> Self {
        Self { max_total_pulls: 10_000_000, radius: RadiusMode::Raw }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditResult {
    /// `None` when the pull budget ran out with several arms active.
    pub winner: Option<usize>,
    pub total_pulls: u64,
    pub pulls: Vec<u64>,
    /// `(iteration, arm)` per pull.
    pub pull_trace: Vec<(u64, usize)>,
    /// `(iteration, arm)` per elimination.
    pub elimination_trace: Vec<(u64, usize)>,
    pub truncated: bool,
}

struct Arm {
    history: Vec<f64>,
    sum: f64,
    // One sequence per confidence level, caught up lazily from the history.
    seqs: Vec<(u64, ConfSeq)>,
}

impl Arm {
    fn interval<F>(&mut self, delta: f64, factory: &mut F) -> Result<Option<ConfidenceInterval>>
    where
        F: FnMut(f64) -> Result<ConfSeq>,
    {
        if self.history.is_empty() {
            return Ok(None);
        }
        let key = delta.to_bits();
        let idx = match self.seqs.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                self.seqs.push((key, factory(delta)?));
                self.seqs.len() - 1
            }
        };
        let cs = &mut self.seqs[idx].1;
        for &y in &self.history[cs.n() as usize..] {
            cs.update(y)?;
        }
        Ok(Some(cs.current()))
    }
}

/// Elimination-based best-arm identification.
///
/// Each iteration the leader (highest empirical mean, lowest id on ties) uses
/// level `(delta/2) / (|A| - 1)` and every other active arm `delta/2`. The arm
/// with the largest radius is pulled (ties: smaller mean, then lower id); an
/// arm that has never been pulled has infinite radius. Afterwards every
/// non-leader arm whose upper bound lies below the leader's lower bound is
/// removed, using the intervals computed at the start of the iteration.
pub fn best_arm<S, F>(arms: &mut [S], delta: f64, mut factory: F, opts: BestArmOptions) -> Result<BanditResult>
where
    S: RewardSource,
    F: FnMut(f64) -> Result<ConfSeq>,
{
    if arms.is_empty() {
        return Err(domain("best-arm identification needs at least one arm"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta = {delta} outside (0, 1)")));
    }
    let k = arms.len();
    let probe = factory(delta)?.support();
    let midpoint = 0.5 * (probe.lower + probe.upper);
    let mut state: Vec<Arm> = (0..k).map(|_| Arm { history: Vec::new(), sum: 0.0, seqs: Vec::new() }).collect();
    let mut active: Vec<usize> = (0..k).collect();
    let mut pulls = vec![0u64; k];
    let mut pull_trace = Vec::new();
    let mut elimination_trace = Vec::new();
    let mut total = 0u64;
    let mut iteration = 0u64;
    let mut truncated = false;

    let mean_of = |arm: &Arm| {
        if arm.history.is_empty() {
            midpoint
        } else {
            arm.sum / arm.history.len() as f64
        }
    };

    while active.len() > 1 {
        if total >= opts.max_total_pulls {
            truncated = true;
            break;
        }
        iteration += 1;
        let means: Vec<f64> = active.iter().map(|&a| mean_of(&state[a])).collect();
        let mut leader_pos = 0;
        for (i, &m) in means.iter().enumerate() {
            if m > means[leader_pos] {
                leader_pos = i;
            }
        }
        let leader = active[leader_pos];
        let leader_delta = 0.5 * delta / (active.len() - 1) as f64;

        // (lower, upper, radius) per active arm
        let mut bounds = Vec::with_capacity(active.len());
        for &a in &active {
            let d = if a == leader { leader_delta } else { 0.5 * delta };
            let b = match state[a].interval(d, &mut factory)? {
                None => (probe.lower, probe.upper, f64::INFINITY),
                Some(ci) => {
                    let r = match opts.radius {
                        RadiusMode::Raw => ci.raw_radius(),
                        RadiusMode::Reported => ci.radius,
                    };
                    (ci.lower, ci.upper, r)
                }
            };
            bounds.push(b);
        }

        let mut pick = 0;
        for i in 1..active.len() {
            let (ri, rp) = (bounds[i].2, bounds[pick].2);
            if ri > rp || (ri == rp && means[i] < means[pick]) {
                pick = i;
            }
        }
        let arm = active[pick];
        let y = arms[arm].draw();
        state[arm].history.push(y);
        state[arm].sum += y;
        pulls[arm] += 1;
        total += 1;
        pull_trace.push((iteration, arm));

        let leader_lower = bounds[leader_pos].0;
        let mut kept = Vec::with_capacity(active.len());
        for (i, &a) in active.iter().enumerate() {
            if a != leader && bounds[i].1 < leader_lower {
                elimination_trace.push((iteration, a));
            } else {
                kept.push(a);
            }
        }
        active = kept;
    }

    Ok(BanditResult {
        winner: if active.len() == 1 { Some(active[0]) } else { None },
        total_pulls: total,
        pulls,
        pull_trace,
        elimination_trace,
        truncated,
    })
}

/// Arm means `1 - (a / K)^0.6` for `a = 0, ..., K - 1`.
pub fn power_law_means(k: usize) -> Vec<f64> {
    (0..k).map(|a| 1.0 - (a as f64 / k as f64).powf(0.6)).collect()
}

/// Hardness `H1 = sum over suboptimal arms of (mu_best - mu_a)^-2`.
pub fn hardness_h1(means: &[f64]) -> f64 {
    let best = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut skipped = false;
    means
        .iter()
        .filter(|&&m| {
            if m == best && !skipped {
                skipped = true;
                false
            } else {
                true
            }
        })
        .map(|m| (best - m).powi(-2))
        .sum()
}

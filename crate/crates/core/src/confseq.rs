//! Online confidence sequences for the mean of bounded observations.
//!
//! [`Method::ABentkus`] is the empirical Bentkus sequence: at step `n`
//!
//! ```text
//! mu_up_n  = Ybar_n + q(d; c_n, A*_n, mu_up_{n-1} - L) / n
//! mu_low_n = Ybar_n - q(d; c_n, A*_n, U - mu_low_{n-1}) / n
//! ```
//!
//! with `d = delta1 / (2 h(k_n))`, `A*_n` the running-minimum variance
//! over-estimate at level `delta2`, `mu_up_0 = U` and `mu_low_0 = L`. The
//! reported interval is the running intersection `[max mu_low, min mu_up]`.
//!
//! The baselines use symmetric radii around the sample mean, truncated to
//! the support. Hoeffding-type radii spend `delta / 2` per side; the
//! empirical Bernstein radius already accounts for both sides.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bentkus::{bentkus_quantile_detailed, BentkusParams, Saturation};
use crate::error::{domain, Result};
use crate::stitching::StitchConfig;
use crate::variance::VarEstimatorState;

const REL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "A-Bentkus")]
    ABentkus,
    #[serde(rename = "A-Hoeffding")]
    AHoeffding,
    #[serde(rename = "E-Bernstein")]
    EBernstein,
    #[serde(rename = "Hoeffding-fixed")]
    HoeffdingFixed,
    #[serde(rename = "Bernstein-fixed")]
    BernsteinFixed,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::ABentkus, Method::AHoeffding, Method::EBernstein, Method::HoeffdingFixed, Method::BernsteinFixed];

    pub fn name(&self) -> &'static str {
        match self {
            Method::ABentkus => "A-Bentkus",
            Method::AHoeffding => "A-Hoeffding",
            Method::EBernstein => "E-Bernstein",
            Method::HoeffdingFixed => "Hoeffding-fixed",
            Method::BernsteinFixed => "Bernstein-fixed",
        }
    }

    /// Whether the intervals hold simultaneously over all `n`.
    pub fn is_anytime(&self) -> bool {
        !matches!(self, Method::HoeffdingFixed | Method::BernsteinFixed)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| domain(format!("unknown method '{s}'")))
    }
}

/// Almost-sure range `[lower, upper]` of the observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

impl Support {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(domain(format!("invalid support [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub n: u64,
    pub lower: f64,
    pub upper: f64,
    pub radius: f64,
    /// Non-cumulative step values (A-Bentkus) or untruncated endpoints (baselines).
    pub raw_lower: f64,
    pub raw_upper: f64,
    pub mean: f64,
    pub delta: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn raw_radius(&self) -> f64 {
        0.5 * (self.raw_upper - self.raw_lower)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Fixed-n Hoeffding threshold for the sum: `sqrt(n w^2 ln(1/delta) / 2)`.
pub fn hoeffding_bound(n: u64, delta: f64, width: f64) -> f64 {
    (n as f64 * width * width * (1.0 / delta).ln() / 2.0).sqrt()
}

/// Uniform-in-n Hoeffding threshold
/// `w sqrt(0.6 n ln(log_1.1 n + 1) + n ln(12/delta) / 1.8)`, using `n = 2` at `n = 1`.
pub fn adaptive_hoeffding_bound(n: u64, delta: f64, width: f64) -> f64 {
    let m = n.max(2) as f64;
    let loglog = (m.ln() / 1.1f64.ln() + 1.0).ln();
    width * (0.6 * m * loglog + m * (12.0 / delta).ln() / 1.8).sqrt()
}

/// Fixed-n Bernstein threshold `sqrt(2 n A^2 L + B^2 L^2 / 9) + B L / 3`, `L = ln(1/delta)`.
pub fn bernstein_bound(n: u64, delta: f64, a: f64, b: f64) -> f64 {
    let l = (1.0 / delta).ln();
    (2.0 * n as f64 * a * a * l + b * b * l * l / 9.0).sqrt() + b * l / 3.0
}

/// Stitched empirical Bernstein threshold
/// `sqrt(2 n eta A_hat^2 L) + 3 B eta L`, `L = ln(3 h(k_n) / (2 delta))`.
pub fn empirical_bernstein_bound(n: u64, delta: f64, a_hat_sq: f64, b: f64, cfg: &StitchConfig) -> f64 {
    let ep = cfg.epoch(n.max(1));
    let eta = cfg.eta();
    let l = (3.0 * cfg.h(ep.k) / (2.0 * delta)).ln();
    (2.0 * n as f64 * eta * a_hat_sq * l).sqrt() + 3.0 * b * eta * l
}

/// Running state of one confidence sequence.
#[derive(Debug, Clone)]
pub struct ConfSeq {
    method: Method,
    support: Support,
    delta: f64,
    cfg: StitchConfig,
    known_std: Option<f64>,
    n: u64,
    mean: f64,
    m2: f64,
    var_state: VarEstimatorState,
    mu_up_prev: f64,
    mu_lo_prev: f64,
    mu_up_star: f64,
    mu_lo_star: f64,
    last: ConfidenceInterval,
}

impl ConfSeq {
    /// New sequence with total error budget `delta`. The split between the
    /// boundary and variance budgets follows the ratio in `cfg`.
    pub fn new(method: Method, support: Support, delta: f64, cfg: &StitchConfig) -> Result<Self> {
        let support = Support::new(support.lower, support.upper)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(domain(format!("delta = {delta} outside (0, 1)")));
        }
        let cfg = cfg.with_total(delta)?;
        let (l, u) = (support.lower, support.upper);
        let last = ConfidenceInterval {
            n: 0,
            lower: l,
            upper: u,
            radius: 0.5 * (u - l),
            raw_lower: l,
            raw_upper: u,
            mean: 0.5 * (l + u),
            delta,
        };
        Ok(Self {
            method,
            support,
            delta,
            cfg,
            known_std: None,
            n: 0,
            mean: 0.0,
            m2: 0.0,
            var_state: VarEstimatorState::new(l, u)?,
            mu_up_prev: u,
            mu_lo_prev: l,
            mu_up_star: u,
            mu_lo_star: l,
            last,
        })
    }

    /// Standard deviation used by [`Method::BernsteinFixed`]; defaults to half the width.
    pub fn with_known_std(mut self, std: f64) -> Result<Self> {
        if !(std > 0.0) {
            return Err(domain(format!("known standard deviation {std} must be positive")));
        }
        self.known_std = Some(std);
        Ok(self)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance with divisor `n`.
    pub fn sample_variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }

    pub fn current(&self) -> ConfidenceInterval {
        self.last
    }

    pub fn update(&mut self, y: f64) -> Result<ConfidenceInterval> {
        let Support { lower: l, upper: u } = self.support;
        if !(l <= y && y <= u) {
            return Err(domain(format!("observation {y} outside support [{l}, {u}]")));
        }
        self.n += 1;
        let d = y - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (y - self.mean);
        self.var_state.push(y);

        let n = self.n as f64;
        let width = self.support.width();
        let (lower, upper, raw_lower, raw_upper) = match self.method {
            Method::ABentkus => self.bentkus_step()?,
            other => {
                let r = match other {
                    Method::AHoeffding => adaptive_hoeffding_bound(self.n, self.delta / 2.0, width) / n,
                    Method::EBernstein if self.n >= 2 => {
                        empirical_bernstein_bound(self.n, self.delta, self.sample_variance(), width, &self.cfg) / n
                    }
                    Method::EBernstein => width,
                    Method::HoeffdingFixed => hoeffding_bound(self.n, self.delta / 2.0, width) / n,
                    Method::BernsteinFixed => {
                        let a = self.known_std.unwrap_or(0.5 * width);
                        bernstein_bound(self.n, self.delta / 2.0, a, width) / n
                    }
                    Method::ABentkus => unreachable!(),
                };
                let (rl, ru) = (self.mean - r, self.mean + r);
                (rl.max(l), ru.min(u), rl, ru)
            }
        };
        self.last = ConfidenceInterval {
            n: self.n,
            lower,
            upper,
            radius: 0.5 * (upper - lower),
            raw_lower,
            raw_upper,
            mean: self.mean,
            delta: self.delta,
        };
        Ok(self.last)
    }

    fn bentkus_step(&mut self) -> Result<(f64, f64, f64, f64)> {
        let Support { lower: l, upper: u } = self.support;
        let width = u - l;
        let floor = REL_FLOOR * width;
        let a_star = self.var_state.var_upper_bound(self.cfg.delta2(), &self.cfg)?;
        let ep = self.cfg.epoch(self.n);
        let level = self.cfg.delta1() / (2.0 * self.cfg.h(ep.k));
        let n = self.n as f64;

        let below = BentkusParams::floored(a_star, (self.mu_up_prev - l).max(floor), REL_FLOOR)?;
        let above = BentkusParams::floored(a_star, (u - self.mu_lo_prev).max(floor), REL_FLOOR)?;
        let mu_up = self.mean + step_quantile(level, ep.c, &below)? / n;
        let mu_lo = self.mean - step_quantile(level, ep.c, &above)? / n;

        self.mu_up_prev = mu_up;
        self.mu_lo_prev = mu_lo;
        self.mu_up_star = self.mu_up_star.min(mu_up);
        self.mu_lo_star = self.mu_lo_star.max(mu_lo);
        if self.mu_lo_star > self.mu_up_star {
            // Only possible off the coverage event; keep a degenerate interval.
            let mid = 0.5 * (self.mu_lo_star + self.mu_up_star);
            self.mu_lo_star = mid;
            self.mu_up_star = mid;
        }
        Ok((self.mu_lo_star, self.mu_up_star, mu_lo, mu_up))
    }
}

// Below the top atom the quantile is `nB + 1`; `(n + 1) B` carries the same
// information and keeps the recursion equivariant under affine maps.
fn step_quantile(level: f64, c: u64, params: &BentkusParams) -> Result<f64> {
    let q = bentkus_quantile_detailed(level, c, params)?;
    Ok(match q.saturation {
        Saturation::BelowAtom => (c + 1) as f64 * params.b(),
        _ => q.value,
    })
}

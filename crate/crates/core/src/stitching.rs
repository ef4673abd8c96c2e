//! Geometric epochs and the stitched, uniform-in-n Bentkus boundary.
//!
//! Sample sizes are grouped into epochs `[ceil(eta^k), floor(eta^(k+1))]`.
//! Epoch `k` spends the budget `delta / h(k)` with
//! `h(k) = zeta(c) (k + 1)^c`, so the budgets sum to `delta`.

use serde::{Deserialize, Serialize};

use crate::bentkus::{bentkus_quantile, BentkusParams};
use crate::error::{domain, Result};

/// Epoch index `k` and cap `c = floor(eta^(k+1))` for a sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Epoch {
    pub k: u32,
    pub c: u64,
}

fn epoch_bounds(k: u32, eta: f64) -> (f64, f64) {
    (eta.powi(k as i32).ceil(), eta.powi(k as i32 + 1).floor())
}

fn in_epoch(n: u64, k: u32, eta: f64) -> bool {
    let (lo, hi) = epoch_bounds(k, eta);
    lo <= n as f64 && n as f64 <= hi
}

/// Smallest `k` with `ceil(eta^k) <= n <= floor(eta^(k+1))`.
///
/// The float estimate `floor(ln n / ln eta)` only seeds an integer scan; the
/// returned epoch always satisfies the defining inequality.
pub fn epoch(n: u64, eta: f64) -> Epoch {
    assert!(n >= 1 && eta > 1.0, "epoch needs n >= 1 and eta > 1");
    let k0 = ((n as f64).ln() / eta.ln()).floor() as i64;
    let mut k = (k0 - 2).max(0) as u32;
    while !in_epoch(n, k, eta) {
        k += 1;
    }
    Epoch { k, c: epoch_bounds(k, eta).1 as u64 }
}

/// Riemann zeta function for real `c > 1`.
///
/// Partial sum up to `N - 1` plus the Euler-Maclaurin tail at `N`.
pub fn zeta(c: f64) -> Result<f64> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(domain(format!("zeta needs c > 1, got {c}")));
    }
    const N: f64 = 20.0;
    // B_{2m} / (2m)!
    const COEF: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
    ];
    let mut sum: f64 = (1..N as u32).rev().map(|j| (j as f64).powf(-c)).sum();
    sum += N.powf(1.0 - c) / (c - 1.0) + 0.5 * N.powf(-c);
    // rising factorial c (c + 1) ... (c + 2m - 2), times N^(-c - 2m + 1)
    let mut rising = c;
    let mut power = N.powf(-c - 1.0);
    for (m, coef) in COEF.iter().enumerate() {
        if m > 0 {
            let r = (2 * m) as f64;
            rising *= (c + r - 1.0) * (c + r);
            power /= N * N;
        }
        sum += coef * rising * power;
    }
    Ok(sum)
}

/// Which part of the error budget a stitched quantity spends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Boundary,
    Variance,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StitchConfigRaw {
    eta: f64,
    power: f64,
    delta1: f64,
    delta2: f64,
}

/// Epoch spacing `eta`, stitching power `c` and the budget split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StitchConfigRaw", into = "StitchConfigRaw")]
pub struct StitchConfig {
    eta: f64,
    power: f64,
    delta1: f64,
    delta2: f64,
    zeta_power: f64,
}

impl TryFrom<StitchConfigRaw> for StitchConfig {
    type Error = crate::Error;
    fn try_from(r: StitchConfigRaw) -> Result<Self> {
        Self::new(r.eta, r.power, r.delta1, r.delta2)
    }
}

impl From<StitchConfig> for StitchConfigRaw {
    fn from(c: StitchConfig) -> Self {
        Self { eta: c.eta, power: c.power, delta1: c.delta1, delta2: c.delta2 }
    }
}

impl Default for StitchConfig {
    fn default() -> Self {
        Self::for_delta(0.05).expect("valid defaults")
    }
}

impl StitchConfig {
    pub fn new(eta: f64, power: f64, delta1: f64, delta2: f64) -> Result<Self> {
        if !(eta > 1.0 && eta.is_finite()) {
            return Err(domain(format!("eta = {eta} must exceed 1")));
        }
        if !(delta1 > 0.0 && delta2 >= 0.0 && delta1 + delta2 <= 1.0) {
            return Err(domain(format!("budgets ({delta1}, {delta2}) must be positive with sum at most 1")));
        }
        let zeta_power = zeta(power)?;
        Ok(Self { eta, power, delta1, delta2, zeta_power })
    }

    /// `eta = power = 1.1`, `delta1 = 2 delta / 3`, `delta2 = delta / 3`.
    pub fn for_delta(delta: f64) -> Result<Self> {
        Self::new(1.1, 1.1, 2.0 * delta / 3.0, delta / 3.0)
    }

    /// Same geometry and split ratio, rescaled to a total budget `delta`.
    pub fn with_total(&self, delta: f64) -> Result<Self> {
        let total = self.delta1 + self.delta2;
        Self::new(self.eta, self.power, delta * self.delta1 / total, delta * self.delta2 / total)
    }

    /// Same budgets with a different spacing and power.
    pub fn with_geometry(&self, eta: f64, power: f64) -> Result<Self> {
        Self::new(eta, power, self.delta1, self.delta2)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn delta2(&self) -> f64 {
        self.delta2
    }

    pub fn delta(&self) -> f64 {
        self.delta1 + self.delta2
    }

    pub fn epoch(&self, n: u64) -> Epoch {
        epoch(n, self.eta)
    }

    /// `h(k) = zeta(c) (k + 1)^c`.
    pub fn h(&self, k: u32) -> f64 {
        self.zeta_power * (k as f64 + 1.0).powf(self.power)
    }

    pub fn budget(&self, k: u32, which: BudgetKind) -> f64 {
        budget(k, self, which)
    }
}

/// `delta1 / h(k)` or `delta2 / h(k)`.
pub fn budget(k: u32, cfg: &StitchConfig, which: BudgetKind) -> f64 {
    let delta = match which {
        BudgetKind::Boundary => cfg.delta1,
        BudgetKind::Variance => cfg.delta2,
    };
    delta / cfg.h(k)
}

/// Stitched threshold `q(delta1 / h(k_n); c_n, A, B)` for the sum `S_n`.
pub fn adaptive_bentkus_bound(n: u64, params: &BentkusParams, cfg: &StitchConfig) -> Result<f64> {
    if n == 0 {
        return Err(domain("adaptive bound needs n >= 1"));
    }
    let ep = cfg.epoch(n);
    bentkus_quantile(budget(ep.k, cfg, BudgetKind::Boundary), ep.c, params)
}

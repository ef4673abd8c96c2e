//! Binomial tail tables.
//!
//! A [`BinomialTable`] stores, for each threshold `k`, the log tail
//! `ln P(Z >= k)` together with the conditional excess mean
//! `E[Z - k | Z >= k]` and conditional variance `Var(Z | Z >= k)`.
//! The truncated moments `e_k = E[Z 1{Z >= k}]` and `v_k = E[Z^2 1{Z >= k}]`
//! are derived from these on demand. Keeping conditional quantities avoids
//! both underflow of tiny tails and cancellation in `v_k - k e_k`.
//!
//! Masses are built by ratio recurrences outward from the mode and
//! accumulated from the top down (smallest terms first). Only the window
//! where the mass is within `WINDOW_CUT` of the mode is tabulated; thresholds
//! above the window are evaluated directly from the log-mass, and thresholds
//! below it share the statistics of the window's lower edge.

use crate::error::{domain, Result};
use crate::special::ln_binom_pmf;

const WINDOW_CUT: f64 = 1e-20;
const SERIES_EPS: f64 = 1e-18;

/// Tail statistics of `Z ~ Bin(n, p)` restricted to `{Z >= k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailStats {
    /// `ln P(Z >= k)`.
    pub log_tail: f64,
    /// `E[Z - k | Z >= k]`.
    pub excess: f64,
    /// `Var(Z | Z >= k)`.
    pub var: f64,
}

impl TailStats {
    pub fn tail(&self) -> f64 {
        self.log_tail.exp()
    }
}

/// Immutable tail table for `Bin(n, p)`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    n: u64,
    p: f64,
    lo: u64,
    hi: u64,
    log_tail: Vec<f64>,
    excess: Vec<f64>,
    var: Vec<f64>,
}

/// Binomial probability mass `C(n, k) p^k (1 - p)^(n - k)`.
pub fn binom_pmf(n: u64, p: f64, k: u64) -> Result<f64> {
    check_p(p)?;
    if k > n {
        return Err(domain(format!("k = {k} outside [0, {n}]")));
    }
    Ok(ln_binom_pmf(n, k, p).exp())
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

// Relative sums over j >= k of pmf(j) / pmf(k): (S0, S1, S2) with S_r = sum (j - k)^r t_j.
fn upper_series(n: u64, k: u64, ratio: f64) -> (f64, f64, f64) {
    let (mut s0, mut s1, mut s2) = (1.0, 0.0, 0.0);
    let mut t = 1.0;
    let mut j = k;
    while j < n {
        t *= (n - j) as f64 / (j + 1) as f64 * ratio;
        j += 1;
        let d = (j - k) as f64;
        s0 += t;
        s1 += d * t;
        s2 += d * d * t;
        if t < SERIES_EPS * s0 {
            break;
        }
    }
    (s0, s1, s2)
}

fn series_moments(s: (f64, f64, f64)) -> (f64, f64) {
    let d = s.1 / s.0;
    (d, (s.2 / s.0 - d * d).max(0.0))
}

impl BinomialTable {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        check_p(p)?;
        if n == 0 {
            return Err(domain("binomial table needs n >= 1"));
        }
        let q = 1.0 - p;
        let up_ratio = p / q;
        let down_ratio = q / p;
        let mode = (((n + 1) as f64 * p).floor() as u64).min(n);

        let mut above = Vec::new();
        let mut w = 1.0;
        let mut j = mode;
        while j < n {
            w *= (n - j) as f64 / (j + 1) as f64 * up_ratio;
            if !(w >= WINDOW_CUT) {
                break;
            }
            above.push(w);
            j += 1;
        }
        let mut below = Vec::new();
        let mut w = 1.0;
        let mut j = mode;
        while j > 0 {
            w *= j as f64 / (n - j + 1) as f64 * down_ratio;
            if !(w >= WINDOW_CUT) {
                break;
            }
            below.push(w);
            j -= 1;
        }
        let lo = mode - below.len() as u64;
        let hi = mode + above.len() as u64;
        let mut weights: Vec<f64> = below.into_iter().rev().collect();
        weights.push(1.0);
        weights.extend(above);

        let len = weights.len();
        let mut log_w = vec![0.0; len];
        let mut excess = vec![0.0; len];
        let mut var = vec![0.0; len];

        // State for {Z >= k + 1}: total weight, excess over k + 1, variance.
        let (mut total, mut d, mut v) = (0.0, 0.0, 0.0);
        if hi < n {
            let first = weights[len - 1] * (n - hi) as f64 / (hi + 1) as f64 * up_ratio;
            let s = upper_series(n, hi + 1, up_ratio);
            let (sd, sv) = series_moments(s);
            total = first * s.0;
            d = sd;
            v = sv;
        }
        for idx in (0..len).rev() {
            let wk = weights[idx];
            if total == 0.0 {
                total = wk;
                d = 0.0;
                v = 0.0;
            } else {
                let shifted = d + 1.0;
                let new_total = total + wk;
                let f = wk / new_total;
                d = (1.0 - f) * shifted;
                v = (1.0 - f) * (v + f * shifted * shifted);
                total = new_total;
            }
            log_w[idx] = total.ln();
            excess[idx] = d;
            var[idx] = v;
        }
        let norm = log_w[0];
        let log_tail = log_w.into_iter().map(|l| l - norm).collect();
        Ok(Self { n, p, lo, hi, log_tail, excess, var })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mean(&self) -> f64 {
        self.n as f64 * self.p
    }

    pub fn variance(&self) -> f64 {
        self.n as f64 * self.p * (1.0 - self.p)
    }

    /// `P(Z = n) = p^n`.
    pub fn top_atom(&self) -> f64 {
        if self.n <= i32::MAX as u64 {
            self.p.powi(self.n as i32)
        } else {
            (self.n as f64 * self.p.ln()).exp()
        }
    }

    /// Conditional statistics of `{Z >= k}` for `k <= n`.
    pub fn stats(&self, k: u64) -> TailStats {
        assert!(k <= self.n, "threshold {k} beyond n = {}", self.n);
        if k < self.lo {
            return TailStats {
                log_tail: self.log_tail[0],
                excess: self.excess[0] + (self.lo - k) as f64,
                var: self.var[0],
            };
        }
        if k <= self.hi {
            let i = (k - self.lo) as usize;
            return TailStats { log_tail: self.log_tail[i], excess: self.excess[i], var: self.var[i] };
        }
        let lp = ln_binom_pmf(self.n, k, self.p);
        if lp == f64::NEG_INFINITY {
            return TailStats { log_tail: lp, excess: 0.0, var: 0.0 };
        }
        let s = upper_series(self.n, k, self.p / (1.0 - self.p));
        let (excess, var) = series_moments(s);
        TailStats { log_tail: lp + s.0.ln(), excess, var }
    }

    /// `ln P(Z >= k)`, with the conventions `0` for `k <= 0` and `-inf` for `k > n`.
    pub fn log_tail(&self, k: i64) -> f64 {
        if k <= 0 {
            0.0
        } else if k as u64 > self.n {
            f64::NEG_INFINITY
        } else {
            self.stats(k as u64).log_tail
        }
    }

    /// `P(Z >= k)`; 1 for `k <= 0` and 0 for `k > n`.
    pub fn tail(&self, k: i64) -> f64 {
        self.log_tail(k).exp()
    }

    /// Truncated moments `(P(Z >= k), E[Z 1{Z >= k}], E[Z^2 1{Z >= k}])`.
    pub fn partial_moments(&self, k: u64) -> Result<(f64, f64, f64)> {
        if k > self.n {
            return Err(domain(format!("k = {k} outside [0, {}]", self.n)));
        }
        if k == 0 {
            let m = self.mean();
            return Ok((1.0, m, self.variance() + m * m));
        }
        let s = self.stats(k);
        let pk = s.tail();
        let m1 = k as f64 + s.excess;
        Ok((pk, pk * m1, pk * (s.var + m1 * m1)))
    }

    /// Log-linear interpolation of the tail between integers.
    pub fn tail_loglinear(&self, x: f64) -> Result<f64> {
        let nf = self.n as f64;
        if !(0.0..=nf).contains(&x) {
            return Err(domain(format!("x = {x} outside [0, {}]", self.n)));
        }
        let k = x.ceil();
        if k == x {
            return Ok(self.tail(k as i64));
        }
        let lambda = x - (k - 1.0);
        let lt0 = self.log_tail(k as i64 - 1);
        let lt1 = self.log_tail(k as i64);
        Ok(((1.0 - lambda) * lt0 + lambda * lt1).exp())
    }

    /// Largest `k` in `[0, n]` with `P(Z >= k) >= level`.
    pub fn largest_k_with_tail_at_least(&self, level: f64) -> u64 {
        let target = level.ln();
        let (mut lo, mut hi) = (0u64, self.n);
        if self.log_tail(hi as i64) >= target {
            return hi;
        }
        // invariant: tail(lo) >= level > tail(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.log_tail(mid as i64) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Smallest `k` in `[0, n]` with `P(Z >= k) <= level`, or `n` if none.
    pub fn smallest_k_with_tail_at_most(&self, level: f64) -> u64 {
        let target = level.ln();
        if self.log_tail(self.n as i64) > target {
            return self.n;
        }
        if self.log_tail(0) <= target {
            return 0;
        }
        // invariant: tail(lo) > level >= tail(hi)
        let (mut lo, mut hi) = (0u64, self.n);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.log_tail(mid as i64) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        assert!((binom_pmf(3, 0.5, 1).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(binom_pmf(5, 0.0, 0).unwrap(), 1.0);
        assert!(binom_pmf(5, 0.5, 6).is_err());
        assert!(binom_pmf(5, 1.5, 1).is_err());

        let t = BinomialTable::new(3, 0.5).unwrap();
        assert!((t.tail(2) - 0.5).abs() < 1e-15);
        assert_eq!(t.tail(0), 1.0);
        assert_eq!(t.tail(-3), 1.0);
        assert_eq!(t.tail(4), 0.0);
        assert!((t.tail_loglinear(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((t.tail_loglinear(1.5).unwrap() - (0.875f64 * 0.5).sqrt()).abs() < 1e-15);
        assert_eq!(t.tail_loglinear(0.0).unwrap(), 1.0);
        assert!(t.tail_loglinear(3.5).is_err());

        let t = BinomialTable::new(2, 0.5).unwrap();
        let (p1, e1, v1) = t.partial_moments(1).unwrap();
        assert!((p1 - 0.75).abs() < 1e-15 && (e1 - 1.0).abs() < 1e-15 && (v1 - 1.5).abs() < 1e-15);
        assert_eq!(t.partial_moments(0).unwrap(), (1.0, 1.0, 1.5));
        assert!(t.partial_moments(3).is_err());
    }

    #[test]
    fn degenerate_laws() {
        let t = BinomialTable::new(4, 0.0).unwrap();
        assert_eq!(t.tail(0), 1.0);
        assert_eq!(t.tail(1), 0.0);
        let t = BinomialTable::new(4, 1.0).unwrap();
        assert_eq!(t.tail(4), 1.0);
        let (p, e, v) = t.partial_moments(2).unwrap();
        assert_eq!((p, e, v), (1.0, 4.0, 16.0));
    }

    #[test]
    fn large_table_tails_are_finite_and_ordered() {
        let t = BinomialTable::new(100_000, 1e-4).unwrap();
        let mut prev = 0.0;
        for k in 0..=200 {
            let lt = t.log_tail(k);
            assert!(lt <= prev + 1e-15, "k={k}");
            prev = lt;
        }
        assert!((t.log_tail(100_000) - 100_000.0 * 1e-4f64.ln()).abs() < 1e-6 * 921_034.0);
    }

    #[test]
    fn brackets_on_tail() {
        let t = BinomialTable::new(2, 0.5).unwrap();
        assert_eq!(t.largest_k_with_tail_at_least(1.0), 0);
        assert_eq!(t.largest_k_with_tail_at_least(0.3), 1);
        assert_eq!(t.smallest_k_with_tail_at_most(0.01), 2);
        assert_eq!(t.smallest_k_with_tail_at_most(0.5), 2);
        assert_eq!(t.smallest_k_with_tail_at_most(0.8), 1);
    }
}

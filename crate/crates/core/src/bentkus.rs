//! Fixed-n Bentkus tail `P2` and its quantile.
//!
//! For mean-zero summands with variance at most `A^2` and upper bound `B`,
//! the worst case is a two-point law whose sum is an affine image of
//! `Z ~ Bin(n, p_AB)` with `p_AB = A^2 / (A^2 + B^2)`. `P2(x; Z)` is piecewise
//! rational in `x` with breakpoints `psi_k`; on the branch `(psi_{k-1}, psi_k]`
//!
//! ```text
//! P2(x) = p_k Var_k / ((x - m_k)^2 + Var_k)
//! ```
//!
//! where `p_k`, `m_k` and `Var_k` are the tail probability, conditional mean
//! and conditional variance of `Z` on `{Z >= k}`. This is the same rational
//! function as `(v_k p_k - e_k^2) / (x^2 p_k - 2 x e_k + v_k)`, written so that
//! it stays accurate when `p_k` is tiny.

use std::hash::Hash;
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

use lru::LruCache;

use crate::binom::BinomialTable;
use crate::error::{domain, Error, Result};

const BRANCH_TOL: f64 = 1e-12;
const E2_HALF: f64 = 3.694_528_049_465_325;

/// Standard-deviation bound `A` and upper bound `B` of the centered summands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BentkusParams {
    a: f64,
    b: f64,
    p_ab: f64,
}

impl BentkusParams {
    /// Rejects `A <= 0` (the two-point law degenerates) and `B <= 0`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(domain(format!("B = {b} must be positive and finite")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(domain(format!("A = {a} must be positive and finite")));
        }
        let (a2, b2) = (a * a, b * b);
        Ok(Self { a, b, p_ab: a2 / (a2 + b2) })
    }

    /// Like [`BentkusParams::new`] but floors `A` at `rel_floor * B`.
    pub fn floored(a: f64, b: f64, rel_floor: f64) -> Result<Self> {
        Self::new(a.max(rel_floor * b), b)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn p_ab(&self) -> f64 {
        self.p_ab
    }

    /// Binomial coordinate of the sum level `u`: `x = n p + u B / (A^2 + B^2)`.
    pub fn to_binomial(&self, n: u64, u: f64) -> f64 {
        n as f64 * self.p_ab + u * self.b / (self.a * self.a + self.b * self.b)
    }

    /// Sum level of the binomial coordinate `x`: `((A^2 + B^2) x - n A^2) / B`.
    pub fn from_binomial(&self, n: u64, x: f64) -> f64 {
        (x - n as f64 * self.p_ab) * (self.a * self.a + self.b * self.b) / self.b
    }
}

/// Breakpoints `psi_0 <= ... <= psi_{n-1} = n` of `P2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints {
    pub psi: Vec<f64>,
}

/// How a quantile request relates to the top atom `P(Z = n) = p^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Saturation {
    None,
    /// `delta` equals the top atom; the quantile is the right end of the support.
    AtAtom,
    /// `delta` is below the top atom; no finite level achieves it.
    BelowAtom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialQuantile {
    pub x: f64,
    pub saturation: Saturation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantile {
    pub value: f64,
    pub saturation: Saturation,
}

fn psi_at(table: &BinomialTable, k: u64) -> Result<f64> {
    let n = table.n();
    if k + 1 == n {
        return Ok(n as f64);
    }
    if k == 0 {
        return Ok(table.mean() + (1.0 - table.p()));
    }
    let s = table.stats(k);
    if !(s.excess > 0.0) {
        return Err(Error::Numeric(format!("non-positive breakpoint denominator at k = {k}")));
    }
    Ok(k as f64 + s.excess + s.var / s.excess)
}

/// Breakpoints `psi_k = (v_k - k e_k) / (e_k - k p_k)` for `k = 0..n-1`.
pub fn psi_breakpoints(table: &BinomialTable) -> Result<Breakpoints> {
    let p = table.p();
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("breakpoints need p in (0, 1), got {p}")));
    }
    let psi = (0..table.n()).map(|k| psi_at(table, k)).collect::<Result<Vec<_>>>()?;
    Ok(Breakpoints { psi })
}

fn branch_value(table: &BinomialTable, k: u64, x: f64) -> f64 {
    let s = table.stats(k);
    let dx = (x - k as f64) - s.excess;
    s.tail() * s.var / (dx * dx + s.var)
}

// ln P2(psi_k) = ln(p_k d^2 / (Var + d^2)) with d the conditional excess.
fn ln_breakpoint_value(table: &BinomialTable, k: u64) -> f64 {
    if k == 0 {
        let np = table.mean();
        return (np / (1.0 - table.p() + np)).ln();
    }
    let s = table.stats(k);
    let d2 = s.excess * s.excess;
    s.log_tail + d2.ln() - (s.var + d2).ln()
}

/// `P2(x; Z)` for `Z ~ Bin(n, p)`.
pub fn p2_binomial(x: f64, table: &BinomialTable) -> f64 {
    let n = table.n();
    let nf = n as f64;
    let p = table.p();
    let np = table.mean();
    if x <= np {
        return 1.0;
    }
    if x > nf || p == 0.0 {
        return 0.0;
    }
    if x >= nf {
        return table.top_atom();
    }
    let psi0 = np + (1.0 - p);
    if n == 1 || x <= psi0 * (1.0 + BRANCH_TOL) {
        let v = table.variance();
        let dx = x - np;
        return v / (dx * dx + v);
    }
    // psi_k >= k + 1, so the branch index is below x.
    let mut lo = 1u64;
    let mut hi = ((x.ceil() as u64).saturating_sub(1)).clamp(1, n - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let psi = psi_at(table, mid).unwrap_or(f64::INFINITY);
        if x <= psi * (1.0 + BRANCH_TOL) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    branch_value(table, lo, x)
}

/// Integer bracket `(k1, k2)`: `k1` is the largest `k` with `P(Z >= k) >= delta`,
/// `k2` the smallest with `P(Z >= k) <= 2 delta / e^2` (clamped to `n`).
pub fn bracket_quantile(delta: f64, table: &BinomialTable) -> (u64, u64) {
    let k1 = table.largest_k_with_tail_at_least(delta);
    let k2 = table.smallest_k_with_tail_at_most(delta / E2_HALF);
    (k1, k2)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain(format!("delta = {delta} outside (0, 1]")));
    }
    Ok(())
}

/// Solution `x` of `P2(x; Z) = delta`.
///
/// Below the top atom there is no solution; the right end `n` is returned
/// together with [`Saturation::BelowAtom`].
pub fn p2_quantile_binomial(delta: f64, table: &BinomialTable) -> Result<BinomialQuantile> {
    check_delta(delta)?;
    let n = table.n();
    let nf = n as f64;
    let p = table.p();
    let np = table.mean();
    let done = |x: f64| Ok(BinomialQuantile { x, saturation: Saturation::None });
    if p == 0.0 || p == 1.0 {
        return done(np);
    }
    let top = table.top_atom();
    if delta < top {
        return Ok(BinomialQuantile { x: nf, saturation: Saturation::BelowAtom });
    }
    if delta == top {
        return Ok(BinomialQuantile { x: nf, saturation: Saturation::AtAtom });
    }
    let q = 1.0 - p;
    if n == 1 || delta >= np / (q + np) {
        return done(np + ((1.0 - delta) / delta * table.variance()).sqrt());
    }
    let (_, k2) = bracket_quantile(delta, table);
    let kmax = k2.clamp(1, n - 1);
    let ln_delta = delta.ln();
    let (mut lo, mut hi) = (1u64, kmax);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ln_breakpoint_value(table, mid) <= ln_delta {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let k = lo;
    let s = table.stats(k);
    let ratio = ((s.log_tail - ln_delta).exp() - 1.0).max(0.0);
    let x = k as f64 + s.excess + (s.var * ratio).sqrt();
    let left = psi_at(table, k - 1)?;
    let right = psi_at(table, k)?;
    done(x.clamp(left, right))
}

/// `P2~_n(u)`: the Bentkus bound on `P(S_n >= u)`.
pub fn bentkus_tail(u: f64, n: u64, params: &BentkusParams) -> Result<f64> {
    let table = BinomialTable::new(n, params.p_ab())?;
    Ok(p2_binomial(params.to_binomial(n, u), &table))
}

/// Quantile `q(delta; n, A, B)` without caching, with its saturation status.
///
/// Saturation follows the convention `q = nB` at the top atom and
/// `q = nB + 1` below it.
pub fn bentkus_quantile_detailed(delta: f64, n: u64, params: &BentkusParams) -> Result<Quantile> {
    check_delta(delta)?;
    let table = BinomialTable::new(n, params.p_ab())?;
    let xq = p2_quantile_binomial(delta, &table)?;
    let nb = n as f64 * params.b();
    let value = match xq.saturation {
        Saturation::None => params.from_binomial(n, xq.x),
        Saturation::AtAtom => nb,
        Saturation::BelowAtom => nb + 1.0,
    };
    Ok(Quantile { value, saturation: xq.saturation })
}

/// Quantile `q(delta; n, A, B)` through the process-wide [`QuantileCache`].
pub fn bentkus_quantile(delta: f64, n: u64, params: &BentkusParams) -> Result<f64> {
    Ok(QuantileCache::global().get(delta, n, params)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    n: u64,
    a: u64,
    b: u64,
    mantissa: i64,
    exponent: i32,
}

// delta rounded to 12 significant digits, as an exact integer pair.
fn quantize(delta: f64) -> (i64, i32) {
    let exponent = delta.log10().floor() as i32;
    let mantissa = (delta / 10f64.powi(exponent - 11)).round() as i64;
    (mantissa, exponent)
}

/// Bounded LRU cache of quantiles, safe for concurrent use.
///
/// Entries are bucketed by `delta` rounded to 12 significant digits and keep
/// the exact `delta` they were computed for; a lookup with a different exact
/// `delta` recomputes, so cached answers equal fresh ones bit for bit.
pub struct QuantileCache {
    inner: Mutex<LruCache<CacheKey, (u64, Quantile)>>,
}

impl QuantileCache {
    pub fn new(capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).expect("non-zero");
        Self { inner: Mutex::new(LruCache::new(cap)) }
    }

    pub fn global() -> &'static QuantileCache {
        static CACHE: OnceLock<QuantileCache> = OnceLock::new();
        CACHE.get_or_init(|| QuantileCache::new(1 << 16))
    }

    pub fn get(&self, delta: f64, n: u64, params: &BentkusParams) -> Result<Quantile> {
        check_delta(delta)?;
        let (mantissa, exponent) = quantize(delta);
        let key = CacheKey { n, a: params.a().to_bits(), b: params.b().to_bits(), mantissa, exponent };
        if let Some(&(bits, q)) = self.lock().get(&key) {
            if bits == delta.to_bits() {
                return Ok(q);
            }
        }
        let q = bentkus_quantile_detailed(delta, n, params)?;
        self.lock().put(key, (delta.to_bits(), q));
        Ok(q)
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, LruCache<CacheKey, (u64, Quantile)>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}

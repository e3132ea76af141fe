//! Integer substrate: the `r₂` sieve, Möbius function, square-free cores and
//! exact integer square roots.

use crate::error::{Error, Result};

/// Sieved representation counts `r₂(m) = #{(a, b) ∈ ℤ² : a² + b² = m}` for `0 ≤ m ≤ limit`.
///
/// `values[0] = 1` (the single pair `(0, 0)`).
#[derive(Debug, Clone)]
pub struct R2Table {
    limit: u64,
    values: Vec<u32>,
    nonzero: Vec<(u32, u32)>,
}

impl R2Table {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// `r₂(m)`, or `None` beyond the table.
    #[inline]
    pub fn get(&self, m: u64) -> Option<u32> {
        self.values.get(usize::try_from(m).ok()?).copied()
    }

    /// All `(m, r₂(m))` with `r₂(m) > 0`, in increasing `m` (starts with `(0, 1)`).
    pub fn nonzero(&self) -> &[(u32, u32)] {
        &self.nonzero
    }

    /// The nonzero entries with `m ≤ bound`.
    pub fn nonzero_upto(&self, bound: u64) -> &[(u32, u32)] {
        let end = self.nonzero.partition_point(|&(m, _)| u64::from(m) <= bound);
        &self.nonzero[..end]
    }

    /// Errors unless the table covers every `m ≤ bound`.
    pub fn require(&self, bound: u64) -> Result<()> {
        if bound > self.limit {
            return Err(Error::Precondition(format!("r2 table limit {} does not cover m = {}", self.limit, bound)));
        }
        Ok(())
    }

    /// `Σ_{m ≤ y} r₂(m)` (including `m = 0`).
    pub fn partial_sum(&self, y: u64) -> Result<u64> {
        self.require(y)?;
        Ok(self.values[..=y as usize].iter().map(|&v| u64::from(v)).sum())
    }
}

fn try_zeroed<T: Clone + Default>(len: usize, what: &str) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|e| Error::Resource(format!("cannot allocate {what} of length {len}: {e}")))?;
    v.resize(len, T::default());
    Ok(v)
}

/// Builds the `r₂` table by the double loop over `a, b ≥ 0` with `a² + b² ≤ limit`.
pub fn build_r2(limit: u64) -> Result<R2Table> {
    if limit >= u64::from(u32::MAX) {
        return Err(Error::Limit(format!("r2 limit {limit} exceeds 32-bit indexing")));
    }
    let len = limit as usize + 1;
    let mut values: Vec<u32> = try_zeroed(len, "r2 table")?;
    let mut a = 0u64;
    while a * a <= limit {
        let wa = if a == 0 { 1 } else { 2 };
        let mut b = 0u64;
        while a * a + b * b <= limit {
            let wb = if b == 0 { 1 } else { 2 };
            values[(a * a + b * b) as usize] += wa * wb;
            b += 1;
        }
        a += 1;
    }
    let count = values.iter().filter(|&&v| v > 0).count();
    let mut nonzero = Vec::new();
    nonzero.try_reserve_exact(count).map_err(|e| Error::Resource(format!("cannot allocate r2 index: {e}")))?;
    nonzero.extend(values.iter().enumerate().filter(|(_, &v)| v > 0).map(|(m, &v)| (m as u32, v)));
    Ok(R2Table { limit, values, nonzero })
}

/// `⌊√n⌋` for any `u128`.
///
/// A float estimate seeds an integer Newton iteration; the result is then
/// corrected so that `r² ≤ n < (r + 1)²` holds exactly.
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u128;
    if r == 0 {
        r = 1;
    }
    // Newton from the float seed; converges in a couple of steps.
    for _ in 0..4 {
        let next = (r + n / r) >> 1;
        if next == r {
            break;
        }
        r = next;
    }
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// `⌊√n⌋` for `n < 2⁶²`, the hot path of the counting kernel.
#[inline]
pub fn isqrt_u64(n: u64) -> u64 {
    debug_assert!(n < 1 << 62);
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Unique decomposition `m = core · k²` with `core` square-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoreDecomposition {
    pub m: u64,
    pub core: u64,
    pub k: u64,
}

fn check_positive(m: u64) -> Result<()> {
    if m == 0 {
        Err(Error::Domain("argument must be a positive integer, got 0".into()))
    } else {
        Ok(())
    }
}

/// Prime factorisation `[(p, e)]` by trial division.
fn trial_factor(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

fn mobius_from(factors: &[(u64, u32)]) -> i8 {
    if factors.iter().any(|&(_, e)| e > 1) {
        0
    } else if factors.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn core_from(m: u64, factors: &[(u64, u32)]) -> CoreDecomposition {
    let mut core = 1;
    let mut k = 1;
    for &(p, e) in factors {
        if e % 2 == 1 {
            core *= p;
        }
        k *= p.pow(e / 2);
    }
    CoreDecomposition { m, core, k }
}

/// Möbius function by trial division.
pub fn mobius(m: u64) -> Result<i8> {
    check_positive(m)?;
    Ok(mobius_from(&trial_factor(m)))
}

/// Square-free core decomposition by trial division.
pub fn squarefree_core(m: u64) -> Result<CoreDecomposition> {
    check_positive(m)?;
    let (mut rest, mut core, mut k) = (m, 1u64, 1u64);
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e % 2 == 1 {
            core *= p;
        }
        k *= p.pow(e / 2);
        p += if p == 2 { 1 } else { 2 };
    }
    // `rest` is 1 or a prime.
    Ok(CoreDecomposition { m, core: core * rest, k })
}

/// Smallest-prime-factor sieve; falls back to trial division above its limit.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: u64) -> Result<Self> {
        if limit >= u64::from(u32::MAX) {
            return Err(Error::Limit(format!("sieve limit {limit} exceeds 32-bit indexing")));
        }
        let len = limit as usize + 1;
        let mut spf: Vec<u32> = try_zeroed(len, "factor sieve")?;
        for i in 2..len {
            if spf[i] == 0 {
                let mut j = i;
                while j < len {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Ok(Self { spf })
    }

    pub fn limit(&self) -> u64 {
        self.spf.len() as u64 - 1
    }

    fn factor(&self, m: u64) -> Vec<(u64, u32)> {
        if m > self.limit() {
            return trial_factor(m);
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        let mut n = m as usize;
        while n > 1 {
            let p = self.spf[n] as u64;
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
            n /= p as usize;
        }
        out
    }

    pub fn mobius(&self, m: u64) -> Result<i8> {
        check_positive(m)?;
        Ok(mobius_from(&self.factor(m)))
    }

    pub fn squarefree_core(&self, m: u64) -> Result<CoreDecomposition> {
        check_positive(m)?;
        Ok(core_from(m, &self.factor(m)))
    }
}

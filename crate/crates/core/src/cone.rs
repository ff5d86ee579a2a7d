//! Multi-indices over the narrow cone `ℕ^(∞)` and their log-eigenvalues.
//!
//! A [`MultiIndex`] is a finitely supported exponent sequence `α`; paired with
//! a weight sequence it names the monomial eigenvector `z^α` whose eigenvalue
//! is `λ^α = ∏ λ_j^{α_j} = exp(-Σ α_j A_j)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// Default cap on the number of points materialized by the brute-force
/// enumerators.
pub const DEFAULT_BOX_CAP: u64 = 10_000_000;

/// Finitely supported sequence of non-negative integers.
///
/// Stored sparsely as `(coordinate, exponent)` pairs with increasing
/// coordinates (1-based) and exponents `≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    entries: Vec<(u32, u32)>,
}

impl MultiIndex {
    /// The zero multi-index (the constant monomial).
    pub fn zero() -> Self {
        MultiIndex::default()
    }

    /// The unit vector `e_j`.
    pub fn unit(j: u32) -> Self {
        assert!(j >= 1, "coordinates are 1-based");
        MultiIndex {
            entries: vec![(j, 1)],
        }
    }

    /// Builds the canonical form from arbitrary `(coordinate, exponent)`
    /// pairs: repeated coordinates are summed and zero exponents dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for (j, a) in pairs {
            if j == 0 {
                return Err(Error::Argument(
                    "multi-index coordinates are 1-based".into(),
                ));
            }
            entries.push((j, a));
        }
        entries.sort_unstable_by_key(|&(j, _)| j);
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(entries.len());
        for (j, a) in entries {
            match merged.last_mut() {
                Some((lj, la)) if *lj == j => {
                    *la = la
                        .checked_add(a)
                        .ok_or_else(|| Error::Argument("exponent overflow".into()))?
                }
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a > 0);
        Ok(MultiIndex { entries: merged })
    }

    /// Dense exponents `α_1, α_2, ...`; trailing zeros are irrelevant.
    pub fn from_dense(exponents: &[u32]) -> Self {
        MultiIndex {
            entries: exponents
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0)
                .map(|(i, &a)| (i as u32 + 1, a))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// `α_j`, zero when `j` is outside the support.
    pub fn exponent(&self, j: u32) -> u32 {
        self.entries
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.entries[k].1)
            .unwrap_or(0)
    }

    /// Smallest coordinate in the support.
    pub fn min_coord(&self) -> Option<u32> {
        self.entries.first().map(|&(j, _)| j)
    }

    /// Largest coordinate in the support.
    pub fn max_coord(&self) -> Option<u32> {
        self.entries.last().map(|&(j, _)| j)
    }

    /// Total degree `Σ α_j`.
    pub fn degree(&self) -> u64 {
        self.entries.iter().map(|&(_, a)| a as u64).sum()
    }

    /// `true` for a unit vector `e_j`.
    pub fn is_unit(&self) -> bool {
        matches!(self.entries.as_slice(), [(_, 1)])
    }

    /// `α + e_j`.
    pub fn plus_unit(&self, j: u32) -> Self {
        debug_assert!(j >= 1);
        let mut entries = self.entries.clone();
        match entries.binary_search_by_key(&j, |&(c, _)| c) {
            Ok(k) => entries[k].1 += 1,
            Err(k) => entries.insert(k, (j, 1)),
        }
        MultiIndex { entries }
    }

    /// Coordinatewise sum.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut k) = (0, 0);
        while i < self.entries.len() || k < other.entries.len() {
            match (self.entries.get(i), other.entries.get(k)) {
                (Some(&(a, x)), Some(&(b, y))) if a == b => {
                    out.push((a, x + y));
                    i += 1;
                    k += 1;
                }
                (Some(&(a, x)), Some(&(b, _))) if a < b => {
                    out.push((a, x));
                    i += 1;
                }
                (Some(&e), None) => {
                    out.push(e);
                    i += 1;
                }
                (_, Some(&e)) => {
                    out.push(e);
                    k += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        MultiIndex { entries: out }
    }

    /// Bytes of the canonical textual form, produced lazily.
    pub fn text_bytes(&self) -> TextBytes<'_> {
        TextBytes {
            entries: &self.entries,
            next_entry: 0,
            buf: [0; 24],
            buf_pos: 0,
            buf_len: 0,
            zero_pending: self.entries.is_empty(),
        }
    }

    /// Lexicographic comparison of the canonical textual forms, without
    /// allocating either string.
    pub fn text_cmp(&self, other: &MultiIndex) -> Ordering {
        self.text_bytes().cmp(other.text_bytes())
    }
}

/// Iterator over the bytes of `j1^a1*j2^a2*...` (or `1` for zero).
#[derive(Debug, Clone)]
pub struct TextBytes<'a> {
    entries: &'a [(u32, u32)],
    next_entry: usize,
    buf: [u8; 24],
    buf_pos: usize,
    buf_len: usize,
    zero_pending: bool,
}

fn push_decimal(buf: &mut [u8; 24], len: &mut usize, mut n: u32) {
    let mut digits = [0u8; 10];
    let mut k = 0;
    loop {
        digits[k] = b'0' + (n % 10) as u8;
        k += 1;
        n /= 10;
        if n == 0 {
            break;
        }
    }
    while k > 0 {
        k -= 1;
        buf[*len] = digits[k];
        *len += 1;
    }
}

impl Iterator for TextBytes<'_> {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        if self.zero_pending {
            self.zero_pending = false;
            return Some(b'1');
        }
        if self.buf_pos == self.buf_len {
            let &(j, a) = self.entries.get(self.next_entry)?;
            let mut len = 0;
            if self.next_entry > 0 {
                self.buf[0] = b'*';
                len = 1;
            }
            push_decimal(&mut self.buf, &mut len, j);
            self.buf[len] = b'^';
            len += 1;
            push_decimal(&mut self.buf, &mut len, a);
            self.next_entry += 1;
            self.buf_pos = 0;
            self.buf_len = len;
        }
        let b = self.buf[self.buf_pos];
        self.buf_pos += 1;
        Some(b)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("1");
        }
        for (i, (j, a)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{j}^{a}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Parses the canonical form `j1^a1*j2^a2*...` (strictly increasing
    /// coordinates, positive exponents) or `1` for the zero index.
    fn from_str(s: &str) -> Result<Self> {
        if s == "1" {
            return Ok(MultiIndex::zero());
        }
        let mut entries = Vec::new();
        for factor in s.split('*') {
            let (j, a) = factor
                .split_once('^')
                .ok_or_else(|| Error::parse(factor, "expected `coordinate^exponent`"))?;
            let j: u32 = j
                .parse()
                .ok()
                .filter(|&j| j >= 1)
                .ok_or_else(|| Error::parse(j, "expected a positive coordinate"))?;
            let a: u32 = a
                .parse()
                .ok()
                .filter(|&a| a >= 1)
                .ok_or_else(|| Error::parse(a, "expected a positive exponent"))?;
            if let Some(&(prev, _)) = entries.last() {
                if j <= prev {
                    return Err(Error::parse(factor, "coordinates must increase"));
                }
            }
            entries.push((j, a));
        }
        Ok(MultiIndex { entries })
    }
}

/// A multi-index together with `log(1/λ^α) = Σ α_j A_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub index: MultiIndex,
    pub log_value: f64,
}

impl LatticePoint {
    /// `λ^α = exp(-log_value)`; underflows to 0 past ~745.
    pub fn eigenvalue(&self) -> f64 {
        (-self.log_value).exp()
    }

    /// The documented total order: log-value, then support size, then the
    /// canonical text. Log-values are compared exactly.
    pub fn total_cmp(&self, other: &LatticePoint) -> Ordering {
        self.log_value
            .total_cmp(&other.log_value)
            .then_with(|| self.index.support_len().cmp(&other.index.support_len()))
            .then_with(|| self.index.text_cmp(&other.index))
    }
}

/// `Σ_{j ∈ supp α} α_j A_j`, summed in increasing `j`.
pub fn eval_log_eigenvalue(w: &WeightSequence, alpha: &MultiIndex) -> Result<f64> {
    let mut acc = 0.0;
    for &(j, a) in alpha.entries() {
        acc += a as f64 * w.log_weight(j as usize)?;
    }
    Ok(acc)
}

/// Same arithmetic as [`eval_log_eigenvalue`] against a cached exponent
/// table (`exps[j-1] = A_j`), so results are bit-identical.
pub(crate) fn eval_cached(exps: &[f64], alpha: &MultiIndex) -> f64 {
    let mut acc = 0.0;
    for &(j, a) in alpha.entries() {
        acc += a as f64 * exps[j as usize - 1];
    }
    acc
}

/// All `(maxdeg+1)^d` lattice points with support in `{1..d}` and every
/// exponent `≤ maxdeg`, unsorted. Capped at [`DEFAULT_BOX_CAP`] points.
pub fn enumerate_box(w: &WeightSequence, d: usize, maxdeg: u32) -> Result<Vec<LatticePoint>> {
    enumerate_box_with_cap(w, d, maxdeg, DEFAULT_BOX_CAP)
}

pub fn enumerate_box_with_cap(
    w: &WeightSequence,
    d: usize,
    maxdeg: u32,
    cap: u64,
) -> Result<Vec<LatticePoint>> {
    if d == 0 {
        return Err(Error::Argument("box dimension d must be positive".into()));
    }
    w.log_weight(d)?;
    let side = maxdeg as u64 + 1;
    let count = (0..d).try_fold(1u64, |acc, _| acc.checked_mul(side));
    let count = match count {
        Some(c) if c <= cap => c,
        _ => {
            return Err(Error::Resource(format!(
                "box ({side})^{d} = {} points exceeds the cap of {cap}",
                count.map_or_else(|| "more than 2^64".to_string(), |c| c.to_string())
            )))
        }
    };
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0u32; d];
    loop {
        let index = MultiIndex::from_dense(&digits);
        let log_value = eval_log_eigenvalue(w, &index)?;
        out.push(LatticePoint { index, log_value });
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == d {
                return Ok(out);
            }
            if digits[pos] < maxdeg {
                digits[pos] += 1;
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Every lattice point with `log_value ≤ threshold`, unsorted.
///
/// A depth-first search over coordinates in increasing order. Because the
/// exponents `A_j` are non-decreasing, the search stops at the first
/// coordinate whose exponent alone exceeds the remaining budget. This is the
/// brute-force oracle for the rearrangement stream when a full box would be
/// too large.
pub fn enumerate_below(w: &WeightSequence, threshold: f64, cap: u64) -> Result<Vec<LatticePoint>> {
    if !threshold.is_finite() {
        return Err(Error::Argument(format!(
            "threshold {threshold} must be finite"
        )));
    }
    // Pruning uses an incremental sum; the slack keeps it from discarding
    // points whose exact (re-evaluated) value is still within the threshold.
    let prune = threshold + 1e-9 * threshold.abs().max(1.0);
    let mut exps = Vec::new();
    let mut j = 1;
    while let Some(a) = w.coordinate_exponent(j) {
        if a > prune {
            break;
        }
        exps.push(a);
        j += 1;
    }
    let mut out = Vec::new();
    let mut current: Vec<(u32, u32)> = Vec::new();
    let mut ctx = BelowCtx {
        exps: &exps,
        prune,
        threshold,
        cap,
        out: &mut out,
    };
    ctx.visit(&mut current, 0, 0.0)?;
    Ok(out)
}

struct BelowCtx<'a> {
    exps: &'a [f64],
    prune: f64,
    threshold: f64,
    cap: u64,
    out: &'a mut Vec<LatticePoint>,
}

impl BelowCtx<'_> {
    fn visit(&mut self, current: &mut Vec<(u32, u32)>, start: usize, partial: f64) -> Result<()> {
        let index = MultiIndex {
            entries: current.clone(),
        };
        let log_value = eval_cached(self.exps, &index);
        if log_value <= self.threshold {
            if self.out.len() as u64 >= self.cap {
                return Err(Error::Resource(format!(
                    "more than {} lattice points below threshold {}",
                    self.cap, self.threshold
                )));
            }
            self.out.push(LatticePoint { index, log_value });
        }
        for k in start..self.exps.len() {
            let a = self.exps[k];
            if partial + a > self.prune {
                break;
            }
            let mut e = 1u32;
            let mut sum = partial + a;
            while sum <= self.prune {
                current.push((k as u32 + 1, e));
                self.visit(current, k + 1, sum)?;
                current.pop();
                e += 1;
                sum = partial + e as f64 * a;
            }
        }
        Ok(())
    }
}

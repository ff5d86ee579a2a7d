//! Lazy non-increasing rearrangement `(δ_n)` of the eigenvalue lattice
//! `{λ^α : α ∈ ℕ^(∞)}`.
//!
//! The stream is a best-first search over an infinite-dimensional lattice.
//! Points are emitted in increasing log-value `Σ α_j A_j`, i.e. decreasing
//! eigenvalue, with ties broken by [`LatticePoint::total_cmp`].
//!
//! Each non-zero `α` has exactly one parent:
//!
//! * a unit vector `e_j` is generated by the *activation chain*: the zero
//!   index pushes `e_1`, and once every pending unit vector has been emitted
//!   the next coordinate is activated. Coordinates that share an exponent
//!   with the last activated one are activated together, so equal-valued
//!   unit vectors sit in the frontier at the same time and leave it in the
//!   documented tie order.
//! * any other `α` with smallest support coordinate `l` and `α_l` decreased
//!   by one yields the parent `α - e_l`; popping a parent `β` pushes
//!   `β + e_i` for every `i ≤ min supp β`.
//!
//! The parent always has a strictly smaller log-value, and every coordinate
//! `i ≤ min supp β` was activated before `β` existed (weights are sorted), so
//! the frontier always holds the next point and nothing is emitted twice.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::cone::{eval_cached, LatticePoint, MultiIndex};
use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// Default cap on the number of frontier entries.
pub const DEFAULT_FRONTIER_CAP: usize = 100_000_000;

/// Absolute tolerance used when counting points at a threshold.
pub const COUNT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Candidate(LatticePoint);

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Resumable state of the rearrangement. Cloning yields an independent
/// continuation.
#[derive(Debug, Clone)]
pub struct EigenvalueStream {
    weights: WeightSequence,
    /// `exps[j-1] = A_j` for activated coordinates.
    exps: Vec<f64>,
    frontier: BinaryHeap<Reverse<Candidate>>,
    /// Unit vectors currently waiting in the frontier.
    pending_units: usize,
    emitted: u64,
    last_log_value: f64,
    cap: usize,
}

impl EigenvalueStream {
    pub fn new(weights: &WeightSequence) -> Self {
        Self::with_cap(weights, DEFAULT_FRONTIER_CAP)
    }

    pub fn with_cap(weights: &WeightSequence, cap: usize) -> Self {
        let mut frontier = BinaryHeap::new();
        frontier.push(Reverse(Candidate(LatticePoint {
            index: MultiIndex::zero(),
            log_value: 0.0,
        })));
        EigenvalueStream {
            weights: weights.clone(),
            exps: Vec::new(),
            frontier,
            pending_units: 0,
            emitted: 0,
            last_log_value: 0.0,
            cap,
        }
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    /// Number of coordinates activated so far.
    pub fn active_dim(&self) -> usize {
        self.exps.len()
    }

    pub fn emitted_count(&self) -> u64 {
        self.emitted
    }

    /// Log-value of the most recent point (0 before the first pop).
    pub fn last_log_value(&self) -> f64 {
        self.last_log_value
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    /// Activates the next coordinate together with every following
    /// coordinate that has the same exponent.
    fn activate_run(&mut self) {
        let first = self.exps.len() + 1;
        let Some(a) = self.weights.coordinate_exponent(first) else {
            return;
        };
        let mut j = first;
        loop {
            self.exps.push(a);
            let index = MultiIndex::unit(j as u32);
            let log_value = eval_cached(&self.exps, &index);
            self.frontier
                .push(Reverse(Candidate(LatticePoint { index, log_value })));
            self.pending_units += 1;
            if self.weights.coordinate_exponent(j + 1) != Some(a) {
                break;
            }
            j += 1;
        }
    }

    fn push(&mut self, index: MultiIndex) {
        let log_value = eval_cached(&self.exps, &index);
        self.frontier
            .push(Reverse(Candidate(LatticePoint { index, log_value })));
    }

    /// The next point in non-decreasing log-value order.
    pub fn next_point(&mut self) -> Result<LatticePoint> {
        let Reverse(Candidate(point)) = self
            .frontier
            .pop()
            .expect("the frontier of a non-empty weight sequence is never empty");
        match point.index.min_coord() {
            None => self.activate_run(),
            Some(lowest) => {
                for i in 1..=lowest {
                    self.push(point.index.plus_unit(i));
                }
                if point.index.is_unit() {
                    self.pending_units -= 1;
                    if self.pending_units == 0 {
                        self.activate_run();
                    }
                }
            }
        }
        if self.frontier.len() > self.cap {
            return Err(Error::Resource(format!(
                "frontier exceeded {} entries after {} points were emitted",
                self.cap, self.emitted
            )));
        }
        self.emitted += 1;
        self.last_log_value = point.log_value;
        Ok(point)
    }

    /// The next `n` log-values.
    pub fn take_log_values(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|_| self.next_point().map(|p| p.log_value))
            .collect()
    }
}

impl Iterator for EigenvalueStream {
    type Item = Result<LatticePoint>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_point())
    }
}

/// `a_N = δ_N` together with the multi-index that realizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationNumber {
    pub n: u64,
    pub log_value: f64,
    pub witness: MultiIndex,
}

impl ApproximationNumber {
    /// `exp(-log_value)`, which underflows for `log_value > ~745`.
    pub fn value(&self) -> f64 {
        (-self.log_value).exp()
    }
}

/// The `n`-th approximation number of the diagonal operator (1-based).
pub fn approximation_number(w: &WeightSequence, n: u64) -> Result<ApproximationNumber> {
    if n == 0 {
        return Err(Error::Argument(
            "approximation numbers are indexed from 1".into(),
        ));
    }
    let mut stream = EigenvalueStream::new(w);
    let mut point = stream.next_point()?;
    for _ in 1..n {
        point = stream.next_point()?;
    }
    Ok(ApproximationNumber {
        n,
        log_value: point.log_value,
        witness: point.index,
    })
}

/// `#{α : λ^α ≥ t}` for `0 < t ≤ 1`; points within [`COUNT_TOLERANCE`] of
/// the threshold in log-space are counted in.
pub fn count_at_least(w: &WeightSequence, t: f64) -> Result<u64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("threshold t={t} must lie in (0, 1]")));
    }
    let limit = (1.0 / t).ln() + COUNT_TOLERANCE;
    let mut stream = EigenvalueStream::new(w);
    let mut count = 0;
    loop {
        if stream.next_point()?.log_value > limit {
            return Ok(count);
        }
        count += 1;
    }
}

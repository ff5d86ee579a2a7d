//! Euler-product evaluation of `Σ_n a_n^p = ∏_j (1 - λ_j^p)^{-1}` for
//! diagonal symbols, with certified truncation bounds.
//!
//! Products are accumulated in log-space as `Σ_j -ln(1 - e^{-pA_j})`. For a
//! truncation after `J` factors the neglected part obeys
//!
//! ```text
//! -Σ_{j>J} ln(1 - x_j) ≤ Σ_{j>J} x_j / (1 - x_J),   x_j = e^{-pA_j},
//! ```
//!
//! and `Σ_{j>J} x_j` is bounded in closed form for each generator family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rearrange::EigenvalueStream;
use crate::weights::{WeightKind, WeightSequence};

/// `Σ_j λ_j^p` beyond this is reported as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Truncation never goes past this many factors.
pub const MAX_FACTORS: usize = 1 << 22;

/// Target for the log-space tail when the truncation is chosen automatically.
pub const AUTO_TAIL_TARGET: f64 = 1e-17;

/// Relative slack allowed between a partial sum and its Euler product.
pub const CONSISTENCY_SLACK: f64 = 1e-9;

/// A truncated Euler product in log-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogProduct {
    /// `Σ_{j≤J} -ln(1 - e^{-pA_j})`.
    pub log_value: f64,
    /// Upper bound on the neglected `-Σ_{j>J} ln(1 - e^{-pA_j})`.
    pub log_tail: f64,
    /// Number of factors `J` actually multiplied.
    pub factors: usize,
}

impl LogProduct {
    /// `exp(log_value)`; may overflow to `+∞`.
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// Relative bound `exp(log_tail) - 1` on the neglected factors.
    pub fn tail_bound(&self) -> f64 {
        self.log_tail.exp_m1()
    }

    /// Certified upper bound on the full log-product.
    pub fn upper(&self) -> f64 {
        self.log_value + self.log_tail
    }
}

/// `-ln(1 - e^{-x})` for `x > 0` without cancellation.
fn neg_log1m_exp(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    -(-(-x).exp()).ln_1p()
}

/// `Σ_{j>J} e^{-pA_j}` bounded from above, `+∞` if no certified bound is
/// cheaply available.
fn power_tail(w: &WeightSequence, p: f64, j_used: usize) -> f64 {
    match w.kind() {
        WeightKind::Explicit => {
            let len = w.len().unwrap_or(0);
            (j_used + 1..=len)
                .map(|j| (-p * w.log_weight(j).unwrap()).exp())
                .sum()
        }
        WeightKind::Linear { .. } | WeightKind::Geometric { .. } => {
            // A_j = step · j
            let step = w.log_weight(1).unwrap();
            let first = (-p * w.log_weight(j_used + 1).unwrap()).exp();
            first / -(-p * step).exp_m1()
        }
        WeightKind::Tower { alpha } => {
            // exp(t^alpha) is convex for t^alpha ≥ (1-alpha)/alpha, after
            // which successive ratios of e^{-pA_j} are non-increasing and a
            // geometric series bounds the tail.
            let convex_from = if alpha >= 1.0 {
                1.0
            } else {
                ((1.0 - alpha) / alpha).powf(1.0 / alpha).ceil()
            };
            let start = j_used + 1;
            let k = (convex_from as usize).max(start);
            if convex_from > (start + MAX_FACTORS) as f64 {
                return f64::INFINITY;
            }
            let explicit: f64 = (start..k)
                .map(|j| (-p * w.log_weight(j).unwrap()).exp())
                .sum();
            let a_k = w.log_weight(k).unwrap();
            let gap = w.log_weight(k + 1).unwrap() - a_k;
            let first = (-p * a_k).exp();
            if first == 0.0 {
                return explicit;
            }
            explicit + first / -(-p * gap).exp_m1()
        }
    }
}

/// `∏_{j≤J} (1 - e^{-pA_j})^{-1}` in log-space with the certified tail.
///
/// `J` is clamped to the list length for explicit weights.
pub fn log_euler_product(w: &WeightSequence, p: f64, j_max: usize) -> Result<LogProduct> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p={p} must be positive")));
    }
    if j_max == 0 {
        return Err(Error::Argument("truncation J must be at least 1".into()));
    }
    let j_used = w.len().map_or(j_max, |len| j_max.min(len));
    let mut log_value = 0.0;
    let mut power_sum = 0.0;
    for j in 1..=j_used {
        let x = p * w.log_weight(j)?;
        log_value += neg_log1m_exp(x);
        power_sum += (-x).exp();
        if power_sum > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergent(format!(
                "Σ λ_j^p exceeds {DIVERGENCE_THRESHOLD:e} after {j} terms (p={p})"
            )));
        }
    }
    let tail = power_tail(w, p, j_used);
    if power_sum + tail > DIVERGENCE_THRESHOLD {
        return Err(Error::Divergent(format!(
            "Σ λ_j^p tail beyond J={j_used} pushes the sum past {DIVERGENCE_THRESHOLD:e} (p={p})"
        )));
    }
    // 1 - e^{-pA_J}
    let gap = -(-p * w.log_weight(j_used)?).exp_m1();
    let log_tail = if tail == 0.0 { 0.0 } else { tail / gap };
    Ok(LogProduct {
        log_value,
        log_tail,
        factors: j_used,
    })
}

/// Chooses `J` automatically: the whole list for explicit weights, otherwise
/// the smallest power of two whose log-tail is below [`AUTO_TAIL_TARGET`]
/// (relative to the product), capped at [`MAX_FACTORS`].
pub fn log_euler_product_auto(w: &WeightSequence, p: f64) -> Result<LogProduct> {
    if let Some(len) = w.len() {
        return log_euler_product(w, p, len);
    }
    let mut j = 16;
    loop {
        let lp = log_euler_product(w, p, j)?;
        if lp.log_tail <= AUTO_TAIL_TARGET * lp.log_value.max(1.0) || j >= MAX_FACTORS {
            return Ok(lp);
        }
        j *= 2;
    }
}

/// Value and relative tail bound of the Euler product with `J` factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSum {
    pub value: f64,
    pub tail_bound: f64,
    pub log_value: f64,
    pub factors: usize,
}

pub fn schatten_power_sum(w: &WeightSequence, p: f64, j: usize) -> Result<PowerSum> {
    let lp = log_euler_product(w, p, j)?;
    Ok(PowerSum {
        value: lp.value(),
        tail_bound: lp.tail_bound(),
        log_value: lp.log_value,
        factors: lp.factors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Yes,
    No,
    Unknown,
}

/// Whether the diagonal operator lies in `S_p`, i.e. `Σ λ_j^p < ∞`.
///
/// Decided analytically: finite lists trivially, and every generator family
/// decays at least geometrically, so all `p > 0` qualify.
pub fn is_in_schatten(w: &WeightSequence, p: f64) -> Result<Membership> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p={p} must be positive")));
    }
    Ok(match w.kind() {
        WeightKind::Explicit
        | WeightKind::Geometric { .. }
        | WeightKind::Linear { .. }
        | WeightKind::Tower { .. } => Membership::Yes,
    })
}

/// Partial sums of the stream against the Euler product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchattenReport {
    pub weights: String,
    pub p: f64,
    pub membership: Membership,
    /// `None` when the product overflows `f64`.
    pub product_value: Option<f64>,
    pub log_product: f64,
    /// `Σ_{n≤N} δ_n^p`.
    pub partial_sum: f64,
    pub tail_bound: f64,
    pub n_used: u64,
    pub j_used: usize,
    /// `partial_sum ≤ product_value · (1 + 1e-9)`.
    pub consistent: bool,
}

pub fn partial_sum_vs_product(w: &WeightSequence, p: f64, n: u64) -> Result<SchattenReport> {
    let membership = is_in_schatten(w, p)?;
    if membership != Membership::Yes {
        return Err(Error::Domain(format!("{w} is not known to lie in S_{p}")));
    }
    let lp = log_euler_product_auto(w, p)?;
    let mut stream = EigenvalueStream::new(w);
    let mut partial = 0.0;
    for _ in 0..n {
        partial += (-p * stream.next_point()?.log_value).exp();
    }
    let product = lp.value();
    Ok(SchattenReport {
        weights: w.to_string(),
        p,
        membership,
        product_value: product.is_finite().then_some(product),
        log_product: lp.log_value,
        partial_sum: partial,
        tail_bound: lp.tail_bound(),
        n_used: n,
        j_used: lp.factors,
        consistent: partial <= product * (1.0 + CONSISTENCY_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(spec: &str) -> WeightSequence {
        spec.parse().unwrap()
    }

    /// Direct multiplication of the first `j` factors, no log-space.
    fn direct_product(w: &WeightSequence, p: f64, j: usize) -> f64 {
        (1..=j)
            .map(|k| 1.0 / (1.0 - w.weight(k).unwrap().powf(p)))
            .product()
    }

    #[test]
    fn single_factor() {
        let ps = schatten_power_sum(&w("list:0.5"), 2.0, 1).unwrap();
        assert!((ps.value - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(ps.tail_bound, 0.0);
    }

    #[test]
    fn eta_at_inverse_e() {
        let ws = w("linear:beta=1");
        let ps = schatten_power_sum(&ws, 1.0, 60).unwrap();
        let oracle = direct_product(&ws, 1.0, 200);
        assert!((ps.value - oracle).abs() < 1e-13);
        assert!((ps.value - 1.982441).abs() < 1e-6);
        assert!(ps.tail_bound < 1e-20);
    }

    #[test]
    fn uniform_list_is_finite_but_huge() {
        let ws = WeightSequence::explicit(&[0.9; 400]).unwrap();
        let ps = schatten_power_sum(&ws, 2.0, 400).unwrap();
        let expected = -400.0 * (1.0 - 0.81f64).ln();
        assert!((ps.log_value - expected).abs() < 1e-9);
        assert!(ps.value.is_finite() && ps.value > 1e280);
    }

    #[test]
    fn divergence_signal() {
        let ws = w("linear:beta=1e-7");
        assert!(matches!(
            schatten_power_sum(&ws, 1e-3, 1000),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn tails_are_certified() {
        // The bound must dominate the true neglected log-product.
        for (spec, p) in [
            ("linear:beta=0.5", 0.7),
            ("geometric:rho=0.9", 1.3),
            ("tower:alpha=1", 0.05),
            ("tower:alpha=0.5", 0.2),
            ("tower:alpha=0.3", 0.5),
        ] {
            let ws = w(spec);
            for j in [1, 3, 10, 40] {
                let lp = log_euler_product(&ws, p, j).unwrap();
                let far = log_euler_product(&ws, p, 200_000).unwrap();
                let neglected = far.log_value - lp.log_value;
                assert!(
                    neglected <= lp.log_tail * (1.0 + 1e-9) + 1e-15,
                    "{spec} p={p} J={j}: {neglected} > {}",
                    lp.log_tail
                );
            }
        }
    }

    #[test]
    fn explicit_truncation_clamps() {
        let lp = log_euler_product(&w("list:0.5,0.25"), 1.0, 10).unwrap();
        assert_eq!((lp.factors, lp.log_tail), (2, 0.0));
        let lp = log_euler_product(&w("list:0.5,0.25"), 1.0, 1).unwrap();
        assert!(lp.log_tail >= -(0.75f64).ln());
    }

    #[test]
    fn membership() {
        assert_eq!(
            is_in_schatten(&w("linear:beta=1"), 0.01).unwrap(),
            Membership::Yes
        );
        assert_eq!(
            is_in_schatten(&w("list:0.7,0.1"), 1.0).unwrap(),
            Membership::Yes
        );
        assert_eq!(
            is_in_schatten(&w("geometric:rho=0.99"), 0.001).unwrap(),
            Membership::Yes
        );
        assert!(is_in_schatten(&w("list:0.5"), 0.0).is_err());
    }

    #[test]
    fn partial_sums_against_product() {
        let r = partial_sum_vs_product(&w("list:0.5"), 1.0, 20).unwrap();
        assert!((r.partial_sum - 2.0 * (1.0 - 2f64.powi(-20))).abs() < 1e-14);
        assert!((r.product_value.unwrap() - 2.0).abs() < 1e-15);
        assert!(r.consistent);

        let r = partial_sum_vs_product(&w("linear:beta=1"), 1.0, 5000).unwrap();
        assert!((r.partial_sum - 1.982441).abs() < 1e-3);
        assert!(r.consistent);

        let ws = w("linear:beta=1");
        let r = partial_sum_vs_product(&ws, 2.0, 1000).unwrap();
        let oracle = direct_product(&ws, 2.0, 100);
        assert!((r.partial_sum - oracle).abs() < 1e-6);
        assert!((oracle - 1.181481).abs() < 1e-6);
    }

    #[test]
    fn gap_shrinks_with_n() {
        let ws = w("geometric:rho=0.6");
        let mut last_gap = f64::INFINITY;
        for n in [10, 100, 1000, 5000] {
            let r = partial_sum_vs_product(&ws, 1.5, n).unwrap();
            let gap = r.product_value.unwrap() - r.partial_sum;
            assert!(r.consistent && gap < last_gap, "n={n}");
            last_gap = gap;
        }
    }

    #[test]
    fn power_sum_non_increasing_in_p() {
        for spec in ["linear:beta=1", "list:0.9,0.3", "tower:alpha=0.5"] {
            let ws = w(spec);
            let mut prev = f64::INFINITY;
            for p in [0.25, 0.5, 1.0, 2.0, 4.0] {
                let v = log_euler_product_auto(&ws, p).unwrap().log_value;
                assert!(v <= prev, "{spec} p={p}");
                prev = v;
            }
        }
    }
}

//! Eigenvalue sequences `(λ_j)` of the diagonal symbol `z ↦ (λ_j z_j)_j`.
//!
//! A sequence is stored through its exponents `A_j = log(1/λ_j)`, so every
//! downstream computation happens in log-space. The eigenvalues themselves
//! are only materialized on request, and they underflow to zero as soon as
//! `A_j` exceeds roughly 745.
//!
//! Four families are supported, matching the textual grammar accepted by
//! [`WeightSequence::from_str`]:
//!
//! | spec                | exponent `A_j`          |
//! |---------------------|-------------------------|
//! | `list:v1,v2,...`    | `-ln v_j` (sorted)      |
//! | `geometric:rho=R`   | `j · (-ln R)`           |
//! | `linear:beta=B`     | `B · j`                 |
//! | `tower:alpha=A`     | `exp(j^A)`              |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Explicit lists at least this long whose entries are all equal trigger
/// [`WeightSequence::non_compact_warning`].
pub const UNIFORM_LIST_WARNING_LEN: usize = 16;

/// Which family a [`WeightSequence`] belongs to, with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// Finitely many weights given explicitly.
    Explicit,
    /// `λ_j = rho^j`.
    Geometric { rho: f64 },
    /// `A_j = beta · j`.
    Linear { beta: f64 },
    /// `A_j = exp(j^alpha)`.
    Tower { alpha: f64 },
}

/// A validated, non-increasing sequence of weights in `(0, 1)`.
///
/// Immutable once built. Explicit lists are sorted by decreasing weight at
/// construction; [`WeightSequence::permutation`] records where each sorted
/// entry came from.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    kind: WeightKind,
    /// Sorted exponents of an explicit list, ascending. Empty for generators.
    exponents: Vec<f64>,
    /// Original (zero-based) position of the k-th sorted explicit weight.
    permutation: Vec<usize>,
    /// Original textual values of an explicit list, in input order.
    source_values: Vec<f64>,
}

impl WeightSequence {
    /// Finitely many weights, each in `(0, 1)`, in any order.
    pub fn explicit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("explicit weight list is empty".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain(format!(
                    "weight {} (position {}) is {v}, outside the open interval (0, 1)",
                    i + 1,
                    i + 1
                )));
            }
        }
        let mut permutation: Vec<usize> = (0..values.len()).collect();
        // Stable sort so equal weights keep their input order.
        permutation.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let exponents = permutation.iter().map(|&i| -values[i].ln()).collect();
        Ok(WeightSequence {
            kind: WeightKind::Explicit,
            exponents,
            permutation,
            source_values: values.to_vec(),
        })
    }

    /// `λ_j = rho^j` with `0 < rho < 1`.
    pub fn geometric(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!(
                "geometric ratio rho={rho} must lie in (0, 1)"
            )));
        }
        Ok(Self::generator(WeightKind::Geometric { rho }))
    }

    /// `A_j = beta · j` with `beta > 0`.
    pub fn linear(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!(
                "linear slope beta={beta} must be a positive finite number"
            )));
        }
        Ok(Self::generator(WeightKind::Linear { beta }))
    }

    /// `A_j = exp(j^alpha)` with `alpha > 0`.
    pub fn tower(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "tower exponent alpha={alpha} must be a positive finite number"
            )));
        }
        Ok(Self::generator(WeightKind::Tower { alpha }))
    }

    fn generator(kind: WeightKind) -> Self {
        WeightSequence {
            kind,
            exponents: Vec::new(),
            permutation: Vec::new(),
            source_values: Vec::new(),
        }
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// Number of weights for explicit lists, `None` for the infinite families.
    pub fn len(&self) -> Option<usize> {
        match self.kind {
            WeightKind::Explicit => Some(self.exponents.len()),
            _ => None,
        }
    }

    /// Never true: construction rejects empty lists.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_generator(&self) -> bool {
        self.kind != WeightKind::Explicit
    }

    /// For explicit lists, `permutation()[k]` is the zero-based input
    /// position of the `(k+1)`-th largest weight. Empty for generators.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// The exponent `A_j = log(1/λ_j)` for `j ≥ 1`.
    ///
    /// Evaluated from the generator formula, never by taking the logarithm of
    /// a materialized weight. For the tower family the value overflows to
    /// `+∞` once `j^alpha > ~709.78`.
    pub fn log_weight(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::Index {
                index: 0,
                len: self.len().unwrap_or(usize::MAX),
            });
        }
        match self.kind {
            WeightKind::Explicit => self.exponents.get(j - 1).copied().ok_or(Error::Index {
                index: j,
                len: self.exponents.len(),
            }),
            _ => Ok(self.generator_exponent(j)),
        }
    }

    /// `A_j` if coordinate `j` exists and has a finite exponent.
    ///
    /// Coordinates beyond an explicit list, and tower coordinates whose
    /// exponent overflowed, carry the weight 0 and are treated as absent.
    pub fn coordinate_exponent(&self, j: usize) -> Option<f64> {
        if j == 0 {
            return None;
        }
        let a = match self.kind {
            WeightKind::Explicit => *self.exponents.get(j - 1)?,
            _ => self.generator_exponent(j),
        };
        a.is_finite().then_some(a)
    }

    fn generator_exponent(&self, j: usize) -> f64 {
        let jf = j as f64;
        match self.kind {
            WeightKind::Linear { beta } => beta * jf,
            WeightKind::Geometric { rho } => jf * (-rho.ln()),
            WeightKind::Tower { alpha } => jf.powf(alpha).exp(),
            WeightKind::Explicit => unreachable!("explicit lists have no generator"),
        }
    }

    /// The weight `λ_j = exp(-A_j)`. Underflows to 0 for `A_j > ~745`.
    pub fn weight(&self, j: usize) -> Result<f64> {
        Ok((-self.log_weight(j)?).exp())
    }

    /// A warning for explicit lists that look like `φ(z) = rz`: a long run
    /// of one repeated weight. Such symbols map into a smaller polydisk but
    /// their composition operators are not compact, so finite lists of this
    /// shape are a poor model. The toolkit still accepts them.
    pub fn non_compact_warning(&self) -> Option<String> {
        if self.kind != WeightKind::Explicit || self.exponents.len() < UNIFORM_LIST_WARNING_LEN {
            return None;
        }
        let first = self.exponents[0];
        if self.exponents.iter().all(|&a| a == first) {
            Some(format!(
                "explicit list repeats the single weight {} {} times; this mimics \
                 the non-compact symbol z -> rz",
                (-first).exp(),
                self.exponents.len()
            ))
        } else {
            None
        }
    }
}

impl fmt::Display for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            WeightKind::Explicit => {
                f.write_str("list:")?;
                for (i, v) in self.source_values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(&shortest(*v))?;
                }
                Ok(())
            }
            WeightKind::Geometric { rho } => write!(f, "geometric:rho={}", shortest(rho)),
            WeightKind::Linear { beta } => write!(f, "linear:beta={}", shortest(beta)),
            WeightKind::Tower { alpha } => write!(f, "tower:alpha={}", shortest(alpha)),
        }
    }
}

/// Round-trip text, switching to exponent form outside `[1e-4, 1e15)`.
fn shortest(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn parse_number(token: &str) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(token, "expected a finite decimal number")),
    }
}

fn parse_param(body: &str, key: &str) -> Result<f64> {
    let (k, v) = body
        .split_once('=')
        .ok_or_else(|| Error::parse(body, format!("expected `{key}=<number>`")))?;
    if k != key {
        return Err(Error::parse(
            k,
            format!("unknown parameter, expected `{key}`"),
        ));
    }
    parse_number(v)
}

impl FromStr for WeightSequence {
    type Err = Error;

    /// Parses `list:v1,v2,...`, `geometric:rho=R`, `linear:beta=B` or
    /// `tower:alpha=A`. Anything else is rejected with the offending token.
    fn from_str(spec: &str) -> Result<Self> {
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse(spec, "expected `<kind>:<parameters>`"))?;
        match kind {
            "list" => {
                if body.is_empty() {
                    return Err(Error::parse(spec, "list needs at least one value"));
                }
                let values = body
                    .split(',')
                    .map(parse_number)
                    .collect::<Result<Vec<_>>>()?;
                WeightSequence::explicit(&values)
            }
            "geometric" => WeightSequence::geometric(parse_param(body, "rho")?),
            "linear" => WeightSequence::linear(parse_param(body, "beta")?),
            "tower" => WeightSequence::tower(parse_param(body, "alpha")?),
            other => Err(Error::parse(
                other,
                "unknown weight kind (expected list, geometric, linear or tower)",
            )),
        }
    }
}

//! Finite sections of one-variable composition operators on `H²(D)`.
//!
//! The monomials `z^k` are orthonormal, so the matrix of `C_φ` has entry
//! `(i, k)` equal to the coefficient of `z^i` in `φ(z)^k`. Truncating at
//! degree `m` keeps rows and columns `0..=m`.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rearrange::EigenvalueStream;
use crate::weights::WeightSequence;

pub type C64 = Complex64;

/// Multiplicative slack for the Weyl and norm checks.
pub const CHECK_SLACK: f64 = 1e-9;
/// Largest Kronecker product dimension accepted.
pub const KRON_DIM_CAP: usize = 4096;
/// Tolerance on `‖x₁x₂ − x₂x₁‖_max`, relative to `max(1, ‖x₁‖_max ‖x₂‖_max)`.
pub const COMMUTATOR_TOL: f64 = 1e-13;
/// A general eigenpair is accepted if `‖Tv − λv‖/‖v‖ ≤ RESIDUAL_TOL · ‖T‖₂`.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Largest section dimension built from a symbol.
pub const MAX_SECTION_DIM: usize = 512;
/// Smallest `|s|` drawn by [`random_affine`].
pub const RANDOM_S_MIN: f64 = 0.2;

const MAX_SWEEPS_PER_DIM: usize = 1000;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    Diagonal,
    /// Entries vanish below the diagonal (`i > k`).
    UpperTriangular,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    entries: DMatrix<C64>,
    structure: Structure,
    description: String,
}

impl TruncatedOperator {
    /// Wraps a square matrix, detecting diagonal and triangular structure.
    pub fn from_matrix(entries: DMatrix<C64>, description: impl Into<String>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Argument(format!(
                "matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let structure = detect_structure(&entries);
        Ok(TruncatedOperator {
            entries,
            structure,
            description: description.into(),
        })
    }

    pub fn diagonal(diag: &[C64]) -> Result<Self> {
        let n = diag.len();
        let entries = DMatrix::from_fn(
            n,
            n,
            |i, k| if i == k { diag[i] } else { C64::new(0.0, 0.0) },
        );
        Self::from_matrix(entries, format!("diag({})", diag.len()))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(dim, dim), format!("identity({dim})"))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, k: usize) -> C64 {
        self.entries[(i, k)]
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// `T₁ ⊗ T₂` with the row-major index `(a, b) ↦ a·d₂ + b`.
    pub fn kron(&self, other: &TruncatedOperator) -> Result<TruncatedOperator> {
        let dim = self.dim().saturating_mul(other.dim());
        if dim > KRON_DIM_CAP {
            return Err(Error::Resource(format!(
                "Kronecker dimension {}x{} = {dim} exceeds {KRON_DIM_CAP}",
                self.dim(),
                other.dim()
            )));
        }
        Self::from_matrix(
            self.entries.kronecker(&other.entries),
            format!("({}) ⊗ ({})", self.description, other.description),
        )
    }

    /// Leading `(m+1) × (m+1)` block.
    pub fn compress(&self, m: usize) -> Result<TruncatedOperator> {
        if m >= self.dim() {
            return Err(Error::Argument(format!(
                "cannot compress dimension {} to degree {m}",
                self.dim()
            )));
        }
        Self::from_matrix(
            self.entries.view((0, 0), (m + 1, m + 1)).into_owned(),
            format!("{} | m={m}", self.description),
        )
    }

    /// Row-major CSV body: one line per row, entries as `re+imi`.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|k| format_complex(self.entries[(i, k)]))
                    .collect()
            })
            .collect()
    }
}

fn detect_structure(m: &DMatrix<C64>) -> Structure {
    let n = m.nrows();
    let zero = |i: usize, k: usize| m[(i, k)] == C64::new(0.0, 0.0);
    let lower_zero = (0..n).all(|i| (0..i).all(|k| zero(i, k)));
    if !lower_zero {
        return Structure::General;
    }
    let upper_zero = (0..n).all(|i| (i + 1..n).all(|k| zero(i, k)));
    if upper_zero {
        Structure::Diagonal
    } else {
        Structure::UpperTriangular
    }
}

/// `re+imi` with 17 significant digits on each part.
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{sign}{:.16e}i", z.re, z.im.abs())
}

/// Parses `re`, `re+imi`, `re-imi`, `imi` or `i`-suffixed forms.
pub fn parse_complex(text: &str) -> Result<C64> {
    let t = text.trim();
    let bad = || {
        Error::parse(
            text,
            "expected a complex number such as 0.5, -0.25i or 0.3+0.1i",
        )
    };
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        let re: f64 = t.parse().map_err(|_| bad())?;
        return finite(C64::new(re, 0.0)).ok_or_else(bad);
    };
    // split at the last sign that is not part of an exponent or leading
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (
            body[..i].parse::<f64>().map_err(|_| bad())?,
            parse_imag(&body[i..])?,
        ),
        None => (0.0, parse_imag(body)?),
    };
    finite(C64::new(re, im)).ok_or_else(bad)
}

fn parse_imag(s: &str) -> Result<f64> {
    match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => s
            .parse()
            .map_err(|_| Error::parse(s, "imaginary part is not a number")),
    }
}

fn finite(z: C64) -> Option<C64> {
    (z.re.is_finite() && z.im.is_finite()).then_some(z)
}

/// Matrix of `C_φ` on `z⁰..z^m` for the polynomial `φ(z) = Σ coeffs[j] z^j`.
///
/// Column `k` holds `φ^k` truncated at degree `m`, built by repeated
/// multiplication. Coefficients beyond degree `m` cannot reach the section
/// and are ignored. No self-map condition is checked here.
pub fn polynomial_symbol_matrix(coeffs: &[C64], m: usize) -> Result<TruncatedOperator> {
    if coeffs.is_empty() {
        return Err(Error::Argument("symbol has no coefficients".into()));
    }
    if coeffs.iter().any(|&z| finite(z).is_none()) {
        return Err(Error::Domain("symbol has non-finite coefficients".into()));
    }
    let dim = m
        .checked_add(1)
        .filter(|&d| d <= MAX_SECTION_DIM)
        .ok_or_else(|| {
            Error::Resource(format!(
                "truncation degree {m} exceeds {}",
                MAX_SECTION_DIM - 1
            ))
        })?;
    let phi = &coeffs[..coeffs.len().min(dim)];
    let zero = C64::new(0.0, 0.0);
    let mut entries = DMatrix::from_element(dim, dim, zero);
    let mut power = vec![zero; dim];
    power[0] = C64::new(1.0, 0.0);
    for k in 0..dim {
        entries.column_mut(k).copy_from_slice(&power);
        if k + 1 < dim {
            let mut next = vec![zero; dim];
            for (i, slot) in next.iter_mut().enumerate() {
                let mut acc = zero;
                for (j, &p) in phi.iter().enumerate().take(i + 1) {
                    acc += power[i - j] * p;
                }
                *slot = acc;
            }
            power = next;
        }
    }
    let description = format!(
        "poly[{}] m={m}",
        coeffs
            .iter()
            .map(|&z| format_complex(z))
            .collect::<Vec<_>>()
            .join(";")
    );
    TruncatedOperator::from_matrix(entries, description)
}

/// Matrix of `C_φ` for `φ(z) = sz + c`, truncated at degree `m`.
pub fn affine_symbol_matrix(s: C64, c: C64, m: usize) -> Result<TruncatedOperator> {
    check_self_map(s, c)?;
    let mut t = polynomial_symbol_matrix(&[c, s], m)?;
    t.description = format!(
        "affine s={} c={} m={m}",
        format_complex(s),
        format_complex(c)
    );
    Ok(t)
}

fn check_self_map(s: C64, c: C64) -> Result<()> {
    if finite(s).is_none() || finite(c).is_none() {
        return Err(Error::Domain("symbol coefficients must be finite".into()));
    }
    let r = s.norm() + c.norm();
    if r > 1.0 {
        return Err(Error::Domain(format!(
            "not a self-map certificate: |s| + |c| = {r} > 1"
        )));
    }
    Ok(())
}

/// Taylor coefficients of `Φ_u(z) = (z − u)/(1 − ūz)` up to degree `m`.
pub fn moebius_coefficients(u: C64, m: usize) -> Result<Vec<C64>> {
    if finite(u).is_none() || u.norm() >= 1.0 {
        return Err(Error::Domain(format!("|u| = {} must be below 1", u.norm())));
    }
    let scale = 1.0 - u.norm_sqr();
    let ubar = u.conj();
    let mut out = Vec::with_capacity(m + 1);
    out.push(-u);
    let mut pow = C64::new(scale, 0.0);
    for _ in 1..=m {
        out.push(pow);
        pow *= ubar;
    }
    Ok(out)
}

/// `Φ_u(z)`.
pub fn moebius_apply(u: C64, z: C64) -> C64 {
    (z - u) / (C64::new(1.0, 0.0) - u.conj() * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumSource {
    EigenvaluesOfTruncation,
    Lattice,
    Products,
}

/// Complex points with multiplicity, sorted by modulus descending and then
/// argument ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSet {
    #[serde(serialize_with = "serialize_points")]
    pub points: Vec<C64>,
    /// `ln |z|` for each point; exact for lattice points that underflow.
    pub log_moduli: Vec<f64>,
    pub source: SpectrumSource,
    /// The accumulation point 0, reported separately from the points.
    pub zero_marker: bool,
}

fn serialize_points<S: serde::Serializer>(
    points: &[C64],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(points.len()))?;
    for z in points {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Order used by [`SpectrumSet`].
pub fn spectrum_order(a: &C64, b: &C64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(a.arg().total_cmp(&b.arg()))
}

impl SpectrumSet {
    pub fn new(mut points: Vec<C64>, source: SpectrumSource) -> Self {
        points.sort_by(spectrum_order);
        let log_moduli = points.iter().map(|z| z.norm().ln()).collect();
        SpectrumSet {
            points,
            log_moduli,
            source,
            zero_marker: false,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl fmt::Display for SpectrumSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pts: Vec<String> = self.points.iter().map(|&z| format_complex(z)).collect();
        write!(f, "{{{}}}", pts.join(", "))?;
        if self.zero_marker {
            write!(f, " ∪ {{0}}")?;
        }
        Ok(())
    }
}

/// Singular values, non-increasing.
///
/// Diagonal operators return the sorted absolute diagonal exactly.
pub fn singular_values(t: &TruncatedOperator) -> Result<Vec<f64>> {
    let mut sv: Vec<f64> = match t.structure {
        Structure::Diagonal => t.entries.diagonal().iter().map(|z| z.norm()).collect(),
        _ => jacobi_singular_values(&t.entries)?,
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// One-sided Jacobi on the columns of `Mᴴ`.
///
/// Truncations of affine symbols are `diag(s^i) · B`, so the columns of `Mᴴ`
/// are graded by `|s|^i`. Jacobi rotations keep relative accuracy on each
/// column, and tiny singular values come out with small relative error where
/// a bidiagonalizing SVD only bounds their absolute error by `ε‖M‖`.
fn jacobi_singular_values(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let mut g = m.adjoint();
    let n = g.ncols();
    let rows = g.nrows();
    let tol = rows as f64 * f64::EPSILON;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut a, mut b, mut gpq) = (0.0, 0.0, C64::new(0.0, 0.0));
                for r in 0..rows {
                    let (x, y) = (g[(r, p)], g[(r, q)]);
                    a += x.norm_sqr();
                    b += y.norm_sqr();
                    gpq += x.conj() * y;
                }
                let mag = gpq.norm();
                if mag == 0.0 || mag <= tol * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gpq / mag;
                let zeta = (b - a) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let cs = 1.0 / t.hypot(1.0);
                let sn = cs * t;
                for r in 0..rows {
                    let (x, y) = (g[(r, p)], g[(r, q)]);
                    g[(r, p)] = x * cs - phase.conj() * y * sn;
                    g[(r, q)] = phase * x * sn + y * cs;
                }
            }
        }
        if !rotated {
            return Ok((0..n).map(|k| g.column(k).norm()).collect());
        }
    }
    Err(Error::Numerical(format!(
        "Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps"
    )))
}

/// Spectral norm `‖T‖₂`.
pub fn operator_norm(t: &TruncatedOperator) -> Result<f64> {
    Ok(singular_values(t)?.first().copied().unwrap_or(0.0))
}

/// Eigenvalues of a truncation.
///
/// Diagonal and triangular operators are read off the diagonal. Otherwise
/// see [`general_eigenvalues`], whose residual certificate is enforced.
pub fn eigenvalues(t: &TruncatedOperator) -> Result<SpectrumSet> {
    match t.structure {
        Structure::Diagonal | Structure::UpperTriangular => Ok(SpectrumSet::new(
            t.entries.diagonal().iter().copied().collect(),
            SpectrumSource::EigenvaluesOfTruncation,
        )),
        Structure::General => {
            let e = general_eigenvalues(t)?;
            if !e.certified() {
                return Err(Error::Numerical(format!(
                    "eigenvalue residual {:e} exceeds {RESIDUAL_TOL:e} times the norm {:e}",
                    e.max_residual, e.norm
                )));
            }
            Ok(e.spectrum)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralEigen {
    pub spectrum: SpectrumSet,
    /// Largest `‖Tv − λv‖ / ‖v‖` over the computed eigenpairs.
    pub max_residual: f64,
    /// Largest column norm of `T`, a lower bound on `‖T‖₂`.
    pub norm: f64,
}

impl GeneralEigen {
    /// `max_residual ≤ RESIDUAL_TOL · norm`; using a lower bound on `‖T‖₂`
    /// only makes the test stricter.
    pub fn certified(&self) -> bool {
        self.max_residual <= RESIDUAL_TOL * self.norm
    }
}

/// Eigenvalues from a complex Schur decomposition `T = QRQᴴ`, ignoring
/// structure. Each eigenvector is recovered from `R` by back substitution and
/// its residual is measured against `T` itself.
pub fn general_eigenvalues(t: &TruncatedOperator) -> Result<GeneralEigen> {
    let n = t.dim();
    let max_iter = MAX_SWEEPS_PER_DIM * n;
    let (q, r) = nalgebra::Schur::try_new(t.entries.clone(), f64::EPSILON, max_iter)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?
        .unpack();
    let norm = (0..n)
        .map(|k| t.entries.column(k).norm())
        .fold(0.0, f64::max);
    let floor = f64::EPSILON * max_abs(&r).max(f64::MIN_POSITIVE);
    let zero = C64::new(0.0, 0.0);
    let mut values = Vec::with_capacity(n);
    let mut max_residual: f64 = 0.0;
    for k in 0..n {
        let lambda = r[(k, k)];
        let mut x = vec![zero; k + 1];
        x[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = zero;
            for j in i + 1..=k {
                acc += r[(i, j)] * x[j];
            }
            let mut d = r[(i, i)] - lambda;
            if d.norm() < floor {
                d = C64::new(floor, 0.0);
            }
            x[i] = -acc / d;
            let big = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e150 {
                x.iter_mut().for_each(|z| *z /= big);
            }
        }
        let mut v = DMatrix::from_element(n, 1, zero);
        for (j, &xj) in x.iter().enumerate() {
            v += q.column(j) * xj;
        }
        let vn = v.norm();
        let res = (&t.entries * &v - &v * lambda).norm() / vn;
        max_residual = max_residual.max(if vn > 0.0 { res } else { f64::INFINITY });
        values.push(lambda);
    }
    Ok(GeneralEigen {
        spectrum: SpectrumSet::new(values, SpectrumSource::EigenvaluesOfTruncation),
        max_residual,
        norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylCheck {
    pub n: usize,
    /// `Σ_{j≤n} ln |λ_j|`.
    pub log_prod_eigs: f64,
    /// `Σ_{j≤n} ln a_j`.
    pub log_prod_sv: f64,
    /// `|λ_{2n}|² ≤ a₁ a_n`, when `2n ≤ dim`.
    pub hw_ok: Option<bool>,
    pub ok: bool,
}

impl WeylCheck {
    pub fn prod_eigs(&self) -> f64 {
        self.log_prod_eigs.exp()
    }

    pub fn prod_sv(&self) -> f64 {
        self.log_prod_sv.exp()
    }

    pub fn holds(&self) -> bool {
        self.ok && self.hw_ok != Some(false)
    }
}

/// `∏_{j≤n} |λ_j| ≤ ∏_{j≤n} a_j` for one `n`.
pub fn weyl_check(t: &TruncatedOperator, n: usize) -> Result<WeylCheck> {
    if n == 0 || n > t.dim() {
        return Err(Error::Argument(format!(
            "n={n} must lie in 1..={}",
            t.dim()
        )));
    }
    Ok(weyl_profile(t)?[n - 1])
}

/// [`weyl_check`] for every `n = 1..=dim`, sharing one SVD.
pub fn weyl_profile(t: &TruncatedOperator) -> Result<Vec<WeylCheck>> {
    let eigs = eigenvalues(t)?;
    let sv = singular_values(t)?;
    let slack = CHECK_SLACK.ln_1p();
    let log_sv: Vec<f64> = sv.iter().map(|s| s.ln()).collect();
    let mut le = 0.0;
    let mut ls = 0.0;
    let mut out = Vec::with_capacity(t.dim());
    for n in 1..=t.dim() {
        le += eigs.log_moduli[n - 1];
        ls += log_sv[n - 1];
        let hw_ok = (2 * n <= t.dim())
            .then(|| 2.0 * eigs.log_moduli[2 * n - 1] <= log_sv[0] + log_sv[n - 1] + slack);
        out.push(WeylCheck {
            n,
            log_prod_eigs: le,
            log_prod_sv: ls,
            hw_ok,
            ok: le <= ls + slack,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KronCheck {
    pub dim: usize,
    pub tol: f64,
    /// Largest distance from an eigenvalue of `T₁ ⊗ T₂` to the product set.
    pub max_distance: f64,
    pub commutator: f64,
    pub residual_certified: bool,
    pub inclusion_ok: bool,
    pub commute_ok: bool,
    pub ok: bool,
}

/// Eigenvalues of `T₁ ⊗ T₂` (general Schur, no structure shortcut) against
/// products `μν` of factor eigenvalues, plus the commutation of `T₁ ⊗ I` and
/// `I ⊗ T₂`.
pub fn kron_spectrum_check(
    t1: &TruncatedOperator,
    t2: &TruncatedOperator,
    tol: f64,
) -> Result<KronCheck> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Argument(format!("tolerance {tol} must be positive")));
    }
    let k = t1.kron(t2)?;
    let e1 = eigenvalues(t1)?;
    let e2 = eigenvalues(t2)?;
    let products: Vec<C64> = e1
        .points
        .iter()
        .flat_map(|&mu| e2.points.iter().map(move |&nu| mu * nu))
        .collect();
    let ge = general_eigenvalues(&k)?;
    let max_distance = ge
        .spectrum
        .points
        .iter()
        .map(|&z| {
            products
                .iter()
                .map(|&p| (z - p).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);

    let x1 = t1
        .entries
        .kronecker(&DMatrix::<C64>::identity(t2.dim(), t2.dim()));
    let x2 = DMatrix::<C64>::identity(t1.dim(), t1.dim()).kronecker(&t2.entries);
    let comm = &x1 * &x2 - &x2 * &x1;
    let commutator = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = (max_abs(&x1) * max_abs(&x2)).max(1.0);

    let inclusion_ok = max_distance <= tol;
    let commute_ok = commutator <= COMMUTATOR_TOL * scale;
    Ok(KronCheck {
        dim: k.dim(),
        tol,
        max_distance,
        commutator,
        residual_certified: ge.certified(),
        inclusion_ok,
        commute_ok,
        ok: inclusion_ok && commute_ok,
    })
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBound {
    pub m: usize,
    pub norm: f64,
    /// `√((1+|c|)/(1−|c|))`.
    pub bound: f64,
    pub ok: bool,
}

/// Largest singular value of the affine truncation against the bound
/// `‖C_φ‖ ≤ √((1+|φ(0)|)/(1−|φ(0)|))`.
pub fn norm_bound_check(s: C64, c: C64, m: usize) -> Result<NormBound> {
    check_self_map(s, c)?;
    if m == 0 {
        return Err(Error::Argument("m must be at least 1".into()));
    }
    if c.norm() >= 1.0 {
        return Err(Error::Domain(format!("|c| = {} must be below 1", c.norm())));
    }
    let t = affine_symbol_matrix(s, c, m)?;
    let norm = operator_norm(&t)?;
    let r = c.norm();
    let bound = ((1.0 + r) / (1.0 - r)).sqrt();
    Ok(NormBound {
        m,
        norm,
        bound,
        ok: norm <= bound * (1.0 + CHECK_SLACK),
    })
}

/// The `n` largest lattice points `λ^α`, with the accumulation point 0
/// flagged by `zero_marker`.
pub fn spectrum_points(w: &WeightSequence, n: usize) -> Result<SpectrumSet> {
    if n == 0 {
        return Err(Error::Argument("N must be at least 1".into()));
    }
    let mut stream = EigenvalueStream::new(w);
    let mut points = Vec::with_capacity(n);
    let mut log_moduli = Vec::with_capacity(n);
    for _ in 0..n {
        let p = stream.next_point()?;
        points.push(C64::new(p.eigenvalue(), 0.0));
        log_moduli.push(-p.log_value);
    }
    Ok(SpectrumSet {
        points,
        log_moduli,
        source: SpectrumSource::Lattice,
        zero_marker: true,
    })
}

/// ChaCha8 seeded from a `u64`; the stream is fixed by the algorithm and is
/// identical across platforms.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(
        1.0,
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
}

/// An admissible affine symbol with `|s| ∈ [RANDOM_S_MIN, 1)`,
/// `|s| + |c| < 1` and `m ∈ 1..=m_max`.
pub fn random_affine<R: Rng + ?Sized>(rng: &mut R, m_max: usize) -> (C64, C64, usize) {
    let rs = rng.random_range(RANDOM_S_MIN..1.0);
    let rc = rng.random_range(0.0..1.0) * (1.0 - rs);
    let s = unit_phase(rng) * rs;
    let c = unit_phase(rng) * rc;
    let m = rng.random_range(1..=m_max.max(1));
    (s, c, m)
}

/// An upper-triangular matrix with diagonal uniform in the unit disk and
/// strictly upper entries with real and imaginary parts in `[-1, 1)`.
pub fn random_triangular<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<TruncatedOperator> {
    if dim == 0 {
        return Err(Error::Argument("dimension must be at least 1".into()));
    }
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for i in 0..dim {
        m[(i, i)] = unit_phase(rng) * rng.random_range(0.0f64..1.0).sqrt();
        for k in i + 1..dim {
            m[(i, k)] = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    TruncatedOperator::from_matrix(m, format!("random triangular {dim}"))
}

/// Two [`random_triangular`] factors with dimensions uniform in
/// `1..=max_dim`, drawn in the order `d₁, d₂, T₁, T₂`.
pub fn random_triangular_pair<R: Rng + ?Sized>(
    rng: &mut R,
    max_dim: usize,
) -> Result<(TruncatedOperator, TruncatedOperator)> {
    if max_dim == 0 {
        return Err(Error::Argument(
            "maximum dimension must be at least 1".into(),
        ));
    }
    let d1 = rng.random_range(1..=max_dim);
    let d2 = rng.random_range(1..=max_dim);
    Ok((random_triangular(rng, d1)?, random_triangular(rng, d2)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn r(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
    }

    #[test]
    fn affine_examples() {
        let t = affine_symbol_matrix(r(0.5), r(0.0), 2).unwrap();
        assert_eq!(t.structure(), Structure::Diagonal);
        let d: Vec<f64> = t.entries().diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![1.0, 0.5, 0.25]);

        let t = affine_symbol_matrix(r(0.5), r(0.25), 1).unwrap();
        assert_eq!(t.entry(0, 1), r(0.25));
        assert_eq!(t.entry(1, 1), r(0.5));
        assert_eq!(t.entry(1, 0), r(0.0));
        assert_eq!(t.structure(), Structure::UpperTriangular);
    }

    #[test]
    fn affine_rejects_non_self_maps() {
        let e = affine_symbol_matrix(r(0.6), r(0.5), 3).unwrap_err();
        assert!(e.to_string().contains("not a self-map certificate"));
        assert!(affine_symbol_matrix(r(1.0), r(0.0), 3).is_ok());
        assert!(affine_symbol_matrix(r(f64::NAN), r(0.0), 3).is_err());
    }

    #[test]
    fn affine_matches_binomial_oracle() {
        let (s, cc) = (c(0.3, -0.4), c(-0.2, 0.25));
        let t = affine_symbol_matrix(s, cc, 15).unwrap();
        for k in 0..=15 {
            for i in 0..=15 {
                let want = if i <= k {
                    s.powu(i as u32) * cc.powu((k - i) as u32) * binom(k, i)
                } else {
                    r(0.0)
                };
                let got = t.entry(i, k);
                assert!(
                    (got - want).norm() <= 1e-14 * want.norm().max(1e-300),
                    "({i},{k})"
                );
            }
        }
    }

    #[test]
    fn triangular_eigenvalues_cross_check() {
        let t = affine_symbol_matrix(r(0.5), r(0.25), 10).unwrap();
        let e = eigenvalues(&t).unwrap();
        for (k, z) in e.points.iter().enumerate() {
            assert_eq!(*z, r(0.5f64.powi(k as i32)));
        }
        let g = general_eigenvalues(&t).unwrap();
        assert!(g.certified());
        for (a, b) in e.points.iter().zip(&g.spectrum.points) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn moebius_examples() {
        let id = moebius_coefficients(r(0.0), 4).unwrap();
        assert_eq!(id, vec![r(0.0), r(1.0), r(0.0), r(0.0), r(0.0)]);

        let u = r(0.5);
        let got = moebius_coefficients(u, 6).unwrap();
        // (z - u) Σ (ūz)^k
        let mut oracle = vec![r(0.0); 7];
        for k in 0..7 {
            let g = u.conj().powu(k as u32);
            oracle[k] -= u * g;
            if k + 1 < 7 {
                oracle[k + 1] += g;
            }
        }
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(&got[..4], &[r(-0.5), r(0.75), r(0.375), r(0.1875)]);
        assert!(moebius_coefficients(r(1.0), 3).is_err());
    }

    #[test]
    fn moebius_section_is_general() {
        let u = c(0.3, 0.2);
        let t = polynomial_symbol_matrix(&moebius_coefficients(u, 8).unwrap(), 8).unwrap();
        assert_eq!(t.structure(), Structure::General);
        assert_eq!(t.entry(0, 1), -u);
    }

    #[test]
    fn polynomial_matches_direct_powers() {
        let phi = [c(0.1, 0.0), c(0.3, 0.1), c(0.0, -0.2), c(0.05, 0.0)];
        let t = polynomial_symbol_matrix(&phi, 6).unwrap();
        // φ² by hand
        let mut sq = [r(0.0); 7];
        for (i, a) in phi.iter().enumerate() {
            for (j, b) in phi.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        for (i, v) in sq.iter().enumerate() {
            assert!((t.entry(i, 2) - v).norm() < 1e-16);
        }
        assert!(polynomial_symbol_matrix(&[], 3).is_err());
        assert!(matches!(
            polynomial_symbol_matrix(&phi, MAX_SECTION_DIM),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn singular_value_examples() {
        let d = TruncatedOperator::diagonal(&[r(0.25), r(1.0), c(0.0, -0.5)]).unwrap();
        assert_eq!(singular_values(&d).unwrap(), vec![1.0, 0.5, 0.25]);

        let (a, b) = (0.6, 0.8);
        let rot = DMatrix::from_row_slice(2, 2, &[r(a), r(-b), r(b), r(a)]);
        let rot = TruncatedOperator::from_matrix(rot, "rotation").unwrap();
        for s in singular_values(&rot).unwrap() {
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    /// `max_{y ⊥ x} ‖Ty‖` for real 3×3 `T`: the largest singular value of
    /// `T` restricted to the plane orthogonal to `x`.
    fn restricted_norm(t: &[[f64; 3]; 3], theta: f64, phi: f64) -> f64 {
        let x = [
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ];
        let e1 = [
            theta.cos() * phi.cos(),
            theta.cos() * phi.sin(),
            -theta.sin(),
        ];
        let e2 = [-phi.sin(), phi.cos(), 0.0];
        debug_assert!((x[0] * e2[0] + x[1] * e2[1]).abs() < 1e-12);
        let apply = |v: [f64; 3]| -> [f64; 3] {
            let mut out = [0.0; 3];
            for i in 0..3 {
                out[i] = (0..3).map(|k| t[i][k] * v[k]).sum();
            }
            out
        };
        let (a, b) = (apply(e1), apply(e2));
        let dot = |p: [f64; 3], q: [f64; 3]| p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        let (g11, g12, g22) = (dot(a, a), dot(a, b), dot(b, b));
        let tr = g11 + g22;
        let det = g11 * g22 - g12 * g12;
        ((tr + (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0).sqrt()
    }

    #[test]
    fn second_singular_value_by_minimax() {
        let mut rng = seeded_rng(7);
        for _ in 0..5 {
            let mut t = [[0.0; 3]; 3];
            for (i, row) in t.iter_mut().enumerate() {
                for v in &mut row[i..] {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
            let m = DMatrix::from_fn(3, 3, |i, k| r(t[i][k]));
            let sv = singular_values(&TruncatedOperator::from_matrix(m, "t").unwrap()).unwrap();
            // a₂ = min over unit x of the norm of T on x^⊥ (best rank-1 error)
            let mut best = (f64::INFINITY, 0.0, 0.0);
            let steps = 200;
            for a in 0..=steps {
                for b in 0..2 * steps {
                    let th = std::f64::consts::PI * a as f64 / steps as f64;
                    let ph = std::f64::consts::PI * b as f64 / steps as f64;
                    let v = restricted_norm(&t, th, ph);
                    if v < best.0 {
                        best = (v, th, ph);
                    }
                }
            }
            let mut h = std::f64::consts::PI / steps as f64;
            while h > 1e-12 {
                let mut improved = false;
                for (dt, dp) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                    let v = restricted_norm(&t, best.1 + dt, best.2 + dp);
                    if v < best.0 {
                        best = (v, best.1 + dt, best.2 + dp);
                        improved = true;
                    }
                }
                if !improved {
                    h /= 2.0;
                }
            }
            assert!((best.0 - sv[1]).abs() < 1e-6, "{} vs {}", best.0, sv[1]);
        }
    }

    #[test]
    fn svd_backward_error() {
        let mut rng = seeded_rng(3);
        let t = random_triangular(&mut rng, 8).unwrap();
        let svd = t.entries().clone().svd(true, true);
        let rec = svd.recompose().unwrap();
        let err = (rec - t.entries()).norm();
        let norm = operator_norm(&t).unwrap();
        assert!(err <= 1e-12 * norm);
    }

    #[test]
    fn weyl_examples() {
        let d = TruncatedOperator::diagonal(&[r(0.5), r(0.25)]).unwrap();
        let w = weyl_check(&d, 2).unwrap();
        assert!((w.prod_eigs() - 0.125).abs() < 1e-16);
        assert_eq!(w.log_prod_eigs, w.log_prod_sv);
        assert!(w.ok);

        let t = affine_symbol_matrix(r(0.5), r(0.25), 12).unwrap();
        for w in weyl_profile(&t).unwrap() {
            assert!(w.holds(), "n={}", w.n);
        }

        let t = affine_symbol_matrix(r(0.5), r(0.3), 20).unwrap();
        let w = weyl_check(&t, 5).unwrap();
        assert_eq!(w.hw_ok, Some(true));
        let e = eigenvalues(&t).unwrap();
        assert_eq!(e.points[9], r(0.5f64.powi(9)));
        let sv = singular_values(&t).unwrap();
        assert!(0.5f64.powi(18) <= sv[0] * sv[4]);

        assert!(weyl_check(&t, 0).is_err());
        assert!(weyl_check(&t, 22).is_err());
    }

    #[test]
    fn weyl_on_general_section() {
        let u = c(0.2, -0.1);
        let coeffs: Vec<C64> = moebius_coefficients(u, 10)
            .unwrap()
            .into_iter()
            .map(|z| z * 0.6)
            .collect();
        let t = polynomial_symbol_matrix(&coeffs, 10).unwrap();
        for w in weyl_profile(&t).unwrap() {
            assert!(w.holds(), "n={}", w.n);
        }
    }

    #[test]
    fn kron_examples() {
        let a = TruncatedOperator::diagonal(&[r(1.0), r(2.0)]).unwrap();
        let b = TruncatedOperator::diagonal(&[r(3.0), r(4.0)]).unwrap();
        let k = kron_spectrum_check(&a, &b, 1e-12).unwrap();
        assert!(k.ok);
        assert_eq!(k.max_distance, 0.0);
        let ev = general_eigenvalues(&a.kron(&b).unwrap()).unwrap();
        assert_eq!(ev.spectrum.points, vec![r(8.0), r(6.0), r(4.0), r(3.0)]);

        let t = affine_symbol_matrix(r(0.5), r(0.25), 5).unwrap();
        let id = TruncatedOperator::identity(1).unwrap();
        assert!(kron_spectrum_check(&id, &t, 1e-10).unwrap().ok);
        let id3 = TruncatedOperator::identity(3).unwrap();
        assert!(kron_spectrum_check(&id3, &t, 1e-8).unwrap().ok);

        let mut rng = seeded_rng(11);
        let t1 = random_triangular(&mut rng, 6).unwrap();
        let t2 = random_triangular(&mut rng, 6).unwrap();
        let k = kron_spectrum_check(&t1, &t2, 1e-8).unwrap();
        assert!(k.ok, "{k:?}");
        assert_eq!(k.commutator, 0.0);

        let big = TruncatedOperator::identity(65).unwrap();
        assert!(matches!(
            kron_spectrum_check(&big, &big, 1e-8),
            Err(Error::Resource(_))
        ));
        assert!(kron_spectrum_check(&a, &b, 0.0).is_err());
    }

    #[test]
    fn norm_bound_examples() {
        let nb = norm_bound_check(r(1.0), r(0.0), 10).unwrap();
        assert_eq!(nb.bound, 1.0);
        assert!((nb.norm - 1.0).abs() < 1e-15);
        assert!(nb.ok);

        let nb = norm_bound_check(r(0.5), r(0.25), 40).unwrap();
        assert!((nb.bound - (1.25f64 / 0.75).sqrt()).abs() < 1e-15);
        assert!(nb.ok);
        let mut prev = 0.0;
        for m in [5, 10, 20, 40] {
            let n = norm_bound_check(r(0.5), r(0.25), m).unwrap().norm;
            assert!(n >= prev * (1.0 - 1e-12));
            prev = n;
        }
        assert!(norm_bound_check(r(0.5), r(0.6), 4).is_err());
        assert!(norm_bound_check(r(0.0), r(1.0), 4).is_err());
        assert!(norm_bound_check(r(0.5), r(0.25), 0).is_err());
    }

    #[test]
    fn spectrum_points_examples() {
        let w: WeightSequence = "linear:beta=1".parse().unwrap();
        let s = spectrum_points(&w, 4).unwrap();
        assert!(s.zero_marker);
        assert_eq!(s.log_moduli, vec![0.0, -1.0, -2.0, -2.0]);
        assert_eq!(s.points[0], r(1.0));
        let one = spectrum_points(&w, 1).unwrap();
        assert_eq!(one.points, vec![r(1.0)]);
        assert!(spectrum_points(&w, 0).is_err());
    }

    #[test]
    fn diagonal_box_truncation_is_in_spectrum() {
        let w: WeightSequence = "geometric:rho=0.6".parse().unwrap();
        let pts = crate::cone::enumerate_box(&w, 2, 6).unwrap();
        let diag: Vec<C64> = pts.iter().map(|p| r(p.eigenvalue())).collect();
        let t = TruncatedOperator::diagonal(&diag).unwrap();
        let spec = spectrum_points(&w, 2000).unwrap();
        for z in eigenvalues(&t).unwrap().points {
            let d = spec
                .points
                .iter()
                .map(|p| (p - z).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn spectrum_order_is_modulus_then_argument() {
        let s = SpectrumSet::new(
            vec![r(0.5), c(0.0, 1.0), r(-1.0), r(1.0), c(0.0, -1.0)],
            SpectrumSource::Products,
        );
        assert_eq!(
            s.points,
            vec![c(0.0, -1.0), r(1.0), c(0.0, 1.0), r(-1.0), r(0.5)]
        );
    }

    #[test]
    fn complex_text_round_trip() {
        for z in [r(0.5), c(-0.25, 1e-3), c(0.0, -2.0), c(1e-300, 3e300)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
        assert_eq!(parse_complex("0.3+0.1i").unwrap(), c(0.3, 0.1));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2e-3-1e-2i").unwrap(), c(2e-3, -1e-2));
        assert_eq!(parse_complex("-0.5").unwrap(), r(-0.5));
        for bad in ["", "x", "1+", "nan", "1+2j", "inf"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let a: Vec<_> = (0..5)
            .map(|_| random_affine(&mut seeded_rng(9), 20))
            .collect();
        assert!(a.windows(2).all(|p| p[0] == p[1]));
        let mut rng = seeded_rng(1);
        for _ in 0..50 {
            let (s, c, m) = random_affine(&mut rng, 20);
            assert!(s.norm() + c.norm() < 1.0 && s.norm() >= RANDOM_S_MIN);
            assert!((1..=20).contains(&m));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn triangular_with_exact_diagonal(
            rs in 0.0f64..1.0, th in -3.0f64..3.0, frac in 0.0f64..1.0, ph in -3.0f64..3.0,
            m in 0usize..25,
        ) {
            let s = C64::from_polar(rs, th);
            let cc = C64::from_polar((1.0 - rs) * frac, ph);
            let t = affine_symbol_matrix(s, cc, m).unwrap();
            let mut sk = r(1.0);
            for k in 0..=m {
                prop_assert_eq!(t.entry(k, k), sk);
                for i in k + 1..=m {
                    prop_assert_eq!(t.entry(i, k), r(0.0));
                }
                sk *= s;
            }
        }

        #[test]
        fn sections_are_compressions(
            rs in 0.0f64..1.0, frac in 0.0f64..1.0, ph in -3.0f64..3.0, m in 0usize..12, extra in 1usize..8,
        ) {
            let s = r(rs);
            let cc = C64::from_polar((1.0 - rs) * frac, ph);
            let big = affine_symbol_matrix(s, cc, m + extra).unwrap();
            let small = affine_symbol_matrix(s, cc, m).unwrap();
            let compressed = big.compress(m).unwrap();
            prop_assert_eq!(compressed.entries(), small.entries());
        }

        #[test]
        fn diagonal_singular_values_exact(d in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..10)) {
            let diag: Vec<C64> = d.iter().map(|&(a, b)| c(a, b)).collect();
            let t = TruncatedOperator::diagonal(&diag).unwrap();
            let mut want: Vec<f64> = diag.iter().map(|z| z.norm()).collect();
            want.sort_by(|a, b| b.total_cmp(a));
            prop_assert_eq!(singular_values(&t).unwrap(), want);
        }

        #[test]
        fn moebius_inverse_law(ur in 0.0f64..0.9, ua in -3.2f64..3.2, seed in any::<u64>()) {
            let u = C64::from_polar(ur, ua);
            let mut rng = seeded_rng(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let z = unit_phase(&mut rng) * rng.random_range(0.0f64..1.0).sqrt();
                let back = moebius_apply(-u, moebius_apply(u, z));
                worst = worst.max((back - z).norm());
            }
            prop_assert!(worst < 1e-12);
        }

        #[test]
        fn weyl_holds_on_random_affine(seed in any::<u64>()) {
            let (s, cc, m) = random_affine(&mut seeded_rng(seed), 20);
            let t = affine_symbol_matrix(s, cc, m).unwrap();
            for w in weyl_profile(&t).unwrap() {
                prop_assert!(w.holds(), "n={} {:?}", w.n, w);
            }
        }

        #[test]
        fn kron_inclusion_on_random_pairs(seed in any::<u64>()) {
            let (t1, t2) = random_triangular_pair(&mut seeded_rng(seed), 8).unwrap();
            let k = kron_spectrum_check(&t1, &t2, 1e-8).unwrap();
            prop_assert!(k.ok, "{:?}", k);
        }
    }
}

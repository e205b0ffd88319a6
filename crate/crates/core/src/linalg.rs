//! Dense complex kernels shared by every other module.
//!
//! Inner products are conjugate-linear in the first argument and linear in
//! the second, so `⟨u, v⟩ = u.dotc(&v)` and the orthogonal projector onto a
//! frame `Q` is `Q Qᴴ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical thresholds used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub tol_rank: f64,
    /// Absolute norm below which a vector of the σ recursion counts as zero.
    pub tol_zero: f64,
    /// Bound on the Gram residual `‖G − I‖_max` of every frame.
    pub tol_ortho: f64,
    /// Relative bound on the boundary form of a model's domain.
    pub tol_sym: f64,
    /// Relative bound on the boundary form of a constructed extension.
    pub tol_boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_rank: 1e-10,
            tol_zero: 1e-8,
            tol_ortho: 1e-10,
            tol_sym: 1e-10,
            tol_boundary: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("tol_rank", self.tol_rank),
            ("tol_zero", self.tol_zero),
            ("tol_ortho", self.tol_ortho),
            ("tol_sym", self.tol_sym),
            ("tol_boundary", self.tol_boundary),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }
}

/// An ordered orthonormal set of vectors in `Cⁿ`, stored as matrix columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    vectors: CMatrix,
}

impl Frame {
    /// Wraps `vectors` after checking finiteness and orthonormality.
    pub fn new(vectors: CMatrix, tol_ortho: f64) -> Result<Self> {
        if !is_finite(&vectors) {
            return Err(Error::NonFinite);
        }
        let frame = Self { vectors };
        let residual = frame.gram_residual();
        if residual > tol_ortho {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(frame)
    }

    pub(crate) fn from_orthonormal(vectors: CMatrix) -> Self {
        Self { vectors }
    }

    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            vectors: CMatrix::zeros(ambient_dim, 0),
        }
    }

    /// The standard basis `e_1, …, e_n`.
    pub fn standard(ambient_dim: usize) -> Self {
        Self {
            vectors: CMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    /// The frame as an `n × k` matrix with orthonormal columns.
    pub fn matrix(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn into_matrix(self) -> CMatrix {
        self.vectors
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn vectors(&self) -> impl Iterator<Item = CVector> + '_ {
        self.vectors.column_iter().map(|c| c.into_owned())
    }

    /// `‖QᴴQ − I‖_max`.
    pub fn gram_residual(&self) -> f64 {
        unitarity_residual(&self.vectors)
    }

    /// Orthogonal projection of `v` onto the span.
    pub fn project(&self, v: &CVector) -> CVector {
        &self.vectors * (self.vectors.adjoint() * v)
    }

    /// `‖v − Pv‖`, the distance of `v` from the span.
    pub fn distance(&self, v: &CVector) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Coordinates `Qᴴ v`.
    pub fn coordinates(&self, v: &CVector) -> CVector {
        self.vectors.adjoint() * v
    }

    /// Rotates every vector so that its largest-modulus entry is real and
    /// positive. Spans are unchanged; outputs become reproducible across
    /// algebraically equivalent inputs.
    pub fn with_canonical_phases(mut self) -> Self {
        for mut col in self.vectors.column_iter_mut() {
            let mut best = 0;
            let mut best_abs = -1.0;
            for (i, z) in col.iter().enumerate() {
                let a = z.norm();
                if a > best_abs {
                    best_abs = a;
                    best = i;
                }
            }
            if best_abs > 0.0 {
                let phase = col[best].conj() / best_abs;
                for z in col.iter_mut() {
                    *z *= phase;
                }
            }
        }
        self
    }
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖MᴴM − I‖_max` for a matrix with (intended) orthonormal columns.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular values (descending) together with the matching left singular
/// vectors; all `rows` of them when `full`, otherwise `min(rows, cols)`.
fn left_svd(m: &CMatrix, full: bool) -> Result<(Vec<f64>, CMatrix)> {
    let a = to_faer(m);
    let svd = if full { a.svd() } else { a.thin_svd() }
        .map_err(|e| Error::NumericalFailure(format!("SVD did not converge: {e:?}")))?;
    let u = svd.U();
    let s = svd.S().column_vector();
    let k = s.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| s[y].re.total_cmp(&s[x].re));
    let values = order.iter().map(|&j| s[j].re).collect();
    // Columns beyond the singular values (full SVD) keep their order.
    order.extend(k..u.ncols());
    let u_sorted = CMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    Ok((values, u_sorted))
}

/// Singular values of `m`, sorted in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(m)
        .singular_values()
        .unwrap_or_else(|_| m.clone().singular_values().iter().copied().collect());
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol_rank · σ_max`.
pub fn numerical_rank(m: &CMatrix, tol: &Tolerances) -> usize {
    cutoff_rank(&singular_values(m), tol)
}

fn check_input(m: &CMatrix, context: &'static str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Empty(context));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn cutoff_rank(s: &[f64], tol: &Tolerances) -> usize {
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > tol.tol_rank * top).count(),
        _ => 0,
    }
}

/// Orthonormal basis of the column span of `m`, truncated at the numerical
/// rank.
pub fn orthonormal_range(m: &CMatrix, tol: &Tolerances) -> Result<Frame> {
    check_input(m, "matrix passed to orthonormal_range")?;
    let (s, u) = left_svd(m, false)?;
    let rank = cutoff_rank(&s, tol);
    Ok(Frame::from_orthonormal(u.columns(0, rank).into_owned()).with_canonical_phases())
}

/// Orthonormal basis of the orthogonal complement of the column span of
/// `m`, from one full SVD. Equal in span to
/// `orthogonal_complement(&orthonormal_range(m, tol)?)`.
pub fn range_complement(m: &CMatrix, tol: &Tolerances) -> Result<Frame> {
    check_input(m, "matrix passed to range_complement")?;
    let (s, u) = left_svd(m, true)?;
    let rank = cutoff_rank(&s, tol);
    let n = m.nrows();
    Ok(Frame::from_orthonormal(u.columns(rank, n - rank).into_owned()).with_canonical_phases())
}

/// Orthonormal basis of the orthogonal complement of `f` in `Cⁿ`.
pub fn orthogonal_complement(f: &Frame) -> Frame {
    let n = f.ambient_dim();
    let k = f.len();
    if k == 0 {
        return Frame::standard(n);
    }
    if k >= n {
        return Frame::empty(n);
    }
    // Householder QR of F: the trailing n − k columns of the full Q span
    // the complement.
    let q = to_faer(f.matrix()).qr().compute_Q();
    Frame::from_orthonormal(from_faer(q.as_ref().subcols(k, n - k))).with_canonical_phases()
}

/// Principal angles between the spans of `f` and `g`, ascending, in
/// `[0, π/2]`. There are `min(|f|, |g|)` of them.
///
/// Small angles come from the sines (singular values of the residual
/// `G − F FᴴG`) and large ones from the cosines, so both ends keep full
/// precision.
pub fn principal_angles(f: &Frame, g: &Frame) -> Result<Vec<f64>> {
    if f.ambient_dim() != g.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.ambient_dim(),
            got: g.ambient_dim(),
            context: "principal_angles",
        });
    }
    let (a, b) = if f.len() >= g.len() { (f, g) } else { (g, f) };
    if b.is_empty() {
        return Ok(Vec::new());
    }
    let cross = a.matrix().adjoint() * b.matrix();
    let cosines = singular_values(&cross);
    let residual = b.matrix() - a.matrix() * &cross;
    let mut sines = singular_values(&residual);
    sines.reverse();
    let angles = cosines
        .iter()
        .zip(sines.iter())
        .map(|(&c, &s)| {
            let c = c.min(1.0);
            let s = s.min(1.0);
            if c * c >= 0.5 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect();
    Ok(angles)
}

/// Largest principal angle, or `π/2` when the dimensions differ. Zero iff
/// the spans coincide.
pub fn subspace_distance(f: &Frame, g: &Frame) -> Result<f64> {
    if f.ambient_dim() != g.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.ambient_dim(),
            got: g.ambient_dim(),
            context: "subspace_distance",
        });
    }
    if f.len() != g.len() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    Ok(principal_angles(f, g)?
        .last()
        .copied()
        .unwrap_or(0.0))
}

/// Normaliser of the κ-regularised Gram–Schmidt recursion: `1` on (numerical)
/// zero, the identity elsewhere.
pub fn kappa(x: f64, tol_zero: f64) -> f64 {
    if x.abs() <= tol_zero {
        1.0
    } else {
        x
    }
}

/// Gram–Schmidt that tolerates linearly dependent inputs.
///
/// The `k`-th output is the `k`-th input minus its projections onto the
/// earlier outputs, divided by `κ` of its norm. Residuals with norm at most
/// `tol_zero` are snapped to exact zero, so dependent inputs yield zero
/// vectors and the nonzero outputs form an orthonormal basis of the input
/// span. The projection step is applied twice, which leaves the exact
/// result unchanged and keeps it orthogonal in floating point.
pub fn kappa_gram_schmidt(vs: &[CVector], tol: &Tolerances) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::with_capacity(vs.len());
    let mut basis: Vec<usize> = Vec::new();
    for v in vs {
        let mut r = v.clone();
        for _ in 0..2 {
            for &l in &basis {
                let s: &CVector = &out[l];
                let c = s.dotc(&r);
                r.axpy(-c, s, C64::new(1.0, 0.0));
            }
        }
        let mut norm = r.norm();
        if norm <= tol.tol_zero {
            r.fill(C64::new(0.0, 0.0));
            norm = 0.0;
        }
        let sigma = r.unscale(kappa(norm, tol.tol_zero));
        if norm > 0.0 {
            basis.push(out.len());
        }
        out.push(sigma);
    }
    out
}

/// Classical Gram–Schmidt (with one reorthogonalisation pass) for inputs
/// that must be linearly independent.
pub fn gram_schmidt(vs: &[CVector], tol: &Tolerances) -> Result<Frame> {
    let n = vs
        .first()
        .map(|v| v.len())
        .ok_or(Error::Empty("gram_schmidt input"))?;
    let mut q: Vec<CVector> = Vec::with_capacity(vs.len());
    for (k, v) in vs.iter().enumerate() {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
                context: "gram_schmidt",
            });
        }
        let scale = v.norm();
        let mut r = v.clone();
        for _ in 0..2 {
            for e in &q {
                let c = e.dotc(&r);
                r.axpy(-c, e, C64::new(1.0, 0.0));
            }
        }
        let norm = r.norm();
        if norm.is_nan() || norm <= tol.tol_rank * scale {
            return Err(Error::NumericalFailure(format!(
                "vector {k} is numerically dependent on its predecessors (relative residual {:.3e})",
                norm / scale
            )));
        }
        q.push(r.unscale(norm));
    }
    Ok(Frame::from_orthonormal(CMatrix::from_columns(&q)))
}

/// Stacks frames that live in the same ambient space side by side.
pub(crate) fn hstack(blocks: &[&CMatrix], nrows: usize) -> CMatrix {
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(nrows, ncols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

//! Self-adjoint extensions from unitaries `U : N₊ → N₋`.
//!
//! The extension `B` has domain `D(A) ∔ (U + I) N₊` and acts by
//! `B(f + Ug + g) = Af + ig − iUg`.
//!
//! In a finite ambient space `D(A) + N₊ + N₋` is never a direct sum (each
//! deficiency space already complements `D(A)` dimensionally), so domain
//! elements are tracked together with their image: a vector `u` of the
//! extension's domain is stored as the pair `(u, Bu) ∈ Cᴺ × Cᴺ`. The pairs
//! `(f, Sf)`, `(g, ig)` and `(h, −ih)` with `f ∈ D(A)`, `g ∈ N₊`, `h ∈ N₋`
//! are mutually orthogonal in the graph inner product
//! `⟨(u, a), (v, b)⟩ = ⟨u, v⟩ + ⟨a, b⟩`, and span the *boundary space*, the
//! finite stand-in for `D(A*)`. Domains, boundary forms and maximality are all
//! evaluated there.
//!
//! When the first components of the extension's domain are linearly
//! dependent, `B` is a self-adjoint relation with a multivalued part rather
//! than a matrix; [`ExtensionModel::multivalued_dim`] reports its dimension.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    hstack, numerical_rank, orthonormal_range, subspace_distance, CMatrix, CVector, Frame,
    Tolerances, C64, I,
};
use crate::operator::{deficiency_space, OperatorModel, Sign};

/// `U : N₊ → N₋`; column `k` holds the image of the `k`-th `N₊` basis
/// vector in `N₋` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryParameter {
    matrix: CMatrix,
}

impl UnitaryParameter {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
                context: "unitary parameter must be square",
            });
        }
        if !crate::linalg::is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        let residual = (&matrix * matrix.adjoint() - CMatrix::identity(matrix.nrows(), matrix.nrows()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if residual > Self::TOLERANCE {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self { matrix })
    }

    /// `[e^{iθ}]`, the parameters for `d = 1`.
    pub fn phase(theta: f64) -> Self {
        Self {
            matrix: CMatrix::from_element(1, 1, C64::from_polar(1.0, theta)),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Pairs `(u, a)` of a vector and its image, stacked into one `2N` vector.
pub fn lift(vectors: &CMatrix, images: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(2 * n, vectors.ncols());
    out.rows_mut(0, n).copy_from(vectors);
    out.rows_mut(n, n).copy_from(images);
    out
}

/// `Γ(x, y) = ⟨image x, vector y⟩ − ⟨vector x, image y⟩` for every pair of
/// columns of two lifted matrices.
pub fn boundary_form(x: &CMatrix, y: &CMatrix) -> CMatrix {
    let n = x.nrows() / 2;
    let (xv, xa) = (x.rows(0, n), x.rows(n, n));
    let (yv, ya) = (y.rows(0, n), y.rows(n, n));
    xa.adjoint() * yv - xv.adjoint() * ya
}

/// Deficiency data of a model, computed once and shared by every extension
/// built from it.
#[derive(Clone, Debug)]
pub struct ExtensionBasis {
    base: OperatorModel,
    plus: Frame,
    minus: Frame,
    boundary: Frame,
}

impl ExtensionBasis {
    pub fn new(m: &OperatorModel, tol: &Tolerances) -> Result<Self> {
        let plus = deficiency_space(m, Sign::Plus, tol)?;
        let minus = deficiency_space(m, Sign::Minus, tol)?;
        if plus.len() != minus.len() {
            return Err(Error::NoSelfAdjointExtension {
                d_plus: plus.len(),
                d_minus: minus.len(),
            });
        }
        let n = m.ambient_dim();
        let d = m.domain().matrix();
        let g = plus.matrix();
        let h = minus.matrix();
        let lifted = hstack(
            &[
                &lift(d, &m.action_on_domain()),
                &lift(g, &(g * I)),
                &lift(h, &(h * -I)),
            ],
            2 * n,
        );
        let boundary = orthonormal_range(&lifted, tol)?;
        Ok(Self {
            base: m.clone(),
            plus,
            minus,
            boundary,
        })
    }

    pub fn base(&self) -> &OperatorModel {
        &self.base
    }

    pub fn deficiency(&self) -> usize {
        self.plus.len()
    }

    pub fn plus(&self) -> &Frame {
        &self.plus
    }

    pub fn minus(&self) -> &Frame {
        &self.minus
    }

    /// Orthonormal basis of the lifted `D(A) ⊕ N₊ ⊕ N₋`.
    pub fn boundary_space(&self) -> &Frame {
        &self.boundary
    }

    pub fn build(&self, u: &UnitaryParameter, tol: &Tolerances) -> Result<ExtensionModel> {
        let d = self.deficiency();
        if u.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: u.dim(),
                context: "unitary parameter size vs deficiency index",
            });
        }
        let n = self.base.ambient_dim();
        let k = self.base.domain_dim();
        let g = self.plus.matrix();
        let ug = self.minus.matrix() * u.matrix();
        let generators = hstack(&[self.base.domain().matrix(), &(g + &ug)], n);
        let actions = hstack(
            &[&self.base.action_on_domain(), &((g - &ug) * I)],
            n,
        );
        let lifted = lift(&generators, &actions);
        let rank = numerical_rank(&lifted, tol);
        if rank != k + d {
            return Err(Error::DegenerateSum {
                rank,
                expected: k + d,
            });
        }
        let domain = orthonormal_range(&lifted, tol)?;
        let ambient_domain = orthonormal_range(&generators, tol)?;
        Ok(ExtensionModel {
            base: self.base.clone(),
            parameter: u.clone(),
            plus: self.plus.clone(),
            minus: self.minus.clone(),
            boundary: self.boundary.clone(),
            generators,
            actions,
            domain,
            ambient_domain,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ExtensionModel {
    base: OperatorModel,
    parameter: UnitaryParameter,
    plus: Frame,
    minus: Frame,
    boundary: Frame,
    /// `[D | (U + I) N₊]`
    generators: CMatrix,
    /// `[S D | i(I − U) N₊]`
    actions: CMatrix,
    domain: Frame,
    ambient_domain: Frame,
}

impl ExtensionModel {
    pub fn base(&self) -> &OperatorModel {
        &self.base
    }

    pub fn parameter(&self) -> &UnitaryParameter {
        &self.parameter
    }

    pub fn deficiency(&self) -> usize {
        self.plus.len()
    }

    pub fn plus(&self) -> &Frame {
        &self.plus
    }

    pub fn minus(&self) -> &Frame {
        &self.minus
    }

    /// Orthonormal basis (in the graph inner product) of the domain, each
    /// element lifted to `(u, Bu)`; size `dim D(A) + d`.
    pub fn domain(&self) -> &Frame {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    /// Span of the first components of the domain in `Cᴺ`.
    pub fn ambient_domain(&self) -> &Frame {
        &self.ambient_domain
    }

    /// Dimension of `{Bu : u = 0}`; zero iff `B` is an operator.
    pub fn multivalued_dim(&self) -> usize {
        self.dim() - self.ambient_domain.len()
    }

    /// The generators `[D | (U+I)N₊]` and their images.
    pub fn generators(&self) -> (&CMatrix, &CMatrix) {
        (&self.generators, &self.actions)
    }

    /// Coordinates of `u` with respect to the generators, by least squares.
    /// The first `dim D(A)` entries are the `f` part, the rest the `g` part.
    pub fn decompose(&self, u: &CVector) -> Result<CVector> {
        if u.len() != self.base.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.base.ambient_dim(),
                got: u.len(),
                context: "vector passed to decompose",
            });
        }
        self.generators
            .clone()
            .svd(true, true)
            .solve(u, 1e-14)
            .map_err(|e| Error::NumericalFailure(e.into()))
    }

    /// `B u` via the decomposition `u = f + (U+I)g`. For a relation with a
    /// multivalued part this picks the minimum-norm decomposition.
    pub fn apply(&self, u: &CVector) -> Result<CVector> {
        Ok(&self.actions * self.decompose(u)?)
    }

    /// `B` as an `N × N` matrix, available when the domain is all of `Cᴺ`
    /// and `B` is single-valued.
    pub fn matrix(&self) -> Option<CMatrix> {
        let n = self.base.ambient_dim();
        if self.generators.ncols() != n || self.multivalued_dim() != 0 {
            return None;
        }
        // B G = Actions  ⇔  Gᴴ Bᴴ = Actionsᴴ
        let bt = self
            .generators
            .adjoint()
            .lu()
            .solve(&self.actions.adjoint())?;
        Some(bt.adjoint())
    }
}

pub fn build_extension(
    m: &OperatorModel,
    u: &UnitaryParameter,
    tol: &Tolerances,
) -> Result<ExtensionModel> {
    ExtensionBasis::new(m, tol)?.build(u, tol)
}

/// Checks carried by [`verify_extension`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionReport {
    /// `max |Γ(u, w)|` over pairs of domain basis vectors.
    pub symmetry_residual: f64,
    /// `max 2‖Bu‖‖u‖` over the same basis, the Cauchy–Schwarz bound on `|Γ|`.
    pub scale: f64,
    pub symmetric: bool,
    /// Largest relative distance of a lifted `(f, Sf)`, `f ∈ D(A)`, from the
    /// extension's domain.
    pub extension_residual: f64,
    pub extends_base: bool,
    pub base_dim: usize,
    pub deficiency: usize,
    pub domain_dim: usize,
    pub dim_check: bool,
    /// `dim` of the lifted `D(A) ⊕ N₊ ⊕ N₋`.
    pub boundary_dim: usize,
    /// `dim` of the complement of the domain inside the boundary space.
    pub complement_dim: usize,
    /// Smallest, over the complement of the domain inside the boundary
    /// space, of `max_w |Γ(v, w)|`.
    pub maximality_margin: f64,
    pub maximality: bool,
    pub multivalued_dim: usize,
}

impl ExtensionReport {
    pub fn passed(&self) -> bool {
        self.symmetric && self.extends_base && self.dim_check && self.maximality
    }
}

pub fn verify_extension(e: &ExtensionModel, tol: &Tolerances) -> ExtensionReport {
    let q = e.domain.matrix();
    let n = e.base.ambient_dim();
    let gamma = boundary_form(q, q);
    let symmetry_residual = gamma.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = q
        .column_iter()
        .map(|c| 2.0 * c.rows(0, n).norm() * c.rows(n, n).norm())
        .fold(0.0, f64::max);

    let base_lift = lift(e.base.domain().matrix(), &e.base.action_on_domain());
    let extension_residual = base_lift
        .column_iter()
        .map(|c| {
            let c = c.into_owned();
            (&c - e.domain.project(&c)).norm() / c.norm()
        })
        .fold(0.0, f64::max);

    let base_dim = e.base.domain_dim();
    let deficiency = e.deficiency();
    let domain_dim = e.domain.len();

    // Complement of the domain inside the boundary space.
    let b = e.boundary.matrix();
    let rest = b - q * (q.adjoint() * b);
    let complement = if rest.iter().all(|z| z.norm() <= tol.tol_rank) {
        Frame::empty(2 * n)
    } else {
        orthonormal_range(&rest, tol).unwrap_or_else(|_| Frame::empty(2 * n))
    };
    let maximality_margin = if complement.is_empty() {
        f64::INFINITY
    } else {
        let cross = boundary_form(complement.matrix(), q);
        cross
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    };
    let maximality = complement.len() == deficiency
        && e.boundary.len() == base_dim + 2 * deficiency
        && maximality_margin > tol.tol_boundary;

    ExtensionReport {
        symmetry_residual,
        scale,
        symmetric: symmetry_residual <= tol.tol_boundary * scale.max(f64::MIN_POSITIVE),
        extension_residual,
        extends_base: extension_residual <= tol.tol_sym,
        base_dim,
        deficiency,
        domain_dim,
        dim_check: domain_dim == base_dim + deficiency,
        boundary_dim: e.boundary.len(),
        complement_dim: complement.len(),
        maximality_margin,
        maximality,
        multivalued_dim: e.multivalued_dim(),
    }
}

#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub parameter: UnitaryParameter,
    pub report: ExtensionReport,
    pub domain: Frame,
}

/// One verified extension per parameter, in grid order. A model with
/// `d = 0` and an empty grid yields the single trivial extension.
pub fn sweep_extensions(
    m: &OperatorModel,
    grid: &[UnitaryParameter],
    tol: &Tolerances,
) -> Result<Vec<SweepEntry>> {
    let basis = ExtensionBasis::new(m, tol)?;
    let trivial;
    let grid = if grid.is_empty() && basis.deficiency() == 0 {
        trivial = [UnitaryParameter::identity(0)];
        &trivial[..]
    } else {
        grid
    };
    grid.par_iter()
        .map(|u| {
            let e = basis.build(u, tol)?;
            Ok(SweepEntry {
                parameter: u.clone(),
                report: verify_extension(&e, tol),
                domain: e.domain,
            })
        })
        .collect()
}

/// The phases `2πk/count`, `k = 0, …, count − 1`.
pub fn phase_grid(count: usize) -> Vec<UnitaryParameter> {
    (0..count)
        .map(|k| UnitaryParameter::phase(2.0 * std::f64::consts::PI * k as f64 / count as f64))
        .collect()
}

/// Smallest pairwise distance (largest principal angle) between the
/// domains of a sweep; `+∞` for fewer than two entries.
pub fn min_pairwise_distance(entries: &[SweepEntry]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (a, ea) in entries.iter().enumerate() {
        for eb in &entries[a + 1..] {
            best = best.min(subspace_distance(&ea.domain, &eb.domain)?);
        }
    }
    Ok(best)
}

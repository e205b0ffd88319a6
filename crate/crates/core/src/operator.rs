//! Finite models of closed symmetric operators.
//!
//! A model is a square matrix `S` (the action, defined on all of `Cᴺ`)
//! together with an orthonormal frame `D` spanning the operator domain. The
//! operator itself is `S` restricted to `span(D)`; it is symmetric when the
//! boundary form `⟨Sf, g⟩ − ⟨f, Sg⟩` vanishes on that span.
//!
//! Every quantity here is computed from the range definitions: the deficiency
//! spaces are `R((S ± i)|_D)^⊥`. In a finite-dimensional ambient space
//! `(S ± i)|_D` is injective, so `d₊ = d₋ = N − dim D`; the presets are set up
//! so that this codimension equals the index of the continuum operator they
//! discretise.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_constraints, read_matrix, Constraint};
use crate::linalg::{
    orthogonal_complement, orthonormal_range, range_complement, singular_values, unitarity_residual, CMatrix,
    CVector, Frame, Tolerances, C64, I,
};

/// Which deficiency space: `N₊ = R(A + i)^⊥` or `N₋ = R(A − i)^⊥`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `+i` or `−i`.
    pub fn unit(self) -> C64 {
        match self {
            Sign::Plus => I,
            Sign::Minus => -I,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// Sample points of a discretised interval. The inner product carries the
/// uniform weight `weight`; because it is uniform, normalised quantities
/// (frames, angles, overlaps) agree with their unweighted counterparts.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub points: Vec<f64>,
    pub weight: f64,
}

impl Grid {
    /// Samples `f` at the grid points and normalises in the weighted norm
    /// (equivalently, the Euclidean norm).
    pub fn sample_normalized(&self, f: impl Fn(f64) -> C64) -> CVector {
        let v = CVector::from_iterator(self.points.len(), self.points.iter().map(|&x| f(x)));
        let n = v.norm();
        v.unscale(n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorModel {
    label: String,
    action: CMatrix,
    domain: Frame,
    grid: Option<Grid>,
}

impl OperatorModel {
    pub fn new(label: impl Into<String>, action: CMatrix, domain: Frame) -> Result<Self> {
        if action.nrows() != action.ncols() {
            return Err(Error::DimensionMismatch {
                expected: action.nrows(),
                got: action.ncols(),
                context: "action matrix must be square",
            });
        }
        if domain.ambient_dim() != action.nrows() {
            return Err(Error::DimensionMismatch {
                expected: action.nrows(),
                got: domain.ambient_dim(),
                context: "domain frame ambient dimension",
            });
        }
        if domain.is_empty() {
            return Err(Error::Empty("operator domain"));
        }
        if !crate::linalg::is_finite(&action) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            label: label.into(),
            action,
            domain,
            grid: None,
        })
    }

    /// `S` on the full space `Cᴺ`.
    pub fn full_domain(label: impl Into<String>, action: CMatrix) -> Result<Self> {
        let n = action.nrows();
        Self::new(label, action, Frame::standard(n))
    }

    /// Domain = common kernel of the given linear functionals.
    pub fn from_constraints(
        label: impl Into<String>,
        action: CMatrix,
        constraints: &[Constraint],
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = action.nrows();
        let domain = constraint_domain(n, constraints, tol)?;
        Self::new(label, action, domain)
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = Some(grid);
        self
    }

    /// Same operator with its domain frame replaced; used to check that
    /// results depend only on the span.
    pub fn with_domain(&self, domain: Frame) -> Result<Self> {
        let mut m = Self::new(self.label.clone(), self.action.clone(), domain)?;
        m.grid = self.grid.clone();
        Ok(m)
    }

    /// `S + c·I` on the same domain.
    pub fn shifted(&self, c: f64) -> Self {
        let n = self.ambient_dim();
        let mut m = self.clone();
        m.action += CMatrix::identity(n, n) * C64::new(c, 0.0);
        m
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ambient_dim(&self) -> usize {
        self.action.nrows()
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn action(&self) -> &CMatrix {
        &self.action
    }

    pub fn domain(&self) -> &Frame {
        &self.domain
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    /// `S·D`, the action on the domain frame.
    pub fn action_on_domain(&self) -> CMatrix {
        &self.action * self.domain.matrix()
    }

    /// `(S + shift·I)·D`.
    pub fn shifted_image(&self, shift: C64) -> CMatrix {
        let mut m = self.action_on_domain();
        m += self.domain.matrix() * shift;
        m
    }
}

fn constraint_domain(n: usize, constraints: &[Constraint], tol: &Tolerances) -> Result<Frame> {
    if constraints.is_empty() {
        return Ok(Frame::standard(n));
    }
    // f ↦ Σ a_k f_k is ⟨ā, f⟩, so the domain is the complement of the
    // conjugated coefficient vectors.
    let mut rows = CMatrix::zeros(n, constraints.len());
    for (j, c) in constraints.iter().enumerate() {
        if c.terms.is_empty() {
            return Err(Error::InconsistentConstraints(format!(
                "constraint {j} has no terms"
            )));
        }
        for &(idx, a) in &c.terms {
            if idx >= n {
                return Err(Error::InconsistentConstraints(format!(
                    "constraint {j} refers to index {idx}, ambient dimension is {n}"
                )));
            }
            rows[(idx, j)] += a.conj();
        }
    }
    let span = orthonormal_range(&rows, tol)?;
    if span.is_empty() {
        return Err(Error::InconsistentConstraints(
            "all constraints vanish".into(),
        ));
    }
    let domain = orthogonal_complement(&span);
    if domain.is_empty() {
        return Err(Error::InconsistentConstraints(
            "constraints leave an empty domain".into(),
        ));
    }
    Ok(domain)
}

/// Outcome of the symmetry check.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    /// `max |⟨Sf,g⟩ − ⟨f,Sg⟩| / (‖Sf‖‖g‖ + ‖f‖‖Sg‖)` over domain basis pairs.
    pub residual: f64,
    /// The same maximum without normalisation.
    pub absolute: f64,
    pub worst_pair: (usize, usize),
}

/// Evaluates the boundary form on every pair of domain basis vectors and
/// rejects the model if the relative residual exceeds `tol_sym`.
pub fn validate_symmetric(m: &OperatorModel, tol: &Tolerances) -> Result<SymmetryReport> {
    let report = symmetry_residual(m);
    if report.residual > tol.tol_sym {
        return Err(Error::ModelRejected {
            residual: report.residual,
            tol: tol.tol_sym,
            pair_a: report.worst_pair.0,
            pair_b: report.worst_pair.1,
        });
    }
    Ok(report)
}

pub fn symmetry_residual(m: &OperatorModel) -> SymmetryReport {
    let d = m.domain.matrix();
    let sd = m.action_on_domain();
    // gamma[(a, b)] = ⟨S f_a, f_b⟩ − ⟨f_a, S f_b⟩
    let gamma = sd.adjoint() * d - d.adjoint() * &sd;
    let norms: Vec<f64> = sd.column_iter().map(|c| c.norm()).collect();
    let mut report = SymmetryReport {
        residual: 0.0,
        absolute: 0.0,
        worst_pair: (0, 0),
    };
    for b in 0..gamma.ncols() {
        for a in 0..gamma.nrows() {
            let g = gamma[(a, b)].norm();
            let scale = norms[a] + norms[b];
            let rel = if scale > 0.0 { g / scale } else { g };
            report.absolute = report.absolute.max(g);
            if rel > report.residual {
                report.residual = rel;
                report.worst_pair = (a, b);
            }
        }
    }
    report
}

/// Orthonormal basis of `R((S ± i)|_D)^⊥`.
pub fn deficiency_space(m: &OperatorModel, sign: Sign, tol: &Tolerances) -> Result<Frame> {
    range_complement(&m.shifted_image(sign.unit()), tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeficiencyReport {
    pub d_plus: usize,
    pub d_minus: usize,
    pub basis_plus: Frame,
    pub basis_minus: Frame,
    /// `max |⟨n, (S ± i) f⟩| / ‖(S ± i) f‖` over deficiency and domain basis
    /// vectors, both signs.
    pub residual: f64,
}

pub fn deficiency_report(m: &OperatorModel, tol: &Tolerances) -> Result<DeficiencyReport> {
    let basis_plus = deficiency_space(m, Sign::Plus, tol)?;
    let basis_minus = deficiency_space(m, Sign::Minus, tol)?;
    let residual = orthogonality_defect(m, &basis_plus, Sign::Plus)
        .max(orthogonality_defect(m, &basis_minus, Sign::Minus));
    Ok(DeficiencyReport {
        d_plus: basis_plus.len(),
        d_minus: basis_minus.len(),
        basis_plus,
        basis_minus,
        residual,
    })
}

pub(crate) fn orthogonality_defect(m: &OperatorModel, n: &Frame, sign: Sign) -> f64 {
    if n.is_empty() {
        return 0.0;
    }
    let image = m.shifted_image(sign.unit());
    let cross = n.matrix().adjoint() * &image;
    let mut worst: f64 = 0.0;
    for (b, col) in image.column_iter().enumerate() {
        let scale = col.norm().max(f64::MIN_POSITIVE);
        for a in 0..cross.nrows() {
            worst = worst.max(cross[(a, b)].norm() / scale);
        }
    }
    worst
}

/// `(d₊, d₋)`.
pub fn deficiency_indices(m: &OperatorModel, tol: &Tolerances) -> Result<(usize, usize)> {
    Ok((
        deficiency_space(m, Sign::Plus, tol)?.len(),
        deficiency_space(m, Sign::Minus, tol)?.len(),
    ))
}

/// Lower bound `c_z` in `‖(A − z) f‖ ≥ c_z ‖f‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularity {
    /// Smallest singular value of `(S − z)|_D`.
    pub constant: f64,
    /// Largest singular value of `(S − z)|_D`.
    pub scale: f64,
    /// Whether `z` lies in the domain of regularity at the configured
    /// rank tolerance.
    pub regular: bool,
}

pub fn regularity_constant(m: &OperatorModel, z: C64, tol: &Tolerances) -> Result<Regularity> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let s = singular_values(&m.shifted_image(-z));
    let scale = s.first().copied().unwrap_or(0.0);
    let constant = s.last().copied().unwrap_or(0.0);
    Ok(Regularity {
        constant,
        scale,
        regular: constant > tol.tol_rank * scale,
    })
}

/// `dim R((S − z)|_D)^⊥`, defined off the real axis.
pub fn deficiency_dim_at(m: &OperatorModel, z: C64, tol: &Tolerances) -> Result<usize> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if z.im == 0.0 {
        return Err(Error::UnsupportedParameter {
            re: z.re,
            im: z.im,
            reason: "regularity is only guaranteed off the real axis",
        });
    }
    let range = orthonormal_range(&m.shifted_image(-z), tol)?;
    Ok(m.ambient_dim() - range.len())
}

/// The isometry `(A − i)(A + i)⁻¹ : R(A + i) → R(A − i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CayleyTransform {
    /// Orthonormal basis of `R(A + i)`.
    pub domain: Frame,
    /// Orthonormal basis of `R(A − i)`.
    pub codomain: Frame,
    /// The map in these coordinates.
    pub matrix: CMatrix,
}

impl CayleyTransform {
    /// Applies the map to a vector of `R(A + i)` (the component orthogonal to
    /// it is discarded).
    pub fn apply(&self, v: &CVector) -> CVector {
        self.codomain.matrix() * (&self.matrix * self.domain.coordinates(v))
    }

    /// `‖VᴴV − I‖_max` of the coordinate matrix.
    pub fn isometry_defect(&self) -> f64 {
        unitarity_residual(&self.matrix)
    }
}

pub fn cayley_transform(m: &OperatorModel, tol: &Tolerances) -> Result<CayleyTransform> {
    let plus = m.shifted_image(I);
    let minus = m.shifted_image(-I);
    let domain = orthonormal_range(&plus, tol)?;
    let codomain = orthonormal_range(&minus, tol)?;
    if domain.len() != m.domain_dim() || codomain.len() != m.domain_dim() {
        return Err(Error::NumericalFailure(
            "(S ± i) is numerically singular on the domain".into(),
        ));
    }
    // (S+i)D = Q_dom R, so V Q_dom = (S−i)D R⁻¹ and the matrix is
    // Q_codᴴ (S−i)D R⁻¹.
    let r = domain.matrix().adjoint() * &plus;
    let rhs = codomain.matrix().adjoint() * &minus;
    // X R = rhs  ⇔  Rᴴ Xᴴ = rhsᴴ
    let xt = r
        .adjoint()
        .lu()
        .solve(&rhs.adjoint())
        .ok_or_else(|| Error::NumericalFailure("singular range coordinates".into()))?;
    Ok(CayleyTransform {
        domain,
        codomain,
        matrix: xt.adjoint(),
    })
}

/// Momentum `−i d/dx` on `[0, 1]` with both endpoint values pinned to zero.
///
/// `n` uniform nodes `x_j = j h`, `h = 1/(n − 1)`. The ambient space holds
/// the `n − 1` cell averages `c_j = (f_j + f_{j+1}) / 2`, and the action is
/// the central difference across each cell, `−i (f_{j+1} − f_j) / h`, with
/// the node values rebuilt from `f_0 = 0`. On cell vectors whose rebuilt
/// `f_{n−1}` also vanishes (one linear constraint) the boundary form
/// telescopes to `i(f̄_{n−1} g_{n−1} − f̄_0 g_0) = 0`, so the model is
/// symmetric with indices `(1, 1)` and no spurious grid-scale deficiency
/// mode.
pub fn momentum_interval(n: usize) -> Result<OperatorModel> {
    check_grid_size(n)?;
    let cells = n - 1;
    let h = 1.0 / (n as f64 - 1.0);
    // f_j = Σ_{l<j} 2(−1)^{j−1−l} c_l, and (Sc)_j = −2i (c_j − f_j) / h.
    let mut s = CMatrix::zeros(cells, cells);
    for j in 0..cells {
        s[(j, j)] = C64::new(0.0, -2.0 / h);
        for l in 0..j {
            let sign = if (j - 1 - l) % 2 == 0 { 1.0 } else { -1.0 };
            s[(j, l)] = C64::new(0.0, 4.0 * sign / h);
        }
    }
    // f_{n−1} = 2 Σ_l (−1)^{cells−1−l} c_l = 0
    let constraint = Constraint::new(
        (0..cells)
            .map(|l| {
                let sign = if (cells - 1 - l) % 2 == 0 { 1.0 } else { -1.0 };
                (l, C64::new(sign, 0.0))
            })
            .collect(),
    );
    let model = OperatorModel::from_constraints(
        format!("momentum_interval(n={n})"),
        s,
        &[constraint],
        &Tolerances::default(),
    )?;
    Ok(model.with_grid(Grid {
        points: (0..cells).map(|j| (j as f64 + 0.5) * h).collect(),
        weight: h,
    }))
}

/// Second difference `(f_{j−1} − 2f_j + f_{j+1}) / h²` on `[0, 1]` with value
/// and first difference zero at both ends.
///
/// `n` uniform nodes; the endpoint values `f_0 = f_{n−1} = 0` are built into
/// the ambient space (the `n − 2` interior nodes), and the two remaining
/// constraints `f_1 = f_{n−2} = 0` express the vanishing first differences.
/// Indices `(2, 2)`.
pub fn laplacian_interval(n: usize) -> Result<OperatorModel> {
    check_grid_size(n)?;
    let interior = n - 2;
    let h = 1.0 / (n as f64 - 1.0);
    let inv = 1.0 / (h * h);
    let s = CMatrix::from_fn(interior, interior, |i, j| {
        if i == j {
            C64::new(-2.0 * inv, 0.0)
        } else if i.abs_diff(j) == 1 {
            C64::new(inv, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let constraints = [Constraint::point(0), Constraint::point(interior - 1)];
    let model = OperatorModel::from_constraints(
        format!("laplacian_interval(n={n})"),
        s,
        &constraints,
        &Tolerances::default(),
    )?;
    Ok(model.with_grid(Grid {
        points: (1..=interior).map(|j| j as f64 * h).collect(),
        weight: h,
    }))
}

/// Action from a matrix file; domain from an optional constraint file (no
/// file, or an empty one, means the full space).
pub fn from_files(
    matrix: impl AsRef<Path>,
    constraints: Option<&Path>,
    tol: &Tolerances,
) -> Result<OperatorModel> {
    let s = read_matrix(matrix.as_ref())?;
    let cs = match constraints {
        Some(p) => read_constraints(p)?,
        None => Vec::new(),
    };
    OperatorModel::from_constraints(matrix.as_ref().display().to_string(), s, &cs, tol)
}

fn check_grid_size(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidPreset(format!(
            "grid size must be at least 8, got {n}"
        )));
    }
    Ok(())
}

/// Named model builders.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    MomentumInterval { n: usize },
    LaplacianInterval { n: usize },
    MatrixFile {
        matrix: std::path::PathBuf,
        constraints: Option<std::path::PathBuf>,
    },
}

impl Preset {
    pub fn build(&self, tol: &Tolerances) -> Result<OperatorModel> {
        match self {
            Preset::MomentumInterval { n } => momentum_interval(*n),
            Preset::LaplacianInterval { n } => laplacian_interval(*n),
            Preset::MatrixFile {
                matrix,
                constraints,
            } => from_files(matrix, constraints.as_deref(), tol),
        }
    }
}

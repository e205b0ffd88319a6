//! The operator `H_AB = H_A ⊗ I + I ⊗ M_φ` over a finite weighted point set,
//! and the fiberwise identification of its deficiency spaces with
//! `N±(H_A) ⊗ Cᵐ`.
//!
//! A vector of the big space is a list of fiber vectors `f_1, …, f_m ∈ Cᴺ`
//! with inner product `Σ μ_i ⟨f_i, g_i⟩`. All computations run in the
//! rescaled coordinates `y_i = √μ_i f_i`, in which the inner product is the
//! plain one. The block operator acts on fiber `i` by `S + φ_i` and commutes
//! with the rescaling, so only the conversion of vectors involves `μ`.
//!
//! Fiber convention: `N₊(H_AB)` consists of the `f` with
//! `f_i ∈ N(H_A* + φ_i − i)`, and `N(A* − w) = R(A − w̄)⊥`, so fiber `i` of
//! `N₊` is `R((S + φ_i + i)|_D)⊥`, the frame at `z_i = φ_i + i`. For `N₋`,
//! `z_i = φ_i − i`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{ambient_unitary, FrameFamily};
use crate::linalg::{
    orthonormal_range, range_complement, principal_angles, unitarity_residual,
    CMatrix, CVector, Frame, Tolerances, C64,
};
use crate::operator::{deficiency_indices, deficiency_space, validate_symmetric, OperatorModel, Sign};

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpace {
    phi: Vec<f64>,
    mu: Vec<f64>,
}

impl MeasureSpace {
    /// Points given as `(φ_i, μ_i)` pairs.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let (phi, mu) = points.iter().copied().unzip();
        Self::from_parts(phi, mu)
    }

    pub fn from_parts(phi: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::InvalidSpace("no points".into()));
        }
        if phi.len() != mu.len() {
            return Err(Error::InvalidSpace(format!(
                "{} values of φ but {} weights",
                phi.len(),
                mu.len()
            )));
        }
        if let Some(k) = phi.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidSpace(format!("φ at point {k} is not finite")));
        }
        if let Some(k) = mu.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidSpace(format!(
                "weight at point {k} is {}; weights must be positive",
                mu[k]
            )));
        }
        Ok(Self { phi, mu })
    }

    /// Unit weights.
    pub fn uniform(phi: &[f64]) -> Result<Self> {
        Self::from_parts(phi.to_vec(), vec![1.0; phi.len()])
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
}

fn block_diagonal(blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

#[derive(Clone, Debug)]
pub struct BipartiteModel {
    fiber: OperatorModel,
    space: MeasureSpace,
    block: OperatorModel,
}

pub fn assemble(fiber: &OperatorModel, space: &MeasureSpace) -> Result<BipartiteModel> {
    let n = fiber.ambient_dim();
    let shifted: Vec<CMatrix> = space
        .phi
        .iter()
        .map(|&p| fiber.action() + CMatrix::identity(n, n) * C64::new(p, 0.0))
        .collect();
    let action = block_diagonal(&shifted.iter().collect::<Vec<_>>());
    let domains = vec![fiber.domain().matrix(); space.len()];
    let domain = Frame::new(block_diagonal(&domains), 1e-10)?;
    let block = OperatorModel::new(format!("{} ⊗ M_φ", fiber.label()), action, domain)?;
    Ok(BipartiteModel {
        fiber: fiber.clone(),
        space: space.clone(),
        block,
    })
}

impl BipartiteModel {
    pub fn fiber(&self) -> &OperatorModel {
        &self.fiber
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    /// The block operator in rescaled coordinates.
    pub fn block_model(&self) -> &OperatorModel {
        &self.block
    }

    pub fn fiber_count(&self) -> usize {
        self.space.len()
    }

    /// Rescaled coordinates `√μ_i f_i` of a big-space vector `f`.
    pub fn rescale(&self, f: &CVector) -> CVector {
        self.scale_blocks(f, |w| w.sqrt())
    }

    /// Inverse of [`Self::rescale`].
    pub fn unscale(&self, y: &CVector) -> CVector {
        self.scale_blocks(y, |w| 1.0 / w.sqrt())
    }

    fn scale_blocks(&self, v: &CVector, factor: impl Fn(f64) -> f64) -> CVector {
        let n = self.fiber.ambient_dim();
        let mut out = v.clone();
        for (i, &w) in self.space.mu.iter().enumerate() {
            let mut block = out.rows_mut(i * n, n);
            block *= C64::new(factor(w), 0.0);
        }
        out
    }

    /// `μ`-weighted inner product of two big-space vectors in original
    /// coordinates.
    pub fn weighted_inner(&self, f: &CVector, g: &CVector) -> C64 {
        let n = self.fiber.ambient_dim();
        self.space
            .mu
            .iter()
            .enumerate()
            .map(|(i, &w)| f.rows(i * n, n).dotc(&g.rows(i * n, n)) * w)
            .sum()
    }

    /// Fiber parameter `z_i = φ_i ± i`.
    pub fn fiber_parameter(&self, i: usize, sign: Sign) -> C64 {
        C64::new(self.space.phi[i], 0.0) + sign.unit()
    }

    /// Block `i` of every column of a rescaled big-space matrix.
    pub fn fiber_block(&self, m: &CMatrix, i: usize) -> CMatrix {
        let n = self.fiber.ambient_dim();
        m.rows(i * n, n).into_owned()
    }
}

/// `N±(H_AB)` from the range complement on the full `N·m` dimensional
/// space, in rescaled coordinates.
pub fn deficiency_direct(b: &BipartiteModel, sign: Sign, tol: &Tolerances) -> Result<Frame> {
    deficiency_space(&b.block, sign, tol)
}

/// Fiber `i` of `N±(H_AB)`: `R((S + z_i)|_D)⊥`, one frame per point.
pub fn deficiency_fibered(b: &BipartiteModel, sign: Sign, tol: &Tolerances) -> Result<Vec<Frame>> {
    let fiber = &b.fiber;
    let expected = deficiency_space(fiber, sign, tol)?.len();
    let frames: Vec<Frame> = (0..b.fiber_count())
        .into_par_iter()
        .map(|i| {
            range_complement(&fiber.shifted_image(b.fiber_parameter(i, sign)), tol)
        })
        .collect::<Result<_>>()?;
    if let Some(f) = frames.iter().find(|f| f.len() != expected) {
        return Err(Error::ToleranceInconsistency {
            found: f.len(),
            expected,
        });
    }
    Ok(frames)
}

/// Block-diagonal direct sum of per-fiber frames.
pub fn direct_sum(frames: &[Frame]) -> Frame {
    let blocks: Vec<&CMatrix> = frames.iter().map(|f| f.matrix()).collect();
    Frame::from_orthonormal(block_diagonal(&blocks))
}

#[derive(Clone, Debug)]
pub struct IsomorphismCertificate {
    pub sign: Sign,
    /// Coordinates of `N±(H_AB)`'s basis in the basis `τ_j ⊗ e_i` of
    /// `N±(H_A) ⊗ Cᵐ`, rows ordered fiber by fiber.
    pub map: CMatrix,
    pub unitarity_residual: f64,
    /// Principal angles between the direct frame and the direct sum of the
    /// fibered frames.
    pub oracle_angles: Vec<f64>,
    /// Principal angles between the blockwise image and `span τ ⊗ Cᵐ`.
    pub image_angles: Vec<f64>,
    /// Per fiber, `‖(I − Σ_iΣ_iᴴ) Q_i‖`: how far block `i` of the direct
    /// frame sticks out of the σ frame at `z_i`.
    pub fiber_residuals: Vec<f64>,
    pub dimension: usize,
    pub expected_dimension: usize,
    pub diagnostics: Vec<String>,
}

impl IsomorphismCertificate {
    pub const ANGLE_BOUND: f64 = 1e-8;
    pub const UNITARITY_BOUND: f64 = 1e-9;

    pub fn max_oracle_angle(&self) -> f64 {
        self.oracle_angles.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_image_angle(&self) -> f64 {
        self.image_angles.iter().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::CertificateFailed(self.diagnostics.join("; ")))
        }
    }
}

/// Applies `V_i = U_{z_i}` to block `i` of the direct frame and certifies
/// that the result is a unitary map onto `N±(H_A) ⊗ Cᵐ`.
pub fn isomorphism(b: &BipartiteModel, sign: Sign, tol: &Tolerances) -> Result<IsomorphismCertificate> {
    let n = b.fiber.ambient_dim();
    let m = b.fiber_count();
    let direct = deficiency_direct(b, sign, tol)?;
    let fibered = deficiency_fibered(b, sign, tol)?;
    let d = fibered.first().map_or(0, |f| f.len());
    let oracle_angles = principal_angles(&direct, &direct_sum(&fibered))?;

    let family = FrameFamily::new(&b.fiber, tol)?;
    let zs: Vec<C64> = (0..m).map(|i| b.fiber_parameter(i, sign)).collect();
    let data = family.at_all(&zs)?;
    let tau = family.reference(zs.first().copied().unwrap_or(sign.unit()));

    let q = direct.matrix();
    let mut coords = Vec::with_capacity(m);
    let mut images = Vec::with_capacity(m);
    let mut fiber_residuals = Vec::with_capacity(m);
    for (i, fd) in data.iter().enumerate() {
        let qi = b.fiber_block(q, i);
        let s = fd.selected_frame.matrix();
        let inside = s * (s.adjoint() * &qi);
        fiber_residuals.push(spectral_norm(&(&qi - inside)));
        let image = ambient_unitary(&fd.selected_frame, tau) * &qi;
        coords.push(tau.matrix().adjoint() * &image);
        images.push(image);
    }
    let map = if m * d == 0 {
        CMatrix::zeros(m * d, direct.len())
    } else {
        let mut out = CMatrix::zeros(m * d, direct.len());
        for (i, c) in coords.iter().enumerate() {
            out.rows_mut(i * d, d).copy_from(c);
        }
        out
    };
    let unitarity = if map.ncols() == 0 && map.nrows() == 0 {
        0.0
    } else {
        unitarity_residual(&map).max(unitarity_residual(&map.adjoint()))
    };

    let image_angles = if direct.is_empty() {
        Vec::new()
    } else {
        let stacked = CMatrix::from_fn(n * m, direct.len(), |r, c| images[r / n][(r % n, c)]);
        let image = orthonormal_range(&stacked, tol)?;
        let target = direct_sum(&vec![tau.clone(); m]);
        if image.len() != target.len() {
            vec![std::f64::consts::FRAC_PI_2]
        } else {
            principal_angles(&image, &target)?
        }
    };

    let mut diagnostics = Vec::new();
    if direct.len() != d * m {
        diagnostics.push(format!(
            "dimension: direct frame has {} vectors, expected {} = {d}·{m}",
            direct.len(),
            d * m
        ));
    }
    let max_oracle = oracle_angles.iter().copied().fold(0.0, f64::max);
    if max_oracle > IsomorphismCertificate::ANGLE_BOUND {
        diagnostics.push(format!(
            "oracle: direct and fibered spans differ by {max_oracle:.3e} rad"
        ));
    }
    for (i, &r) in fiber_residuals.iter().enumerate() {
        if r > IsomorphismCertificate::ANGLE_BOUND {
            diagnostics.push(format!(
                "fiber {i} (φ = {}): block leaves the σ frame by {r:.3e}",
                b.space.phi[i]
            ));
        }
    }
    let max_image = image_angles.iter().copied().fold(0.0, f64::max);
    if max_image > IsomorphismCertificate::ANGLE_BOUND {
        diagnostics.push(format!("image: angle {max_image:.3e} rad from span τ ⊗ Cᵐ"));
    }
    if unitarity > IsomorphismCertificate::UNITARITY_BOUND {
        diagnostics.push(format!("unitarity: residual {unitarity:.3e}"));
    }

    Ok(IsomorphismCertificate {
        sign,
        map,
        unitarity_residual: unitarity,
        oracle_angles,
        image_angles,
        fiber_residuals,
        dimension: direct.len(),
        expected_dimension: d * m,
        diagnostics,
    })
}

fn spectral_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// The eigenvalues of a hermitian full-domain model as a measure space with
/// unit weights: `B` is unitarily equivalent to multiplication by `φ` on it.
pub fn spectral_space(b: &OperatorModel, tol: &Tolerances) -> Result<MeasureSpace> {
    if b.domain_dim() != b.ambient_dim() {
        return Err(Error::InvalidSpace(
            "spectral decomposition needs a full-domain model".into(),
        ));
    }
    validate_symmetric(b, tol)?;
    let s = b.action();
    let h = (s + s.adjoint()) * C64::new(0.5, 0.0);
    let mut phi: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    phi.sort_by(f64::total_cmp);
    MeasureSpace::uniform(&phi)
}

/// The two-sided operator `S_A ⊗ I + I ⊗ S_B` on `D_A ⊗ D_B`.
pub fn tensor_model(a: &OperatorModel, b: &OperatorModel) -> Result<OperatorModel> {
    let (na, nb) = (a.ambient_dim(), b.ambient_dim());
    let action = a.action().kronecker(&CMatrix::identity(nb, nb))
        + CMatrix::identity(na, na).kronecker(b.action());
    let domain = Frame::new(a.domain().matrix().kronecker(b.domain().matrix()), 1e-10)?;
    OperatorModel::new(format!("{} ⊗ I + I ⊗ {}", a.label(), b.label()), action, domain)
}

/// Deficiency dimensions of the two-sided operator next to the numbers a
/// product formula would predict. Nothing is asserted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbeReport {
    pub n_a: usize,
    pub n_b: usize,
    pub d_a: (usize, usize),
    pub d_b: (usize, usize),
    pub d_ab: (usize, usize),
    /// `d_A · n_B`
    pub d_a_n_b: (usize, usize),
    /// `n_A · d_B`
    pub n_a_d_b: (usize, usize),
    /// `d_A · n_B + n_A · d_B`
    pub conjectured: (usize, usize),
}

pub fn conjecture_probe(a: &OperatorModel, b: &OperatorModel, tol: &Tolerances) -> Result<ProbeReport> {
    validate_symmetric(a, tol)?;
    validate_symmetric(b, tol)?;
    let (n_a, n_b) = (a.ambient_dim(), b.ambient_dim());
    let d_a = deficiency_indices(a, tol)?;
    let d_b = deficiency_indices(b, tol)?;
    let d_ab = deficiency_indices(&tensor_model(a, b)?, tol)?;
    let d_a_n_b = (d_a.0 * n_b, d_a.1 * n_b);
    let n_a_d_b = (n_a * d_b.0, n_a * d_b.1);
    Ok(ProbeReport {
        n_a,
        n_b,
        d_a,
        d_b,
        d_ab,
        d_a_n_b,
        n_a_d_b,
        conjectured: (d_a_n_b.0 + n_a_d_b.0, d_a_n_b.1 + n_a_d_b.1),
    })
}

/// Stacks per-fiber vectors `f_1, …, f_m` into one big-space vector.
pub fn stack_fibers(parts: &[CVector]) -> CVector {
    let n = parts.first().map_or(0, |p| p.len());
    let mut out = CVector::zeros(n * parts.len());
    for (i, p) in parts.iter().enumerate() {
        out.rows_mut(i * n, n).copy_from(p);
    }
    out
}

//! z-dependent orthonormal frames of the fiber deficiency spaces
//! `R((S + z)|_D)⊥` and the unitaries `U_z` that identify them with one
//! fixed reference space.
//!
//! The pipeline at a spectral parameter `z`:
//!
//! 1. `ξ_n ∈ D` with `((S + i)ξ_n)` orthonormal, computed once ([`xi_basis`]).
//! 2. `η(z)`, the Gram–Schmidt orthonormalisation of `((S + z)ξ_n)`, an
//!    orthonormal basis of `R((S + z)|_D)` ([`eta_basis`]).
//! 3. `ρ_n(z) = (I − P_z) ζ_n` for the standard basis `ζ_n`, where `P_z` is
//!    the projector onto that range, and `σ(z)`, the κ-Gram–Schmidt of the
//!    `ρ_n` ([`sigma_sequence`]). Exactly `d` of the `σ_n` are nonzero.
//! 4. The positions `n_j(z)` of the nonzero `σ_n` ([`select_indices`]) and
//!    `U_z σ_{n_j(z)} = τ_j` ([`fiber_unitary`]).
//!
//! Parameters in the lower half-plane are accepted as well; their frames
//! describe `N₋`-type fibers and are referred to `τ` computed at `z = −i`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    gram_schmidt, kappa_gram_schmidt, orthonormal_range, principal_angles, range_complement,
    unitarity_residual, CMatrix, CVector, Frame, Tolerances, C64, I,
};
use crate::operator::OperatorModel;

const RECONSTRUCTION_BOUND: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct XiBasis {
    base: OperatorModel,
    /// Columns `ξ_n`, elements of `D`.
    xi: CMatrix,
    /// Orthonormal columns `(S + i)ξ_n`.
    image: Frame,
    residual: f64,
}

impl XiBasis {
    pub fn base(&self) -> &OperatorModel {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.xi.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.ncols() == 0
    }

    pub fn xi(&self) -> &CMatrix {
        &self.xi
    }

    pub fn image(&self) -> &Frame {
        &self.image
    }

    /// `max_n ‖(S + i)ξ_n − image_n‖`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// The columns `(S + z)ξ_n`.
    pub fn shifted(&self, z: C64) -> CMatrix {
        self.base.action() * &self.xi + &self.xi * z
    }
}

pub fn xi_basis(m: &OperatorModel, tol: &Tolerances) -> Result<XiBasis> {
    let d = m.domain().matrix();
    let image = orthonormal_range(&m.shifted_image(I), tol)?;
    // (S + i)D c = image  ⇒  ξ = D c
    let coeffs = m
        .shifted_image(I)
        .svd(true, true)
        .solve(image.matrix(), 1e-14)
        .map_err(|e| Error::NumericalFailure(e.into()))?;
    let xi = d * coeffs;
    let recon = m.action() * &xi + &xi * I - image.matrix();
    let residual = recon
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if residual.is_nan() || residual > RECONSTRUCTION_BOUND {
        return Err(Error::NumericalFailure(format!(
            "ξ reconstruction residual {residual:.3e} exceeds {RECONSTRUCTION_BOUND:e}"
        )));
    }
    Ok(XiBasis {
        base: m.clone(),
        xi,
        image,
        residual,
    })
}

fn require_nonreal(z: C64) -> Result<()> {
    if z.im == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::UnsupportedParameter {
            re: z.re,
            im: z.im,
            reason: "frames are defined for finite z off the real axis",
        });
    }
    Ok(())
}

/// Orthonormal basis of `R((S + z)|_D)` by classical Gram–Schmidt of the
/// vectors `(S + z)ξ_n`.
pub fn eta_basis(x: &XiBasis, z: C64, tol: &Tolerances) -> Result<Frame> {
    require_nonreal(z)?;
    let n = x.base.ambient_dim();
    if x.is_empty() {
        return Ok(Frame::empty(n));
    }
    let shifted = x.shifted(z);
    let cols: Vec<CVector> = shifted.column_iter().map(|c| c.into_owned()).collect();
    gram_schmidt(&cols, tol)
}

/// The full κ-Gram–Schmidt output `σ_1(z), …, σ_N(z)` of the residuals
/// `(I − P_z)ζ_n`, zeros included. `zeta` must be the standard basis.
pub fn sigma_sequence(
    x: &XiBasis,
    z: C64,
    zeta: &Frame,
    tol: &Tolerances,
) -> Result<Vec<CVector>> {
    let eta = eta_basis(x, z, tol)?;
    sigma_from_eta(x, &eta, zeta, tol)
}

fn sigma_from_eta(x: &XiBasis, eta: &Frame, zeta: &Frame, tol: &Tolerances) -> Result<Vec<CVector>> {
    let n = x.base.ambient_dim();
    if zeta.ambient_dim() != n || zeta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: zeta.len(),
            context: "ζ must be a basis of the ambient space",
        });
    }
    let q = eta.matrix();
    // ρ_n = (I − P_z) ζ_n for all n at once
    let rho_all = zeta.matrix() - q * (q.adjoint() * zeta.matrix());
    let rho: Vec<CVector> = rho_all.column_iter().map(|c| c.into_owned()).collect();
    let sigma = kappa_gram_schmidt(&rho, tol);
    let expected = n - x.len();
    let found = sigma.iter().filter(|s| s.iter().any(|c| *c != C64::new(0.0, 0.0))).count();
    if found != expected {
        return Err(Error::ToleranceInconsistency { found, expected });
    }
    Ok(sigma)
}

/// Positions `n_1 < n_2 < …` of the nonzero entries, counted from 1.
pub fn select_indices(sigma: &[CVector]) -> Vec<usize> {
    sigma
        .iter()
        .enumerate()
        .filter(|(_, s)| s.iter().any(|c| *c != C64::new(0.0, 0.0)))
        .map(|(k, _)| k + 1)
        .collect()
}

fn selected_frame(sigma: &[CVector], indices: &[usize], n: usize) -> Frame {
    if indices.is_empty() {
        return Frame::empty(n);
    }
    let cols: Vec<CVector> = indices.iter().map(|&k| sigma[k - 1].clone()).collect();
    Frame::from_orthonormal(CMatrix::from_columns(&cols))
}

/// `U_z` as a map between coordinates: the selected frame `Σ_z` to the
/// reference frame `τ`. With `U_z = τ Σ_zᴴ` this is `τᴴ τ Σ_zᴴ Σ_z`.
pub fn fiber_unitary(selected: &Frame, tau: &Frame) -> Result<CMatrix> {
    if selected.len() != tau.len() || selected.ambient_dim() != tau.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: tau.len(),
            got: selected.len(),
            context: "selected σ frame vs reference τ",
        });
    }
    let op = ambient_unitary(selected, tau);
    Ok(tau.matrix().adjoint() * op * selected.matrix())
}

/// `U_z = τ Σ_zᴴ` as an ambient matrix; a partial isometry that is unitary
/// from the fiber deficiency space onto `span τ`.
pub fn ambient_unitary(selected: &Frame, tau: &Frame) -> CMatrix {
    tau.matrix() * selected.matrix().adjoint()
}

#[derive(Clone, Debug)]
pub struct FiberFrameData {
    pub z: C64,
    pub eta: Frame,
    pub sigma: Vec<CVector>,
    /// `n_j(z)`, counted from 1.
    pub selected: Vec<usize>,
    pub selected_frame: Frame,
    pub unitary_to_reference: CMatrix,
}

impl FiberFrameData {
    pub fn nonzero_count(&self) -> usize {
        self.selected.len()
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.unitary_to_reference)
    }
}

/// Everything shared by the frames at different `z`: the ξ-basis and the
/// two reference frames `τ` (taken at `z = i` and `z = −i`).
#[derive(Clone, Debug)]
pub struct FrameFamily {
    xi: XiBasis,
    zeta: Frame,
    tau_upper: Frame,
    tau_lower: Frame,
    tol: Tolerances,
}

impl FrameFamily {
    pub fn new(m: &OperatorModel, tol: &Tolerances) -> Result<Self> {
        let xi = xi_basis(m, tol)?;
        let n = m.ambient_dim();
        let zeta = Frame::standard(n);
        let tau = |z: C64| -> Result<Frame> {
            let sigma = sigma_sequence(&xi, z, &zeta, tol)?;
            Ok(selected_frame(&sigma, &select_indices(&sigma), n))
        };
        let tau_upper = tau(I)?;
        let tau_lower = tau(-I)?;
        Ok(Self {
            xi,
            zeta,
            tau_upper,
            tau_lower,
            tol: *tol,
        })
    }

    pub fn xi(&self) -> &XiBasis {
        &self.xi
    }

    /// Number of nonzero σ at the reference points.
    pub fn deficiency(&self) -> usize {
        self.tau_upper.len()
    }

    /// `τ` for the half-plane containing `z`.
    pub fn reference(&self, z: C64) -> &Frame {
        if z.im > 0.0 {
            &self.tau_upper
        } else {
            &self.tau_lower
        }
    }

    pub fn at(&self, z: C64) -> Result<FiberFrameData> {
        require_nonreal(z)?;
        let n = self.xi.base.ambient_dim();
        let eta = eta_basis(&self.xi, z, &self.tol)?;
        let sigma = sigma_from_eta(&self.xi, &eta, &self.zeta, &self.tol)?;
        let selected = select_indices(&sigma);
        let selected_frame = selected_frame(&sigma, &selected, n);
        let unitary_to_reference = fiber_unitary(&selected_frame, self.reference(z))?;
        Ok(FiberFrameData {
            z,
            eta,
            sigma,
            selected,
            selected_frame,
            unitary_to_reference,
        })
    }

    /// Frames at several parameters, evaluated concurrently, in input order.
    pub fn at_all(&self, zs: &[C64]) -> Result<Vec<FiberFrameData>> {
        zs.par_iter().map(|&z| self.at(z)).collect()
    }

    /// The fiber deficiency space at `z` computed without the σ machinery:
    /// the orthogonal complement of the range of `(S + z)|_D`.
    pub fn direct_complement(&self, z: C64) -> Result<Frame> {
        require_nonreal(z)?;
        let m = &self.xi.base;
        range_complement(&m.shifted_image(z), &self.tol)
    }

    /// `U_z` applied to an orthonormal basis `f` of the fiber deficiency
    /// space, in `τ` coordinates: `τᴴ U_z F`. Unitary iff `span f` is the
    /// deficiency space the σ frame spans.
    pub fn unitary_on(&self, data: &FiberFrameData, f: &Frame) -> CMatrix {
        let tau = self.reference(data.z);
        tau.matrix().adjoint() * ambient_unitary(&data.selected_frame, tau) * f.matrix()
    }

    /// `U_b⁻¹ U_a` from the direct complement at `a` to the one at `b`,
    /// both in the canonical bases returned by [`Self::direct_complement`].
    pub fn transition(&self, a: &FiberFrameData, b: &FiberFrameData) -> Result<CMatrix> {
        let fa = self.unitary_on(a, &self.direct_complement(a.z)?);
        let fb = self.unitary_on(b, &self.direct_complement(b.z)?);
        Ok(fb.adjoint() * fa)
    }
}

/// Principal angles between the selected σ frame at `z` and the direct
/// complement.
pub fn span_agreement(family: &FrameFamily, data: &FiberFrameData) -> Result<Vec<f64>> {
    principal_angles(&data.selected_frame, &family.direct_complement(data.z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{deficiency_space, momentum_interval, Sign};

    fn nonzero(n: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn select_indices_reads_positions_from_one() {
        let z = CVector::zeros(3);
        let sigma = vec![z.clone(), nonzero(3, 0), z.clone(), nonzero(3, 1)];
        assert_eq!(select_indices(&sigma), vec![2, 4]);
        assert!(select_indices(&[z.clone(), z.clone()]).is_empty());
        assert_eq!(select_indices(&[nonzero(3, 2)]), vec![1]);
    }

    #[test]
    fn hermitian_model_has_only_zero_sigmas() {
        let tol = Tolerances::default();
        let mut s = CMatrix::zeros(4, 4);
        for k in 0..4 {
            s[(k, k)] = C64::new(k as f64 - 1.5, 0.0);
        }
        s[(0, 3)] = C64::new(0.0, 1.0);
        s[(3, 0)] = C64::new(0.0, -1.0);
        let m = OperatorModel::full_domain("h", s).unwrap();
        let x = xi_basis(&m, &tol).unwrap();
        assert_eq!(x.len(), 4);
        let sigma = sigma_sequence(&x, C64::new(0.3, 2.0), &Frame::standard(4), &tol).unwrap();
        assert!(sigma.iter().all(|s| s.iter().all(|c| c.norm() == 0.0)));
    }

    #[test]
    fn sigma_at_i_spans_plus_deficiency() {
        let tol = Tolerances::default();
        let m = momentum_interval(40).unwrap();
        let fam = FrameFamily::new(&m, &tol).unwrap();
        let data = fam.at(I).unwrap();
        assert_eq!(data.nonzero_count(), 1);
        let plus = deficiency_space(&m, Sign::Plus, &tol).unwrap();
        let angles = principal_angles(&data.selected_frame, &plus).unwrap();
        assert!(angles[0] <= 1e-8);
        let id = &data.unitary_to_reference;
        assert!((id[(0, 0)] - C64::new(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn real_parameter_is_rejected() {
        let tol = Tolerances::default();
        let m = momentum_interval(16).unwrap();
        let fam = FrameFamily::new(&m, &tol).unwrap();
        assert!(matches!(
            fam.at(C64::new(1.0, 0.0)),
            Err(Error::UnsupportedParameter { .. })
        ));
    }

    #[test]
    fn coarse_tol_zero_is_reported() {
        let m = momentum_interval(16).unwrap();
        let tol = Tolerances {
            tol_zero: 10.0,
            ..Tolerances::default()
        };
        assert!(matches!(
            FrameFamily::new(&m, &tol),
            Err(Error::ToleranceInconsistency { .. })
        ));
    }
}

use deficiency::bipartite::{
    assemble, conjecture_probe, deficiency_direct, deficiency_fibered, direct_sum, isomorphism,
    spectral_space, tensor_model, MeasureSpace,
};
use deficiency::frames::FrameFamily;
use deficiency::linalg::{principal_angles, CMatrix, Tolerances, C64};
use deficiency::operator::{
    deficiency_dim_at, deficiency_indices, deficiency_space, laplacian_interval, momentum_interval,
    symmetry_residual, OperatorModel, Sign,
};
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn hermitian(n: usize, seed: u64) -> OperatorModel {
    let a = CMatrix::from_fn(n, n, |i, j| {
        let x = ((i * 31 + j * 17) as u64 ^ seed) % 13;
        C64::new(x as f64 - 6.0, (i as f64 - j as f64) * 0.5)
    });
    OperatorModel::full_domain("h", &a + a.adjoint()).unwrap()
}

const PHI: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

#[test]
fn decoupled_copies_double_the_index() {
    let m = momentum_interval(30).unwrap();
    let b = assemble(&m, &MeasureSpace::uniform(&[0.0, 0.0]).unwrap()).unwrap();
    let direct = deficiency_direct(&b, Sign::Plus, &tol()).unwrap();
    assert_eq!(direct.len(), 2);
    let plus = deficiency_space(&m, Sign::Plus, &tol()).unwrap();
    let oracle = direct_sum(&[plus.clone(), plus]);
    assert!(max(&principal_angles(&direct, &oracle).unwrap()) <= 1e-8);
}

#[test]
fn real_shifts_keep_fibers_symmetric() {
    let m = momentum_interval(40).unwrap();
    let base = symmetry_residual(&m).absolute;
    for phi in [-1.0, 0.0, 1.0] {
        let shifted = m.shifted(phi);
        assert!(symmetry_residual(&shifted).absolute <= base + 1e-12 * (1.0 + phi.abs()));
    }
}

#[test]
fn hermitian_fiber_has_no_deficiency() {
    let b = assemble(&hermitian(4, 3), &MeasureSpace::uniform(&PHI).unwrap()).unwrap();
    assert!(deficiency_direct(&b, Sign::Plus, &tol()).unwrap().is_empty());
    let c = isomorphism(&b, Sign::Plus, &tol()).unwrap();
    assert!(c.passed());
    assert_eq!(c.dimension, 0);
}

#[test]
fn fibers_match_shifted_deficiency_spaces() {
    let m = momentum_interval(60).unwrap();
    let b = assemble(&m, &MeasureSpace::uniform(&PHI).unwrap()).unwrap();
    let fibers = deficiency_fibered(&b, Sign::Plus, &tol()).unwrap();
    assert!(fibers.iter().all(|f| f.len() == 1));
    let plus = deficiency_space(&m, Sign::Plus, &tol()).unwrap();
    assert!(max(&principal_angles(&fibers[2], &plus).unwrap()) <= 1e-8);
    // φ = 1 is the σ frame at z = 1 + i
    let fam = FrameFamily::new(&m, &tol()).unwrap();
    let at = fam.at(C64::new(1.0, 1.0)).unwrap();
    assert!(max(&principal_angles(&fibers[3], &at.selected_frame).unwrap()) <= 1e-8);
    for (i, &phi) in PHI.iter().enumerate() {
        // fiber i is R(S + φ_i + i)⊥ = R(S − z)⊥ at z = −φ_i − i
        let z = C64::new(-phi, -1.0);
        assert_eq!(deficiency_dim_at(&m, z, &tol()).unwrap(), fibers[i].len());
    }
}

#[test]
fn momentum_isomorphism_certificates_pass() {
    let m = momentum_interval(60).unwrap();
    for mu in [[1.0; 5], [1.0, 2.0, 0.5, 1.0, 3.0]] {
        let space = MeasureSpace::from_parts(PHI.to_vec(), mu.to_vec()).unwrap();
        let b = assemble(&m, &space).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let c = isomorphism(&b, sign, &tol()).unwrap();
            assert!(c.passed(), "{:?}", c.diagnostics);
            assert_eq!(c.dimension, 5);
            assert!(c.unitarity_residual <= 1e-9);
            assert!(c.max_oracle_angle() <= 1e-8);
        }
    }
}

#[test]
fn laplacian_isomorphism_has_dimension_two_m() {
    let m = laplacian_interval(40).unwrap();
    let b = assemble(&m, &MeasureSpace::new(&[(-0.5, 1.0), (0.25, 2.0), (3.0, 0.1)]).unwrap()).unwrap();
    let c = isomorphism(&b, Sign::Plus, &tol()).unwrap();
    assert!(c.passed(), "{:?}", c.diagnostics);
    assert_eq!(c.dimension, 6);
    assert_eq!(c.map.nrows(), 6);
}

#[test]
fn single_fiber_map_is_a_phase() {
    let m = momentum_interval(40).unwrap();
    let b = assemble(&m, &MeasureSpace::uniform(&[0.0]).unwrap()).unwrap();
    let c = isomorphism(&b, Sign::Plus, &tol()).unwrap();
    assert_eq!(c.dimension, 1);
    assert!((c.map[(0, 0)].norm() - 1.0).abs() <= 1e-12);
}

#[test]
fn weights_change_only_the_embedding() {
    let m = momentum_interval(30).unwrap();
    let uniform = assemble(&m, &MeasureSpace::uniform(&PHI).unwrap()).unwrap();
    let weighted = assemble(&m, &MeasureSpace::from_parts(PHI.to_vec(), vec![1.0, 2.0, 0.5, 1.0, 3.0]).unwrap()).unwrap();
    let a = deficiency_fibered(&uniform, Sign::Plus, &tol()).unwrap();
    let b = deficiency_fibered(&weighted, Sign::Plus, &tol()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(max(&principal_angles(x, y).unwrap()) <= 1e-8);
    }
    let da = deficiency_direct(&uniform, Sign::Plus, &tol()).unwrap();
    let db = deficiency_direct(&weighted, Sign::Plus, &tol()).unwrap();
    assert_eq!(da.len(), db.len());
    // Rescaled coordinates agree; original ones differ by 1/√μ_i per block.
    assert!(max(&principal_angles(&da, &db).unwrap()) <= 1e-8);
    let v = weighted.unscale(&db.vector(0));
    assert!((weighted.weighted_inner(&v, &v).re - 1.0).abs() <= 1e-12);
}

#[test]
fn probe_with_hermitian_side_matches_d_a_times_n_b() {
    let a = momentum_interval(16).unwrap();
    let h = hermitian(5, 9);
    let r = conjecture_probe(&a, &h, &tol()).unwrap();
    assert_eq!(r.d_ab, r.d_a_n_b);
    assert_eq!(r.d_b, (0, 0));
    assert_eq!(r.conjectured, r.d_a_n_b);
    // Cross-check through the spectral decomposition of the hermitian side.
    let space = spectral_space(&h, &tol()).unwrap();
    let b = assemble(&a, &space).unwrap();
    assert_eq!(deficiency_direct(&b, Sign::Plus, &tol()).unwrap().len(), r.d_ab.0);
}

#[test]
fn probe_with_two_hermitian_sides_is_zero() {
    let r = conjecture_probe(&hermitian(3, 1), &hermitian(4, 2), &tol()).unwrap();
    assert_eq!(r.d_ab, (0, 0));
    assert_eq!(r.conjectured, (0, 0));
}

#[test]
fn probe_with_two_momentum_sides_reports_numbers() {
    let a = momentum_interval(24).unwrap();
    let r = conjecture_probe(&a, &a, &tol()).unwrap();
    assert_eq!((r.n_a, r.n_b), (23, 23));
    assert_eq!(r.d_a, (1, 1));
    assert_eq!(r.conjectured, (46, 46));
    // The direct numbers are whatever the SVD finds; both signs agree.
    assert_eq!(r.d_ab.0, r.d_ab.1);
    let t = tensor_model(&a, &a).unwrap();
    assert_eq!(deficiency_indices(&t, &tol()).unwrap(), r.d_ab);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn direct_and_fibered_frames_agree(
        points in prop::collection::vec((-3.0f64..3.0, 0.1f64..4.0), 1..4),
    ) {
        let m = momentum_interval(16).unwrap();
        let b = assemble(&m, &MeasureSpace::new(&points).unwrap()).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let direct = deficiency_direct(&b, sign, &tol()).unwrap();
            let fibered = direct_sum(&deficiency_fibered(&b, sign, &tol()).unwrap());
            prop_assert_eq!(direct.len(), points.len());
            prop_assert!(max(&principal_angles(&direct, &fibered).unwrap()) <= 1e-8);
        }
    }

    #[test]
    fn constant_shift_moves_fibers(c in -2.0f64..2.0) {
        let m = momentum_interval(16).unwrap();
        let phi = [-1.0, 0.5];
        let shifted: Vec<f64> = phi.iter().map(|p| p + c).collect();
        let b = assemble(&m, &MeasureSpace::uniform(&shifted).unwrap()).unwrap();
        let fibers = deficiency_fibered(&b, Sign::Plus, &tol()).unwrap();
        for (i, p) in shifted.iter().enumerate() {
            let single = deficiency_space(&m.shifted(*p), Sign::Plus, &tol()).unwrap();
            prop_assert!(max(&principal_angles(&fibers[i], &single).unwrap()) <= 1e-8);
        }
    }
}

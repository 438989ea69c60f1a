use approx::assert_abs_diff_eq;
use formrep::harness::{run, ProblemSpec, RunMode, RunOptions};
use formrep::stability::{stability_operators, SgnChoice};
use formrep::{
    associate_general, gap_certificate_check, kernel_via_theorem, AssociateOptions, Involution,
    OffDiagonalProblem, SymMatrix, Tolerances,
};
use ndarray::{array, Array2};

fn diag(d: &[f64]) -> SymMatrix<f64> {
    SymMatrix::from_diag(d)
}

fn j2() -> Involution<f64> {
    Involution::diagonal(&[true, false]).unwrap()
}

#[test]
fn swap_example_reproduces_h() {
    // A^{1/2} H A^{1/2} with A = diag(2, 1/2) and H the swap: off-diagonal
    // entries sqrt(2 · 1/2) = 1.
    let a = diag(&[2.0, 0.5]);
    let h = SymMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
    let opts = AssociateOptions {
        force: true,
        ..Default::default()
    };
    let r = associate_general(&a, &h, &j2(), &opts).unwrap();
    assert!(!r.certified);
    assert_abs_diff_eq!(r.b.into_array(), h.as_array().clone(), epsilon = 1e-15);
    assert!(associate_general(&a, &h, &j2(), &AssociateOptions::default()).is_err());
}

#[test]
fn scalar_blocks_give_explicit_certificate() {
    // A = I: H̃ = H/2 + J/2 = diag(3/4, -3/4), so c = 3/4 while the blocks of
    // H give α* = 1/2; B + J = diag(3/2, -3/2).
    let r = associate_general(&diag(&[1.0, 1.0]), &diag(&[0.5, -0.5]), &j2(), &AssociateOptions::default()).unwrap();
    assert_abs_diff_eq!(r.h_tilde.into_array(), Array2::from_diag(&array![0.75, -0.75]), epsilon = 1e-15);
    assert_abs_diff_eq!(r.c, 0.75, epsilon = 1e-15);
    assert_abs_diff_eq!(r.certificate.unwrap().alpha_star.unwrap(), 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(r.b_tilde.into_array(), Array2::from_diag(&array![1.5, -1.5]), epsilon = 1e-15);
}

#[test]
fn kernel_of_a_is_lifted_by_the_involution() {
    // A = diag(0, 1), H = diag(2, -3): B = diag(0, -3), H₀ = diag(0, -3/2),
    // H̃ = H₀ + diag(1, -1/2) = diag(1, -2), so c = 1 and B + J = diag(1, -4).
    let r = associate_general(&diag(&[0.0, 1.0]), &diag(&[2.0, -3.0]), &j2(), &AssociateOptions::default()).unwrap();
    assert_abs_diff_eq!(r.b.as_array().clone(), Array2::from_diag(&array![0.0, -3.0]), epsilon = 1e-15);
    assert_abs_diff_eq!(r.h0.as_array().clone(), Array2::from_diag(&array![0.0, -1.5]), epsilon = 1e-15);
    assert_abs_diff_eq!(r.h_tilde.as_array().clone(), Array2::from_diag(&array![1.0, -2.0]), epsilon = 1e-15);
    assert_abs_diff_eq!(r.c, 1.0, epsilon = 1e-15);
    let margin = gap_certificate_check(&r, &j2()).unwrap();
    assert_abs_diff_eq!(margin, 0.0, epsilon = 1e-15);
}

#[test]
fn stability_operators_for_definite_pair() {
    // A = I, B = diag(1/2, -1/2): sgn B = J, |B + sgn B| = diag(3/2, 3/2),
    // X = (A+I)^{-1/2} (3/2) (A+I)^{-1/2} = (3/4) I and Y = X⁻¹.
    let (ops, gap) = stability_operators(&diag(&[1.0, 1.0]), &diag(&[0.5, -0.5]), SgnChoice::PLUS, &Tolerances::default()).unwrap();
    assert_abs_diff_eq!(gap, 1.5, epsilon = 1e-15);
    assert_abs_diff_eq!(ops.sgn.into_array(), Array2::from_diag(&array![1.0, -1.0]), epsilon = 1e-15);
    assert_abs_diff_eq!(ops.x.into_array(), Array2::eye(2) * 0.75, epsilon = 1e-15);
    assert_abs_diff_eq!(ops.y.into_array(), Array2::eye(2) / 0.75, epsilon = 1e-14);
}

#[test]
fn offdiag_kernel_by_hand() {
    // A₊ = diag(0, 0), A₋ = diag(0), T = [[1], [0]]: Ker Tᵀ = span{e₂} and
    // Ker T = {0}, so Ker B = span{e₂}.
    let p = OffDiagonalProblem::new(&diag(&[0.0, 0.0]), &diag(&[0.0]), array![[1.0], [0.0]], &Tolerances::default()).unwrap();
    let k = kernel_via_theorem(&p, &Tolerances::default()).unwrap();
    assert_eq!(k.theorem_kernel.dim(), 1);
    assert_abs_diff_eq!(k.theorem_kernel.vectors()[[1, 0]].abs(), 1.0, epsilon = 1e-15);
    assert!(k.dims_match);
}

#[test]
fn offdiag_spec_through_the_runner() {
    let text = r#"{
        "kind": "offdiag",
        "matrices": {
            "A_plus": [["0", "0"], ["0", "1"]],
            "A_minus": [[0, 0], [0, 1]],
            "T": [[0, 0], [0, 1]]
        },
        "seed": 3
    }"#;
    let spec = ProblemSpec::from_json(text).unwrap();
    let opts = RunOptions {
        mode: RunMode::Kernel,
        ..Default::default()
    };
    let report = run(&spec, &opts).unwrap();
    assert!(report.passed, "{:?}", report.failed_checks().collect::<Vec<_>>());
    let k = report.kernel.unwrap();
    assert_eq!(k.theorem_dim, Some(2));
    assert_eq!(k.oracle_dim, 2);
}

#[test]
fn constant_family_certifies_everywhere() {
    let spec = ProblemSpec::from_json(r#"{"kind": "family", "family": {"name": "constant", "sizes": [1, 2, 3]}}"#).unwrap();
    let report = run(&spec, &RunOptions::default()).unwrap();
    assert!(report.passed);
    let f = report.family.unwrap();
    assert!(f.gap_search_outcomes.iter().all(|o| *o == Some(true)));
    assert!(f.norm_b.iter().all(|&b| (b - 1.0).abs() <= 1e-15));
}

//! Self-adjoint operators associated with sign-indefinite quadratic forms.
//!
//! Given `A ⪰ 0` and an invertible symmetric `H`, the form
//! `b[x,y] = ⟨A^{1/2}x, H A^{1/2}y⟩` is represented by
//! `B = A^{1/2} H A^{1/2}` once an involution `J` commuting with `A` splits
//! `H` into a positive and a negative part with a gap. The crate builds `B`
//! along two algebraic routes, certifies `(-c, c) ⊂ ρ(B + J)`, computes
//! kernels of off-diagonally perturbed operators blockwise, and audits the
//! domain-stability conditions.
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the `*64` aliases
//! below fix the scalar to `f64`, which is what [`harness`] uses.

pub mod general;
pub mod harness;
pub mod involution;
pub mod offdiag;
pub mod random;
pub mod scalar;
pub mod spectral;
pub mod stability;
pub mod tolerance;

pub use general::{
    associate_general, build_h_tilde, check_hypothesis1, first_rep_residual, gap_certificate_check,
    second_rep_residual, AssociateOptions, GapCertificate, GapFailure, PsdOperator, RepError,
    RepresentationResult,
};
pub use involution::{block_decompose, commutes, enumerate_diagonal_involutions, make_involution, Involution};
pub use offdiag::{assemble_offdiag, check_offdiagonal, hat_h, kernel_via_theorem, KernelReport, OffDiagonalProblem};
pub use random::ProbeSet;
pub use scalar::Real;
pub use spectral::{
    eig_sym, intersection, kernel_of, kernel_of_at_scale, nullspace, nullspace_at_scale, principal_angle,
    resolvent_identity_residual,
    SpectralDecomposition, SpectralError, SubspaceBasis, SymMatrix, TolPolicy,
};
pub use stability::{
    family_diagnostics, sgn_matrix, spectral_identity_residual, stability_suite, sufficient_b_definite,
    sufficient_c_semibounded, FamilyDiagnostics, FamilyKind, SgnChoice, StabilityReport,
};
pub use tolerance::Tolerances;

pub type SymMatrix64 = SymMatrix<f64>;
pub type SymMatrix32 = SymMatrix<f32>;
pub type Involution64 = Involution<f64>;
pub type Tolerances64 = Tolerances<f64>;
pub type SubspaceBasis64 = SubspaceBasis<f64>;
pub type GapCertificate64 = GapCertificate<f64>;
pub type RepresentationResult64 = RepresentationResult<f64>;
pub type OffDiagonalProblem64 = OffDiagonalProblem<f64>;
pub type KernelReport64 = KernelReport<f64>;
pub type StabilityReport64 = StabilityReport<f64>;
pub type FamilyDiagnostics64 = FamilyDiagnostics<f64>;

//! Operators associated with forms `b[x,y] = ⟨A^{1/2}x, H A^{1/2}y⟩` where
//! `A ⪰ 0` and `H` is invertible, under the gap condition
//! `P H P ⪰ αP`, `P⊥ H P⊥ ⪯ -αP⊥` for an involution `J` commuting with `A`.
//!
//! The construction shifts the form by `J`: with
//! `H̃ = A^{1/2}(A+I)^{-1/2} H A^{1/2}(A+I)^{-1/2} + (A+I)^{-1} J`
//! the shifted operator is `B̃ = (A+I)^{1/2} H̃ (A+I)^{1/2}` and
//! `B = B̃ - J = A^{1/2} H A^{1/2}`. Both routes are computed and compared.

use ndarray::{Array1, ArrayView1};
use thiserror::Error;

use crate::involution::{block_decompose, commutes, Involution, InvolutionError};
use crate::random::ProbeSet;
use crate::scalar::Real;
use crate::spectral::{spectral_norm, SpectralDecomposition, SpectralError, SymMatrix};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepError {
    #[error("A is not positive semidefinite: min eigenvalue {min_eigenvalue:e} below -{tol:e}")]
    NotPsd { min_eigenvalue: f64, tol: f64 },
    #[error("H singular: min |eigenvalue| {min_abs_eigenvalue:e} <= {tol:e}")]
    SingularH { min_abs_eigenvalue: f64, tol: f64 },
    #[error("J does not commute with A: ‖JA - AJ‖ = {residual:e} exceeds {bound:e}")]
    NotCommuting { residual: f64, bound: f64 },
    #[error("gap condition refused ({failure}): min eig H₊ = {lambda_min_plus:e}, max eig H₋ = {lambda_max_minus:e}")]
    HypothesisRefused {
        failure: GapFailure,
        lambda_min_plus: f64,
        lambda_max_minus: f64,
    },
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("internal consistency breach in {what}: {residual:e} exceeds {bound:e}")]
    Inconsistent {
        what: &'static str,
        residual: f64,
        bound: f64,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Involution(#[from] InvolutionError),
}

impl RepError {
    /// `false` only for internal consistency breaches; everything else is a
    /// property of the supplied data.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, RepError::Inconsistent { .. })
    }
}

/// Which half of the gap condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapFailure {
    /// `P H P ⪰ αP` fails for every `α > 0`.
    PlusBlock,
    /// `P⊥ H P⊥ ⪯ -αP⊥` fails for every `α > 0`.
    MinusBlock,
    Both,
}

impl std::fmt::Display for GapFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GapFailure::PlusBlock => "plus block not positive definite",
            GapFailure::MinusBlock => "minus block not negative definite",
            GapFailure::Both => "neither block definite",
        })
    }
}

/// Outcome of the gap check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCertificate<T: Real> {
    /// `min(1, λ_min(H₊), -λ_max(H₋))` when satisfied.
    pub alpha_star: Option<T>,
    /// `min(λ_min(H₊), -λ_max(H₋))` without the cap.
    pub uncapped: T,
    pub lambda_min_plus: T,
    pub lambda_max_minus: T,
    pub satisfied: bool,
    pub failure: Option<GapFailure>,
}

impl<T: Real> GapCertificate<T> {
    pub fn from_blocks(lambda_min_plus: T, lambda_max_minus: T) -> Self {
        let uncapped = lambda_min_plus.min(-lambda_max_minus);
        let satisfied = uncapped > T::zero();
        let failure = match (lambda_min_plus > T::zero(), lambda_max_minus < T::zero()) {
            (true, true) => None,
            (false, true) => Some(GapFailure::PlusBlock),
            (true, false) => Some(GapFailure::MinusBlock),
            (false, false) => Some(GapFailure::Both),
        };
        Self {
            alpha_star: satisfied.then(|| uncapped.min(T::one())),
            uncapped,
            lambda_min_plus,
            lambda_max_minus,
            satisfied,
            failure,
        }
    }

    fn refusal(&self) -> RepError {
        RepError::HypothesisRefused {
            failure: self.failure.unwrap_or(GapFailure::Both),
            lambda_min_plus: self.lambda_min_plus.to_f64_lossy(),
            lambda_max_minus: self.lambda_max_minus.to_f64_lossy(),
        }
    }
}

/// A non-negative operator with its (clamped) spectral decomposition, and
/// the functions of it the constructions need.
#[derive(Debug, Clone)]
pub struct PsdOperator<T: Real> {
    matrix: SymMatrix<T>,
    dec: SpectralDecomposition<T>,
    clamp: T,
}

impl<T: Real> PsdOperator<T> {
    /// Rejects eigenvalues below `-τ`; eigenvalues in `[-τ, τ]` are set to
    /// 0, so that functions like the square root see an exact kernel.
    pub fn new(a: &SymMatrix<T>, tol: &Tolerances<T>) -> Result<Self, RepError> {
        let mut dec = a.eig()?;
        let tau = tol.zero_threshold(a.dim(), dec.source_norm);
        let min = dec.min_eig();
        if min < -tau {
            return Err(RepError::NotPsd {
                min_eigenvalue: min.to_f64_lossy(),
                tol: tau.to_f64_lossy(),
            });
        }
        let mut clamp = T::zero();
        dec.eigenvalues.mapv_inplace(|x| {
            if x.abs() <= tau {
                clamp = clamp.max(x.abs());
                T::zero()
            } else {
                x
            }
        });
        let matrix = if clamp > T::zero() {
            log::debug!("zeroed PSD eigenvalues up to {:e}", clamp.to_f64_lossy());
            dec.reconstruct()
        } else {
            a.clone()
        };
        Ok(Self { matrix, dec, clamp })
    }

    pub fn matrix(&self) -> &SymMatrix<T> {
        &self.matrix
    }

    pub fn decomposition(&self) -> &SpectralDecomposition<T> {
        &self.dec
    }

    /// Largest eigenvalue magnitude that was set to zero (0 if none).
    pub fn clamp_magnitude(&self) -> T {
        self.clamp
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn norm(&self) -> T {
        self.dec.source_norm
    }

    pub fn min_eig(&self) -> T {
        self.dec.min_eig()
    }

    pub fn func<F: Fn(T) -> T>(&self, f: F) -> SymMatrix<T> {
        self.dec.synthesize(&self.dec.eigenvalues.mapv(f))
    }

    /// `A^{1/2}`
    pub fn sqrt(&self) -> SymMatrix<T> {
        self.func(|x| x.sqrt())
    }

    /// `(A+I)^{1/2}`
    pub fn shifted_sqrt(&self) -> SymMatrix<T> {
        self.func(|x| (x + T::one()).sqrt())
    }

    /// `(A+I)^{-1/2}`
    pub fn shifted_inv_sqrt(&self) -> SymMatrix<T> {
        self.func(|x| T::one() / (x + T::one()).sqrt())
    }

    /// `(A+I)^{-1}`
    pub fn shifted_inv(&self) -> SymMatrix<T> {
        self.func(|x| T::one() / (x + T::one()))
    }

    /// `A^{1/2}(A+I)^{-1/2}`
    pub fn ratio(&self) -> SymMatrix<T> {
        self.func(|x| (x / (x + T::one())).sqrt())
    }

    /// `cond(A) = λ_max / λ_min` (infinite when singular).
    pub fn condition_number(&self) -> T {
        let min = self.min_eig();
        if min > T::zero() {
            self.dec.max_eig() / min
        } else {
            T::infinity()
        }
    }
}

/// A sesquilinear form evaluated on probe vectors.
pub trait SesquilinearForm<T: Real> {
    fn dim(&self) -> usize;
    fn eval(&self, x: ArrayView1<T>, y: ArrayView1<T>) -> T;
    /// Normalisation applied to residuals.
    fn scale(&self) -> T;
}

/// `b[x,y] = ⟨A^{1/2}x, H A^{1/2}y⟩`.
#[derive(Debug, Clone)]
pub struct ProductForm<T: Real> {
    sqrt_a: SymMatrix<T>,
    h: SymMatrix<T>,
    scale: T,
}

impl<T: Real> ProductForm<T> {
    pub fn new(a: &PsdOperator<T>, h: &SymMatrix<T>) -> Result<Self, RepError> {
        let scale = (T::one() + a.norm()) * h.op_norm()?;
        Ok(Self {
            sqrt_a: a.sqrt(),
            h: h.clone(),
            scale,
        })
    }
}

impl<T: Real> SesquilinearForm<T> for ProductForm<T> {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn eval(&self, x: ArrayView1<T>, y: ArrayView1<T>) -> T {
        let ax = self.sqrt_a.as_array().dot(&x);
        let ay = self.sqrt_a.as_array().dot(&y);
        ax.dot(&self.h.as_array().dot(&ay))
    }

    fn scale(&self) -> T {
        self.scale
    }
}

/// `max |b[x,y] - ⟨x, By⟩| / (‖x‖‖y‖·scale)` over the probes.
pub fn first_rep_residual_for<T: Real, F: SesquilinearForm<T>>(
    form: &F,
    b: &SymMatrix<T>,
    probes: &ProbeSet<T>,
) -> T {
    max_normalised(form, probes, |x, y| x.dot(&b.as_array().dot(&y)))
}

/// Same as [`first_rep_residual_for`] against
/// `⟨|B|^{1/2}x, sgn(B)|B|^{1/2}y⟩`, with `sign` applied to the eigenvalues
/// of `B`.
pub fn second_rep_residual_with<T, F, S>(
    form: &F,
    b: &SymMatrix<T>,
    probes: &ProbeSet<T>,
    sign: S,
) -> Result<T, RepError>
where
    T: Real,
    F: SesquilinearForm<T>,
    S: Fn(T) -> T,
{
    let dec = b.eig()?;
    let root = dec.apply_fn(|x| x.abs().sqrt())?;
    let sgn = dec.apply_fn(sign)?;
    let middle = root.matmul(&sgn).dot(root.as_array());
    Ok(max_normalised(form, probes, |x, y| x.dot(&middle.dot(&y))))
}

/// Second representation residual with `sign(0) = 0`; eigenvalues within
/// the kernel threshold count as zero.
pub fn second_rep_residual_for<T: Real, F: SesquilinearForm<T>>(
    form: &F,
    b: &SymMatrix<T>,
    probes: &ProbeSet<T>,
    tol: &Tolerances<T>,
) -> Result<T, RepError> {
    let tau = tol.zero_threshold(b.dim(), b.op_norm()?);
    second_rep_residual_with(form, b, probes, |x| sign_with_zero(x, tau))
}

pub(crate) fn sign_with_zero<T: Real>(x: T, tau: T) -> T {
    if x.abs() <= tau {
        T::zero()
    } else {
        x.signum()
    }
}

fn max_normalised<T, F, G>(form: &F, probes: &ProbeSet<T>, rhs: G) -> T
where
    T: Real,
    F: SesquilinearForm<T>,
    G: Fn(ArrayView1<T>, ArrayView1<T>) -> T,
{
    let scale = form.scale();
    let scale = if scale > T::zero() { scale } else { T::one() };
    probes
        .pairs
        .iter()
        .filter_map(|(x, y)| {
            let nx = x.dot(x).sqrt();
            let ny = y.dot(y).sqrt();
            if nx == T::zero() || ny == T::zero() {
                return None;
            }
            let lhs = form.eval(x.view(), y.view());
            let r = rhs(x.view(), y.view());
            Some((lhs - r).abs() / (nx * ny * scale))
        })
        .fold(T::zero(), |acc, r| acc.max(r))
}

/// First representation residual for `b[x,y] = ⟨A^{1/2}x, H A^{1/2}y⟩`,
/// normalised by `(1+‖A‖)‖H‖`.
pub fn first_rep_residual<T: Real>(
    a: &SymMatrix<T>,
    h: &SymMatrix<T>,
    b: &SymMatrix<T>,
    probes: &ProbeSet<T>,
) -> Result<T, RepError> {
    let psd = PsdOperator::new(a, &Tolerances::default())?;
    let form = ProductForm::new(&psd, h)?;
    Ok(first_rep_residual_for(&form, b, probes))
}

/// Second representation residual for the same form, `sign(0) = 0`.
pub fn second_rep_residual<T: Real>(
    a: &SymMatrix<T>,
    h: &SymMatrix<T>,
    b: &SymMatrix<T>,
    probes: &ProbeSet<T>,
) -> Result<T, RepError> {
    let tol = Tolerances::default();
    let psd = PsdOperator::new(a, &tol)?;
    let form = ProductForm::new(&psd, h)?;
    second_rep_residual_for(&form, b, probes, &tol)
}

fn check_dims<T: Real>(a: &SymMatrix<T>, h: &SymMatrix<T>, j: &Involution<T>) -> Result<(), RepError> {
    let n = a.dim();
    if h.dim() != n {
        return Err(RepError::DimensionMismatch {
            what: "H",
            expected: n,
            found: h.dim(),
        });
    }
    if j.dim() != n {
        return Err(RepError::DimensionMismatch {
            what: "J",
            expected: n,
            found: j.dim(),
        });
    }
    Ok(())
}

/// Verifies the gap condition for `(A, H, J)`.
///
/// Errors (as opposed to an unsatisfied certificate) when `A` is not PSD,
/// `H` is singular, or `J` does not commute with `A`.
pub fn check_hypothesis1<T: Real>(
    a: &SymMatrix<T>,
    h: &SymMatrix<T>,
    j: &Involution<T>,
    tol: &Tolerances<T>,
) -> Result<GapCertificate<T>, RepError> {
    check_dims(a, h, j)?;
    let psd = PsdOperator::new(a, tol)?;
    check_invertible(h, tol)?;
    check_commutes(j, psd.matrix(), tol)?;
    Ok(gap_blocks(h, j)?)
}

pub(crate) fn gap_blocks<T: Real>(
    h: &SymMatrix<T>,
    j: &Involution<T>,
) -> Result<GapCertificate<T>, RepError> {
    let blocks = block_decompose(h, j)?;
    let lmp = blocks.plus.eig()?.min_eig();
    let lmm = blocks.minus.eig()?.max_eig();
    Ok(GapCertificate::from_blocks(lmp, lmm))
}

pub(crate) fn check_invertible<T: Real>(h: &SymMatrix<T>, tol: &Tolerances<T>) -> Result<(), RepError> {
    let dec = h.eig()?;
    let tau = tol.zero_threshold(h.dim(), dec.source_norm);
    let m = dec.min_abs_eig();
    if !(m > tau) {
        return Err(RepError::SingularH {
            min_abs_eigenvalue: m.to_f64_lossy(),
            tol: tau.to_f64_lossy(),
        });
    }
    Ok(())
}

pub(crate) fn check_commutes<T: Real>(
    j: &Involution<T>,
    a: &SymMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<(), RepError> {
    let c = commutes(j, a, tol.commute)?;
    if !c.commutes {
        return Err(RepError::NotCommuting {
            residual: c.residual.to_f64_lossy(),
            bound: (tol.commute * a.op_norm()?).to_f64_lossy(),
        });
    }
    Ok(())
}

/// `H₀ = R H R` with `R = A^{1/2}(A+I)^{-1/2}`, and `H̃ = H₀ + (A+I)^{-1}J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedSymbol<T: Real> {
    pub h0: SymMatrix<T>,
    pub h_tilde: SymMatrix<T>,
}

pub fn build_h_tilde<T: Real>(
    a: &SymMatrix<T>,
    h: &SymMatrix<T>,
    j: &Involution<T>,
    tol: &Tolerances<T>,
) -> Result<ShiftedSymbol<T>, RepError> {
    check_dims(a, h, j)?;
    let psd = PsdOperator::new(a, tol)?;
    build_h_tilde_from(&psd, h, j, tol)
}

pub fn build_h_tilde_from<T: Real>(
    a: &PsdOperator<T>,
    h: &SymMatrix<T>,
    j: &Involution<T>,
    tol: &Tolerances<T>,
) -> Result<ShiftedSymbol<T>, RepError> {
    let h0 = h.sandwich(&a.ratio());
    let shift = a.shifted_inv().matmul(j.matrix());
    let asym = spectral_norm((&shift - &shift.t()).view());
    if !(asym <= tol.commute) {
        return Err(RepError::Inconsistent {
            what: "(A+I)^-1 J symmetry",
            residual: asym.to_f64_lossy(),
            bound: tol.commute.to_f64_lossy(),
        });
    }
    let h_tilde = h0.add(&SymMatrix::symmetrize(shift));
    Ok(ShiftedSymbol { h0, h_tilde })
}

/// The operator associated with a form, both algebraic routes, and the
/// representation residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationResult<T: Real> {
    pub b: SymMatrix<T>,
    /// `B + J`
    pub b_tilde: SymMatrix<T>,
    pub h0: SymMatrix<T>,
    pub h_tilde: SymMatrix<T>,
    /// `‖H̃⁻¹‖⁻¹`
    pub c: T,
    pub first_rep_residual: T,
    pub second_rep_residual: T,
    /// `‖(A+I)^{1/2} H̃ (A+I)^{1/2} - J - B‖`, unnormalised.
    pub consistency_residual: T,
    /// Normalisation used for residuals and consistency.
    pub scale: T,
    /// `None` when the gap check was bypassed or not applicable.
    pub certificate: Option<GapCertificate<T>>,
    /// `false` when built with `force` on an unsatisfied gap condition.
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociateOptions<T: Real> {
    /// Build `B` even when the gap condition is not satisfied.
    pub force: bool,
    pub probe_seed: u64,
    pub tolerances: Tolerances<T>,
}

impl<T: Real> Default for AssociateOptions<T> {
    fn default() -> Self {
        Self {
            force: false,
            probe_seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

/// Builds `B = A^{1/2} H A^{1/2}` and cross-checks it against
/// `(A+I)^{1/2} H̃ (A+I)^{1/2} - J`.
pub fn associate_general<T: Real>(
    a: &SymMatrix<T>,
    h: &SymMatrix<T>,
    j: &Involution<T>,
    opts: &AssociateOptions<T>,
) -> Result<RepresentationResult<T>, RepError> {
    let tol = &opts.tolerances;
    let certificate = check_hypothesis1(a, h, j, tol)?;
    if !certificate.satisfied && !opts.force {
        return Err(certificate.refusal());
    }
    let psd = PsdOperator::new(a, tol)?;
    let b = h.sandwich(&psd.sqrt());
    let symbol = build_h_tilde_from(&psd, h, j, tol)?;
    let via_shift = symbol.h_tilde.sandwich(&psd.shifted_sqrt());
    let b_tilde = b.add(j.matrix());
    let form = ProductForm::new(&psd, h)?;
    let scale = form.scale();

    let consistency_residual = spectral_norm((via_shift.as_array() - b_tilde.as_array()).view());
    let bound = tol.consistency * scale;
    if !(consistency_residual <= bound) {
        return Err(RepError::Inconsistent {
            what: "B = (A+I)^1/2 H~ (A+I)^1/2 - J",
            residual: consistency_residual.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
        });
    }
    let c = symbol.h_tilde.min_abs_eig()?;
    if certificate.satisfied && !(c > T::zero()) {
        return Err(RepError::Inconsistent {
            what: "H~ invertibility",
            residual: c.to_f64_lossy(),
            bound: 0.0,
        });
    }

    let probes = ProbeSet::standard(a.dim(), opts.probe_seed);
    let first_rep_residual = first_rep_residual_for(&form, &b, &probes);
    let second_rep_residual = second_rep_residual_for(&form, &b, &probes, tol)?;
    Ok(RepresentationResult {
        b,
        b_tilde,
        h0: symbol.h0,
        h_tilde: symbol.h_tilde,
        c,
        first_rep_residual,
        second_rep_residual,
        consistency_residual,
        scale,
        certified: certificate.satisfied,
        certificate: Some(certificate),
    })
}

/// `min|σ(B + J)| - c`; non-negative (up to rounding) whenever `H̃` was
/// built under the gap condition.
pub fn gap_certificate_check<T: Real>(
    result: &RepresentationResult<T>,
    j: &Involution<T>,
) -> Result<T, RepError> {
    let shifted = result.b.add(j.matrix());
    Ok(shifted.min_abs_eig()? - result.c)
}

/// `(e_i, e_i)`-style probe pair helper.
pub fn probe_pair<T: Real>(x: Array1<T>, y: Array1<T>) -> ProbeSet<T> {
    ProbeSet::from_pairs(vec![(x, y)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn sym(a: Array2<f64>) -> SymMatrix<f64> {
        SymMatrix::new(a).unwrap()
    }

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn std_j() -> Involution<f64> {
        Involution::standard(1, 1).unwrap()
    }

    #[test]
    fn certificate_capped_at_one() {
        let h = sym(array![[2.0, 0.5], [0.5, -3.0]]);
        let a = SymMatrix::from_diag(&[1.0, 2.0]);
        let c = check_hypothesis1(&a, &h, &std_j(), &tol()).unwrap();
        assert!(c.satisfied);
        assert_eq!(c.alpha_star, Some(1.0));
        assert_eq!(c.lambda_min_plus, 2.0);
        assert_eq!(c.lambda_max_minus, -3.0);
        assert_eq!(c.uncapped, 2.0);
    }

    #[test]
    fn non_extension_pair_fails_for_both_involutions() {
        let a = SymMatrix::from_diag(&[2.0, 0.5]);
        let h = sym(array![[0.0, 1.0], [1.0, 0.0]]);
        for signs in [[true, false], [false, true]] {
            let j = Involution::diagonal(&signs).unwrap();
            let c = check_hypothesis1(&a, &h, &j, &tol()).unwrap();
            assert!(!c.satisfied);
            assert_eq!(c.lambda_min_plus, 0.0);
            assert_eq!(c.alpha_star, None);
        }
    }

    #[test]
    fn h_equal_j_gives_alpha_one() {
        let j = Involution::diagonal(&[true, false, true]).unwrap();
        let a = SymMatrix::from_diag(&[0.0, 3.0, 1.0]);
        let c = check_hypothesis1(&a, j.matrix(), &j, &tol()).unwrap();
        assert_eq!(c.alpha_star, Some(1.0));
    }

    #[test]
    fn hypothesis_errors_are_distinct() {
        let j = std_j();
        let h = j.matrix().clone();
        let not_psd = SymMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(
            check_hypothesis1(&not_psd, &h, &j, &tol()),
            Err(RepError::NotPsd { .. })
        ));
        let singular = SymMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(
            check_hypothesis1(&SymMatrix::identity(2), &singular, &j, &tol()),
            Err(RepError::SingularH { .. })
        ));
        let swap = Involution::new(sym(array![[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert!(matches!(
            check_hypothesis1(&SymMatrix::from_diag(&[2.0, 0.5]), &h, &swap, &tol()),
            Err(RepError::NotCommuting { .. })
        ));
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clamped() {
        let a = SymMatrix::from_diag(&[1.0, -1e-17]);
        let psd = PsdOperator::new(&a, &tol()).unwrap();
        assert_eq!(psd.clamp_magnitude(), 1e-17);
        assert_eq!(psd.min_eig(), 0.0);
    }

    #[test]
    fn tiny_positive_eigenvalue_gives_exact_kernel_to_sqrt() {
        let a = SymMatrix::from_diag(&[2.0, 3e-16]);
        let psd = PsdOperator::new(&a, &tol()).unwrap();
        assert_eq!(psd.sqrt().get(1, 1), 0.0);
        assert_eq!(psd.clamp_magnitude(), 3e-16);
        assert_eq!(psd.shifted_sqrt().get(1, 1), 1.0);
    }

    #[test]
    fn h_tilde_for_zero_a_is_j() {
        let j = std_j();
        let h = sym(array![[2.0, 0.7], [0.7, -1.5]]);
        let s = build_h_tilde(&SymMatrix::zeros(2), &h, &j, &tol()).unwrap();
        assert!(s.h0.as_array().iter().all(|&x| x == 0.0));
        assert_eq!(s.h_tilde.as_array(), j.matrix().as_array());
    }

    #[test]
    fn h_tilde_for_identity_a() {
        let j = std_j();
        let h = sym(array![[2.0, 0.7], [0.7, -1.5]]);
        let s = build_h_tilde(&SymMatrix::identity(2), &h, &j, &tol()).unwrap();
        let expected = (h.as_array() + j.matrix().as_array()) * 0.5;
        assert_abs_diff_eq!(s.h_tilde.into_array(), expected, epsilon = 1e-15);
    }

    #[test]
    fn associate_identity_a_gives_h() {
        let j = std_j();
        let h = sym(array![[2.0, 0.7], [0.7, -1.5]]);
        let r = associate_general(&SymMatrix::identity(2), &h, &j, &AssociateOptions::default()).unwrap();
        assert_abs_diff_eq!(r.b.as_array().clone(), h.as_array().clone(), epsilon = 1e-15);
        assert!(r.first_rep_residual <= 1e-15);
        assert!(r.second_rep_residual <= 1e-14);
        assert!(r.certified);
    }

    #[test]
    fn forced_counterexample_block() {
        let a = SymMatrix::from_diag(&[2.0, 0.5]);
        let h = sym(array![[0.0, 1.0], [1.0, 0.0]]);
        let j = std_j();
        let refused = associate_general(&a, &h, &j, &AssociateOptions::default()).unwrap_err();
        assert!(matches!(
            refused,
            RepError::HypothesisRefused { failure: GapFailure::Both, .. }
        ));
        let opts = AssociateOptions {
            force: true,
            ..Default::default()
        };
        let r = associate_general(&a, &h, &j, &opts).unwrap();
        assert!(!r.certified);
        assert_abs_diff_eq!(r.b.as_array().clone(), h.as_array().clone(), epsilon = 1e-15);
    }

    #[test]
    fn gap_margin_trivial_case() {
        let j = std_j();
        let r = associate_general(&SymMatrix::zeros(2), j.matrix(), &j, &AssociateOptions::default()).unwrap();
        assert!(r.b.as_array().iter().all(|&x| x == 0.0));
        assert_eq!(r.c, 1.0);
        assert_eq!(gap_certificate_check(&r, &j).unwrap(), 0.0);
    }

    #[test]
    fn gap_margin_uncoupled_case() {
        // T = 0: B + J = J(A + I), min |eig| = 1 + min eig(A).
        let j = Involution::diagonal(&[true, false, true]).unwrap();
        let a = SymMatrix::from_diag(&[0.5, 2.0, 3.0]);
        let h = SymMatrix::from_diag(&[2.0, -1.5, 4.0]);
        let r = associate_general(&a, &h, &j, &AssociateOptions::default()).unwrap();
        let margin = gap_certificate_check(&r, &j).unwrap();
        let min_abs = r.b_tilde.min_abs_eig().unwrap();
        assert!(min_abs >= 1.0 + 0.5 * 1.0 - 1e-14);
        assert_abs_diff_eq!(margin, min_abs - r.c, epsilon = 1e-15);
        assert!(margin >= 0.0);
    }

    #[test]
    fn first_residual_detects_perturbed_b() {
        let j = std_j();
        let a = SymMatrix::from_diag(&[1.0, 2.0]);
        let h = sym(array![[2.0, 0.5], [0.5, -3.0]]);
        let r = associate_general(&a, &h, &j, &AssociateOptions::default()).unwrap();
        let probes = ProbeSet::standard(2, 1);
        let broken = r.b.add(&SymMatrix::identity(2).scale(0.1));
        let res = first_rep_residual(&a, &h, &broken, &probes).unwrap();
        assert!(res >= 0.1 / r.scale - 1e-12);
    }

    #[test]
    fn residuals_vanish_on_kernel_of_a() {
        let a = SymMatrix::from_diag(&[0.0, 2.0]);
        let h = sym(array![[1.0, 0.3], [0.3, -1.0]]);
        let j = std_j();
        let r = associate_general(&a, &h, &j, &AssociateOptions::default()).unwrap();
        let e0 = array![1.0, 0.0];
        let p = probe_pair(e0.clone(), e0);
        assert_eq!(first_rep_residual(&a, &h, &r.b, &p).unwrap(), 0.0);
    }

    #[test]
    fn second_rep_on_diagonal_b() {
        let a = SymMatrix::from_diag(&[2.0, 3.0, 0.0]);
        let h = SymMatrix::from_diag(&[1.0, -1.0, 1.0]);
        let b = SymMatrix::from_diag(&[2.0, -3.0, 0.0]);
        let probes = ProbeSet::standard(3, 5);
        assert!(second_rep_residual(&a, &h, &b, &probes).unwrap() <= 1e-15);
    }

    #[test]
    fn second_rep_detects_sign_misuse() {
        let a = SymMatrix::from_diag(&[2.0, 3.0]);
        let h = SymMatrix::from_diag(&[1.0, -1.0]);
        let b = SymMatrix::from_diag(&[2.0, -3.0]);
        let psd = PsdOperator::new(&a, &tol()).unwrap();
        let form = ProductForm::new(&psd, &h).unwrap();
        let probes = ProbeSet::standard(2, 5);
        let bad = second_rep_residual_with(&form, &b, &probes, |_| 1.0).unwrap();
        // (e₂, e₂): b = -3 while the misused sign gives +3.
        assert!(bad >= 6.0 / form.scale() - 1e-12);
    }
}

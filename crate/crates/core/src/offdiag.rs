//! Off-diagonal perturbations: `b = a[·, J·] + v` with
//! `v[x,y] = ⟨S(A+I)^{1/2}x, (A+I)^{1/2}y⟩`, `S = [[0, T], [Tᵀ, 0]]`.
//!
//! Here `H̃ = J + S = [[I, T], [Tᵀ, -I]]`, and the kernel of the associated
//! operator splits as `(Ker A₊ ∩ 𝔏₊) ⊕ (Ker A₋ ∩ 𝔏₋)` with
//! `𝔏₊ = (A₊+I)^{-1/2} Ker Tᵀ` and `𝔏₋ = (A₋+I)^{-1/2} Ker T`.

use ndarray::{s, Array2, ArrayView1};

use crate::general::{
    first_rep_residual_for, second_rep_residual_for, PsdOperator, RepError,
    RepresentationResult, SesquilinearForm,
};
use crate::involution::Involution;
use crate::random::ProbeSet;
use crate::scalar::Real;
use crate::spectral::{
    intersection, kernel_of_at_scale, nullspace_at_scale, principal_angle, spectral_norm, SubspaceBasis,
    SymMatrix,
};
use crate::tolerance::Tolerances;

/// `A₊ ⊕ A₋` with off-diagonal coupling `T`.
#[derive(Debug, Clone)]
pub struct OffDiagonalProblem<T: Real> {
    a_plus: PsdOperator<T>,
    a_minus: PsdOperator<T>,
    a: PsdOperator<T>,
    t: Array2<T>,
    beta: T,
    j: Involution<T>,
}

impl<T: Real> OffDiagonalProblem<T> {
    /// `t` must be `dim A₊ × dim A₋`. Both blocks are checked for
    /// positivity and clamped; `β = ‖S‖` is recomputed.
    pub fn new(
        a_plus: &SymMatrix<T>,
        a_minus: &SymMatrix<T>,
        t: Array2<T>,
        tol: &Tolerances<T>,
    ) -> Result<Self, RepError> {
        let (p, q) = (a_plus.dim(), a_minus.dim());
        if t.nrows() != p {
            return Err(RepError::DimensionMismatch {
                what: "T rows",
                expected: p,
                found: t.nrows(),
            });
        }
        if t.ncols() != q {
            return Err(RepError::DimensionMismatch {
                what: "T columns",
                expected: q,
                found: t.ncols(),
            });
        }
        if let Some(((row, col), _)) = t.indexed_iter().find(|(_, x)| !x.is_finite()) {
            return Err(crate::spectral::SpectralError::NonFinite { row, col }.into());
        }
        let a_plus = PsdOperator::new(a_plus, tol)?;
        let a_minus = PsdOperator::new(a_minus, tol)?;
        let mut joined = Array2::zeros((p + q, p + q));
        joined.slice_mut(s![..p, ..p]).assign(a_plus.matrix().as_array());
        joined.slice_mut(s![p.., p..]).assign(a_minus.matrix().as_array());
        let a = PsdOperator::new(&SymMatrix::new(joined)?, tol)?;
        let beta = spectral_norm(t.view());
        let j = Involution::standard(p, q)?;
        Ok(Self {
            a_plus,
            a_minus,
            a,
            t,
            beta,
            j,
        })
    }

    pub fn plus_dim(&self) -> usize {
        self.a_plus.dim()
    }

    pub fn minus_dim(&self) -> usize {
        self.a_minus.dim()
    }

    pub fn dim(&self) -> usize {
        self.plus_dim() + self.minus_dim()
    }

    pub fn a_plus(&self) -> &PsdOperator<T> {
        &self.a_plus
    }

    pub fn a_minus(&self) -> &PsdOperator<T> {
        &self.a_minus
    }

    /// `A₊ ⊕ A₋`
    pub fn a(&self) -> &PsdOperator<T> {
        &self.a
    }

    pub fn t(&self) -> &Array2<T> {
        &self.t
    }

    /// `‖S‖ = σ_max(T)`
    pub fn beta(&self) -> T {
        self.beta
    }

    /// `diag(I₊, -I₋)`
    pub fn j(&self) -> &Involution<T> {
        &self.j
    }

    /// `[[0, T], [Tᵀ, 0]]`
    pub fn s(&self) -> SymMatrix<T> {
        self.blocks(T::zero(), T::zero())
    }

    /// `[[I, T], [Tᵀ, -I]]`
    pub fn h_tilde(&self) -> SymMatrix<T> {
        self.blocks(T::one(), -T::one())
    }

    /// `(1 + ‖A‖)(1 + β)`
    pub fn scale(&self) -> T {
        (T::one() + self.a.norm()) * (T::one() + self.beta)
    }

    fn blocks(&self, plus: T, minus: T) -> SymMatrix<T> {
        let p = self.plus_dim();
        let n = self.dim();
        let mut m = Array2::zeros((n, n));
        for i in 0..p {
            m[[i, i]] = plus;
        }
        for i in p..n {
            m[[i, i]] = minus;
        }
        m.slice_mut(s![..p, p..]).assign(&self.t);
        m.slice_mut(s![p.., ..p]).assign(&self.t.t());
        SymMatrix::new(m).expect("block matrix is symmetric by construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffDiagonalCheck<T: Real> {
    pub offdiagonal: bool,
    /// `max(‖P S P‖, ‖P⊥ S P⊥‖)`
    pub residual: T,
    /// `‖JS + SJ‖`
    pub anticommutator: T,
}

/// Whether `S` maps `ℋ±` into `ℋ∓`, judged by `residual ≤ tol·‖S‖`.
pub fn check_offdiagonal<T: Real>(
    s: &SymMatrix<T>,
    j: &Involution<T>,
    tol: T,
) -> Result<OffDiagonalCheck<T>, RepError> {
    if s.dim() != j.dim() {
        return Err(RepError::DimensionMismatch {
            what: "S",
            expected: j.dim(),
            found: s.dim(),
        });
    }
    let p = j.projector().as_array();
    let q = j.projector_perp().as_array();
    let s_arr = s.as_array();
    let plus = spectral_norm(p.dot(s_arr).dot(p).view());
    let minus = spectral_norm(q.dot(s_arr).dot(q).view());
    let jm = j.matrix().as_array();
    let anti = jm.dot(s_arr) + s_arr.dot(jm);
    let residual = plus.max(minus);
    Ok(OffDiagonalCheck {
        offdiagonal: residual <= tol * s.op_norm()?,
        residual,
        anticommutator: spectral_norm(anti.view()),
    })
}

/// `b[x,y] = ⟨A^{1/2}x, J A^{1/2}y⟩ + ⟨S(A+I)^{1/2}x, (A+I)^{1/2}y⟩`.
#[derive(Debug, Clone)]
pub struct OffDiagonalForm<T: Real> {
    sqrt_a: SymMatrix<T>,
    shifted_sqrt: SymMatrix<T>,
    j: SymMatrix<T>,
    s: SymMatrix<T>,
    scale: T,
}

impl<T: Real> OffDiagonalForm<T> {
    pub fn new(p: &OffDiagonalProblem<T>) -> Self {
        Self {
            sqrt_a: p.a().sqrt(),
            shifted_sqrt: p.a().shifted_sqrt(),
            j: p.j().matrix().clone(),
            s: p.s(),
            scale: p.scale(),
        }
    }

    /// The perturbation `v[x,y]` alone.
    pub fn v(&self, x: ArrayView1<T>, y: ArrayView1<T>) -> T {
        let sx = self.shifted_sqrt.as_array().dot(&x);
        let sy = self.shifted_sqrt.as_array().dot(&y);
        self.s.as_array().dot(&sx).dot(&sy)
    }

    /// `‖(A+I)^{1/2}x‖²`
    pub fn shifted_norm_sq(&self, x: ArrayView1<T>) -> T {
        let sx = self.shifted_sqrt.as_array().dot(&x);
        sx.dot(&sx)
    }
}

impl<T: Real> SesquilinearForm<T> for OffDiagonalForm<T> {
    fn dim(&self) -> usize {
        self.j.dim()
    }

    fn eval(&self, x: ArrayView1<T>, y: ArrayView1<T>) -> T {
        let ax = self.sqrt_a.as_array().dot(&x);
        let ay = self.sqrt_a.as_array().dot(&y);
        ax.dot(&self.j.as_array().dot(&ay)) + self.v(x, y)
    }

    fn scale(&self) -> T {
        self.scale
    }
}

/// Builds `B = (A+I)^{1/2} H̃ (A+I)^{1/2} - J`. The result stores `Ĥ` in
/// `h0`, carries no gap certificate (the construction needs none) and is
/// always `certified`.
pub fn assemble_offdiag<T: Real>(
    p: &OffDiagonalProblem<T>,
    tol: &Tolerances<T>,
    probe_seed: u64,
) -> Result<RepresentationResult<T>, RepError> {
    let h_tilde = p.h_tilde();
    let shifted = h_tilde.sandwich(&p.a().shifted_sqrt());
    let b = shifted.sub(p.j().matrix());
    let scale = p.scale();

    // Second route: B = A^{1/2} J A^{1/2} + (A+I)^{1/2} S (A+I)^{1/2}.
    let direct = p
        .j()
        .matrix()
        .sandwich(&p.a().sqrt())
        .add(&p.s().sandwich(&p.a().shifted_sqrt()));
    let consistency_residual = spectral_norm((b.as_array() - direct.as_array()).view());
    check_bound("B two routes", consistency_residual, tol.consistency * scale)?;

    let hat = hat_h_from(p, &b, tol)?;
    let c = h_tilde.min_abs_eig()?;

    let form = OffDiagonalForm::new(p);
    let probes = ProbeSet::standard(p.dim(), probe_seed);
    let v_excess = probes
        .pairs
        .iter()
        .map(|(x, _)| form.v(x.view(), x.view()).abs() - p.beta() * form.shifted_norm_sq(x.view()))
        .fold(T::zero(), |acc, e| acc.max(e));
    check_bound("|v[x]| <= beta ‖(A+I)^1/2 x‖²", v_excess, tol.consistency * scale)?;

    let first_rep_residual = first_rep_residual_for(&form, &b, &probes);
    let second_rep_residual = second_rep_residual_for(&form, &b, &probes, tol)?;
    Ok(RepresentationResult {
        b_tilde: b.add(p.j().matrix()),
        b,
        h0: hat.h_hat,
        h_tilde,
        c,
        first_rep_residual,
        second_rep_residual,
        consistency_residual,
        scale,
        certificate: None,
        certified: true,
    })
}

fn check_bound<T: Real>(what: &'static str, residual: T, bound: T) -> Result<(), RepError> {
    if !(residual <= bound) {
        return Err(RepError::Inconsistent {
            what,
            residual: residual.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
        });
    }
    Ok(())
}

/// `Ĥ = [[I - (A₊+I)⁻¹, T], [Tᵀ, -I + (A₋+I)⁻¹]]` with the residual of
/// `B = (A+I)^{1/2} Ĥ (A+I)^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HatSymbol<T: Real> {
    pub h_hat: SymMatrix<T>,
    /// Unnormalised `‖(A+I)^{1/2} Ĥ (A+I)^{1/2} - B‖`.
    pub identity_residual: T,
    pub scale: T,
}

/// Errors with [`RepError::Inconsistent`] if the identity residual exceeds
/// `consistency·scale`.
pub fn hat_h<T: Real>(p: &OffDiagonalProblem<T>, tol: &Tolerances<T>) -> Result<HatSymbol<T>, RepError> {
    let b = p.h_tilde().sandwich(&p.a().shifted_sqrt()).sub(p.j().matrix());
    hat_h_from(p, &b, tol)
}

fn hat_h_from<T: Real>(
    p: &OffDiagonalProblem<T>,
    b: &SymMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<HatSymbol<T>, RepError> {
    let shift = p.a().shifted_inv().matmul(p.j().matrix());
    let h_hat = p.h_tilde().sub(&SymMatrix::symmetrize(shift));
    let via = h_hat.sandwich(&p.a().shifted_sqrt());
    let identity_residual = spectral_norm((via.as_array() - b.as_array()).view());
    let scale = p.scale();
    check_bound("B = (A+I)^1/2 H^ (A+I)^1/2", identity_residual, tol.consistency * scale)?;
    Ok(HatSymbol {
        h_hat,
        identity_residual,
        scale,
    })
}

/// The kernel formula against a direct nullspace computation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport<T: Real> {
    pub ker_a_plus: SubspaceBasis<T>,
    pub ker_a_minus: SubspaceBasis<T>,
    /// `(A₊+I)^{-1/2} Ker Tᵀ`
    pub l_plus: SubspaceBasis<T>,
    /// `(A₋+I)^{-1/2} Ker T`
    pub l_minus: SubspaceBasis<T>,
    /// `Ker A₊ ∩ 𝔏₊`
    pub plus_part: SubspaceBasis<T>,
    /// `Ker A₋ ∩ 𝔏₋`
    pub minus_part: SubspaceBasis<T>,
    pub theorem_kernel: SubspaceBasis<T>,
    pub oracle_kernel: SubspaceBasis<T>,
    pub principal_angle: T,
    pub dims_match: bool,
    /// Largest `|⟨Tᵀ(A₊+I)^{1/2}x₊, (A₋+I)^{1/2}x₋⟩|` over basis vectors
    /// `x₊ ∈ 𝔏₊` and all `x₋` (and symmetrically), relative to `1 + β`.
    pub definitional_residual: T,
}

/// Kernel of the associated operator, assembled blockwise, with the
/// nullspace of `B` as oracle.
pub fn kernel_via_theorem<T: Real>(
    p: &OffDiagonalProblem<T>,
    tol: &Tolerances<T>,
) -> Result<KernelReport<T>, RepError> {
    let policy = &tol.kernel;
    let (np, nm) = (p.plus_dim(), p.minus_dim());
    // Every block sits next to an identity in `A + I` or `H̃`.
    let one = T::one();
    let ker_a_plus = nullspace_at_scale(p.a_plus().matrix(), one, policy)?;
    let ker_a_minus = nullspace_at_scale(p.a_minus().matrix(), one, policy)?;

    let t = p.t();
    let ker_t_star = if nm == 0 {
        identity_basis(np)
    } else {
        kernel_of_at_scale(&t.t().to_owned(), one, policy)?
    };
    let ker_t = if np == 0 {
        identity_basis(nm)
    } else {
        kernel_of_at_scale(t, one, policy)?
    };
    let l_plus = orthonormalize(&p.a_plus().shifted_inv_sqrt(), &ker_t_star, policy)?;
    let l_minus = orthonormalize(&p.a_minus().shifted_inv_sqrt(), &ker_t, policy)?;

    let plus_part = intersection(&ker_a_plus, &l_plus, policy)?;
    let minus_part = intersection(&ker_a_minus, &l_minus, policy)?;
    let theorem_kernel = plus_part.direct_sum(&minus_part);

    let b = p.h_tilde().sandwich(&p.a().shifted_sqrt()).sub(p.j().matrix());
    let oracle_kernel = nullspace_at_scale(&b, one, policy)?;
    let principal_angle = principal_angle(&theorem_kernel, &oracle_kernel);
    let dims_match = theorem_kernel.dim() == oracle_kernel.dim();

    let coupled_plus = p.a_plus().shifted_sqrt().as_array().dot(l_plus.vectors());
    let coupled_plus = t.t().dot(&coupled_plus);
    let coupled_minus = p.a_minus().shifted_sqrt().as_array().dot(l_minus.vectors());
    let coupled_minus = t.dot(&coupled_minus);
    let definitional_residual = (spectral_norm(coupled_plus.view()) * p.a_minus().shifted_sqrt().op_norm()?)
        .max(spectral_norm(coupled_minus.view()) * p.a_plus().shifted_sqrt().op_norm()?)
        / (T::one() + p.beta());

    Ok(KernelReport {
        ker_a_plus,
        ker_a_minus,
        l_plus,
        l_minus,
        plus_part,
        minus_part,
        theorem_kernel,
        oracle_kernel,
        principal_angle,
        dims_match,
        definitional_residual,
    })
}

fn identity_basis<T: Real>(n: usize) -> SubspaceBasis<T> {
    SubspaceBasis::from_orthonormal(Array2::eye(n))
}

/// Orthonormal basis of `M · span(basis)` for invertible `M`.
fn orthonormalize<T: Real>(
    m: &SymMatrix<T>,
    basis: &SubspaceBasis<T>,
    policy: &crate::spectral::TolPolicy<T>,
) -> Result<SubspaceBasis<T>, RepError> {
    if basis.dim() == 0 {
        return Ok(SubspaceBasis::trivial(basis.ambient_dim()));
    }
    let image = m.as_array().dot(basis.vectors());
    Ok(crate::spectral::range_basis(&image, policy)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn problem(ap: &[f64], am: &[f64], t: Array2<f64>) -> OffDiagonalProblem<f64> {
        OffDiagonalProblem::new(&SymMatrix::from_diag(ap), &SymMatrix::from_diag(am), t, &tol()).unwrap()
    }

    #[test]
    fn swap_is_offdiagonal() {
        let s = SymMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let j = Involution::standard(1, 1).unwrap();
        let c = check_offdiagonal(&s, &j, 1e-12).unwrap();
        assert!(c.offdiagonal);
        assert_eq!(c.residual, 0.0);
        assert_eq!(c.anticommutator, 0.0);
        let c = check_offdiagonal(&SymMatrix::identity(2), &j, 1e-12).unwrap();
        assert!(!c.offdiagonal);
        assert_eq!(c.residual, 1.0);
    }

    #[test]
    fn beta_is_recomputed() {
        let p = problem(&[1.0, 2.0], &[0.0], array![[3.0], [4.0]]);
        assert_abs_diff_eq!(p.beta(), 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.s().op_norm().unwrap(), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_shapes_and_negative_blocks() {
        let r = OffDiagonalProblem::new(
            &SymMatrix::from_diag(&[1.0]),
            &SymMatrix::from_diag(&[1.0]),
            Array2::zeros((2, 1)),
            &tol(),
        );
        assert!(matches!(r, Err(RepError::DimensionMismatch { .. })));
        let r = OffDiagonalProblem::new(
            &SymMatrix::from_diag(&[-1.0]),
            &SymMatrix::from_diag(&[1.0]),
            Array2::zeros((1, 1)),
            &tol(),
        );
        assert!(matches!(r, Err(RepError::NotPsd { .. })));
    }

    #[test]
    fn trivial_assembly() {
        let p = problem(&[0.0], &[0.0], Array2::zeros((1, 1)));
        let r = assemble_offdiag(&p, &tol(), 0).unwrap();
        assert!(r.b.as_array().iter().all(|&x| x == 0.0));
        assert_eq!(r.b_tilde.as_array(), p.j().matrix().as_array());
        assert_eq!(r.c, 1.0);
    }

    #[test]
    fn uncoupled_assembly_is_signed_a() {
        let p = problem(&[0.5, 2.0], &[1.0, 3.0], Array2::zeros((2, 2)));
        let r = assemble_offdiag(&p, &tol(), 0).unwrap();
        let expected = Array2::from_diag(&array![0.5, 2.0, -1.0, -3.0]);
        assert_abs_diff_eq!(r.b.as_array().clone(), expected, epsilon = 1e-14);
    }

    #[test]
    fn hat_h_examples() {
        let t = array![[1.0, -2.0]];
        let p = problem(&[0.0], &[0.0, 0.0], t.clone());
        let h = hat_h(&p, &tol()).unwrap().h_hat;
        assert_abs_diff_eq!(h.into_array(), p.s().into_array(), epsilon = 1e-15);

        let p = problem(&[1.0], &[0.0], Array2::zeros((1, 1)));
        let h = hat_h(&p, &tol()).unwrap().h_hat;
        assert_abs_diff_eq!(h.into_array(), array![[0.5, 0.0], [0.0, 0.0]], epsilon = 1e-15);
    }

    #[test]
    fn kernel_uncoupled() {
        let p = problem(&[0.0, 1.0], &[0.0, 2.0], Array2::zeros((2, 2)));
        let k = kernel_via_theorem(&p, &tol()).unwrap();
        assert_eq!(k.l_plus.dim(), 2);
        assert_eq!(k.theorem_kernel.dim(), 2);
        assert!(k.dims_match);
        assert!(k.principal_angle <= 1e-12);
        let v = k.theorem_kernel.vectors();
        assert_abs_diff_eq!(v[[0, 0]].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[[2, 1]].abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_aligned_coupling() {
        let p = problem(&[0.0, 1.0], &[0.0, 1.0], array![[0.0, 0.0], [0.0, 1.0]]);
        let k = kernel_via_theorem(&p, &tol()).unwrap();
        assert_eq!(k.l_plus.dim(), 1);
        assert_abs_diff_eq!(k.l_plus.vectors()[[0, 0]].abs(), 1.0, epsilon = 1e-15);
        assert_eq!(k.theorem_kernel.dim(), 2);
        assert!(k.dims_match);
        assert!(k.principal_angle <= 1e-12);
        assert!(k.definitional_residual <= 1e-15);
    }

    #[test]
    fn kernel_misaligned_coupling() {
        let p = problem(&[0.0, 1.0], &[0.0, 1.0], array![[1.0, 0.0], [0.0, 0.0]]);
        let k = kernel_via_theorem(&p, &tol()).unwrap();
        assert_abs_diff_eq!(k.l_plus.vectors()[[1, 0]].abs(), 1.0, epsilon = 1e-15);
        assert_eq!(k.plus_part.dim(), 0);
        assert_eq!(k.theorem_kernel.dim(), 0);
        assert_eq!(k.oracle_kernel.dim(), 0);
        assert!(k.dims_match);
        let r = assemble_offdiag(&p, &tol(), 3).unwrap();
        assert!(r.first_rep_residual <= 1e-15);
    }

    #[test]
    fn rounding_level_coupling_counts_as_zero() {
        // T at rounding level: Ker T is everything, so with A₋ = 0 the whole
        // lower block is in the kernel.
        let t = array![[1e-17, -3e-17], [2e-17, 5e-18], [0.0, 1e-17]];
        let p = problem(&[0.0, 1.0, 2.0], &[0.0, 0.0], t);
        let k = kernel_via_theorem(&p, &tol()).unwrap();
        assert_eq!(k.l_minus.dim(), 2);
        assert_eq!(k.theorem_kernel.dim(), 3);
        assert!(k.dims_match);
        assert!(k.principal_angle <= 1e-12);
    }

    #[test]
    fn c_from_singular_values() {
        // H̃² = diag(I + TTᵀ, I + TᵀT), so c = 1 when T or Tᵀ has a kernel
        // and sqrt(1 + σ_min²) otherwise.
        let p = problem(&[0.3, 2.0], &[1.0], array![[0.4], [-1.2]]);
        let r = assemble_offdiag(&p, &tol(), 0).unwrap();
        assert_abs_diff_eq!(r.c, 1.0, epsilon = 1e-14);

        let p = problem(&[0.3, 2.0], &[1.0, 0.0], array![[3.0, 0.0], [0.0, 0.5]]);
        let r = assemble_offdiag(&p, &tol(), 0).unwrap();
        assert_abs_diff_eq!(r.c, 1.25f64.sqrt(), epsilon = 1e-14);
    }
}

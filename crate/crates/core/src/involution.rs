//! Self-adjoint involutions, their spectral projectors, and 2×2 block
//! decompositions with respect to the splitting `R^n = H₊ ⊕ H₋`.

use ndarray::{concatenate, Array2, Axis};
use thiserror::Error;

use crate::scalar::Real;
use crate::spectral::{spectral_norm, SpectralError, SubspaceBasis, SymMatrix};

/// Largest dimension accepted by [`enumerate_diagonal_involutions`].
pub const MAX_ENUMERATION_DIM: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvolutionError {
    #[error("not an involution: ‖J² - I‖ = {residual:e} exceeds {bound:e}")]
    NotInvolution { residual: f64, bound: f64 },
    #[error("trivial involution: J = {sign}I")]
    Trivial { sign: char },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("enumeration of diagonal involutions refused for n = {n}: bound is n <= {max}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// A self-adjoint `J` with `J² = I`, `J ≠ ±I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Involution<T: Real> {
    j: SymMatrix<T>,
    p: SymMatrix<T>,
    p_perp: SymMatrix<T>,
    plus: SubspaceBasis<T>,
    minus: SubspaceBasis<T>,
}

impl<T: Real> Involution<T> {
    /// Validates `J` and computes `P = (I+J)/2`, `P⊥ = I - P` and orthonormal
    /// bases of the `±1` eigenspaces.
    pub fn new(j: SymMatrix<T>) -> Result<Self, InvolutionError> {
        let n = j.dim();
        let sq = j.matmul(&j) - Array2::<T>::eye(n);
        let residual = spectral_norm(sq.view());
        let bound = T::tol(1e-12) * T::lit(n as f64);
        if !(residual <= bound) {
            return Err(InvolutionError::NotInvolution {
                residual: residual.to_f64_lossy(),
                bound: bound.to_f64_lossy(),
            });
        }
        let dec = j.eig()?;
        let plus = dec.select(|lam| lam > T::zero());
        let minus = dec.select(|lam| lam < T::zero());
        if minus.dim() == 0 {
            return Err(InvolutionError::Trivial { sign: '+' });
        }
        if plus.dim() == 0 {
            return Err(InvolutionError::Trivial { sign: '-' });
        }
        let p = SymMatrix::symmetrize(plus.projector());
        let p_perp = SymMatrix::symmetrize(minus.projector());
        Ok(Self {
            j,
            p,
            p_perp,
            plus,
            minus,
        })
    }

    /// `diag(signs)`, with `true` meaning `+1`. Bases are canonical vectors
    /// in index order.
    pub fn diagonal(signs: &[bool]) -> Result<Self, InvolutionError> {
        let n = signs.len();
        if signs.iter().all(|&s| s) {
            return Err(InvolutionError::Trivial { sign: '+' });
        }
        if signs.iter().all(|&s| !s) {
            return Err(InvolutionError::Trivial { sign: '-' });
        }
        let diag: Vec<T> = signs
            .iter()
            .map(|&s| if s { T::one() } else { -T::one() })
            .collect();
        let eye = Array2::<T>::eye(n);
        let plus_idx: Vec<usize> = (0..n).filter(|&i| signs[i]).collect();
        let minus_idx: Vec<usize> = (0..n).filter(|&i| !signs[i]).collect();
        let p_diag: Vec<T> = signs
            .iter()
            .map(|&s| if s { T::one() } else { T::zero() })
            .collect();
        let q_diag: Vec<T> = p_diag.iter().map(|&x| T::one() - x).collect();
        Ok(Self {
            j: SymMatrix::from_diag(&diag),
            p: SymMatrix::from_diag(&p_diag),
            p_perp: SymMatrix::from_diag(&q_diag),
            plus: SubspaceBasis::from_orthonormal(eye.select(Axis(1), &plus_idx)),
            minus: SubspaceBasis::from_orthonormal(eye.select(Axis(1), &minus_idx)),
        })
    }

    /// The canonical `diag(I_{plus_dim}, -I_{minus_dim})`.
    pub fn standard(plus_dim: usize, minus_dim: usize) -> Result<Self, InvolutionError> {
        let signs: Vec<bool> = (0..plus_dim + minus_dim).map(|i| i < plus_dim).collect();
        Self::diagonal(&signs)
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn matrix(&self) -> &SymMatrix<T> {
        &self.j
    }

    pub fn projector(&self) -> &SymMatrix<T> {
        &self.p
    }

    pub fn projector_perp(&self) -> &SymMatrix<T> {
        &self.p_perp
    }

    pub fn plus_basis(&self) -> &SubspaceBasis<T> {
        &self.plus
    }

    pub fn minus_basis(&self) -> &SubspaceBasis<T> {
        &self.minus
    }

    /// `[U₊ | U₋]`, the orthogonal change of basis into block coordinates.
    pub fn block_basis(&self) -> Array2<T> {
        concatenate(
            Axis(1),
            &[self.plus.vectors().view(), self.minus.vectors().view()],
        )
        .expect("bases share the ambient dimension")
    }

    /// `±1` pattern if `J` is diagonal in the standard basis.
    pub fn diagonal_signs(&self) -> Option<Vec<bool>> {
        let n = self.dim();
        let m = self.j.as_array();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            for k in 0..n {
                if k != i && m[[i, k]] != T::zero() {
                    return None;
                }
            }
            out.push(m[[i, i]] > T::zero());
        }
        Some(out)
    }
}

/// See [`Involution::new`].
pub fn make_involution<T: Real>(j: SymMatrix<T>) -> Result<Involution<T>, InvolutionError> {
    Involution::new(j)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationCheck<T: Real> {
    pub commutes: bool,
    /// `‖JA - AJ‖₂`
    pub residual: T,
}

/// Default relative tolerance for [`commutes`].
pub fn default_commute_tol<T: Real>() -> T {
    T::tol(1e-10)
}

/// `‖JA - AJ‖ ≤ tol·‖A‖`.
pub fn commutes<T: Real>(
    j: &Involution<T>,
    a: &SymMatrix<T>,
    tol: T,
) -> Result<CommutationCheck<T>, InvolutionError> {
    if a.dim() != j.dim() {
        return Err(InvolutionError::DimensionMismatch {
            expected: j.dim(),
            found: a.dim(),
        });
    }
    let ja = j.matrix().matmul(a);
    let aj = a.matmul(j.matrix());
    let residual = spectral_norm((&ja - &aj).view());
    let norm_a = a.op_norm()?;
    Ok(CommutationCheck {
        commutes: residual <= tol * norm_a,
        residual,
    })
}

/// `M = [[M₊, T], [Tᵀ, M₋]]` in the coordinates `(U₊, U₋)` of an involution.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition<T: Real> {
    pub plus: SymMatrix<T>,
    pub minus: SymMatrix<T>,
    /// `dim H₊ × dim H₋`
    pub coupling: Array2<T>,
}

impl<T: Real> BlockDecomposition<T> {
    /// Reassembles the source matrix in the original coordinates.
    pub fn reassemble(&self, j: &Involution<T>) -> Array2<T> {
        let u = j.plus_basis().vectors();
        let w = j.minus_basis().vectors();
        let ut = u.dot(&self.coupling).dot(&w.t());
        u.dot(self.plus.as_array()).dot(&u.t())
            + &ut
            + &ut.t()
            + w.dot(self.minus.as_array()).dot(&w.t())
    }

    /// The block matrix itself, `[[M₊, T], [Tᵀ, M₋]]`.
    pub fn assembled(&self) -> Array2<T> {
        let top = concatenate(
            Axis(1),
            &[self.plus.as_array().view(), self.coupling.view()],
        )
        .expect("row blocks agree");
        let ct = self.coupling.t();
        let bottom = concatenate(Axis(1), &[ct.view(), self.minus.as_array().view()])
            .expect("row blocks agree");
        concatenate(Axis(0), &[top.view(), bottom.view()]).expect("column blocks agree")
    }
}

pub fn block_decompose<T: Real>(
    m: &SymMatrix<T>,
    j: &Involution<T>,
) -> Result<BlockDecomposition<T>, InvolutionError> {
    if m.dim() != j.dim() {
        return Err(InvolutionError::DimensionMismatch {
            expected: j.dim(),
            found: m.dim(),
        });
    }
    let u = j.plus_basis().vectors();
    let w = j.minus_basis().vectors();
    Ok(BlockDecomposition {
        plus: m.compress(u),
        minus: m.compress(w),
        coupling: u.t().dot(m.as_array()).dot(w),
    })
}

/// Every `diag(±1, …, ±1)` of size `n` except `±I`, `2ⁿ - 2` in total.
///
/// Item `k` (0-based) has sign pattern given by the bits of `k + 1`, bit `i`
/// set meaning `+1` at position `i`.
pub fn enumerate_diagonal_involutions<T: Real>(
    n: usize,
) -> Result<impl Iterator<Item = Involution<T>>, InvolutionError> {
    if n > MAX_ENUMERATION_DIM {
        return Err(InvolutionError::TooLarge {
            n,
            max: MAX_ENUMERATION_DIM,
        });
    }
    let count: u64 = if n == 0 { 0 } else { (1u64 << n) - 2 };
    Ok((1..=count).map(move |mask| {
        let signs: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        Involution::diagonal(&signs).expect("mask excludes ±I")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn sym(a: Array2<f64>) -> SymMatrix<f64> {
        SymMatrix::new(a).unwrap()
    }

    #[test]
    fn diag_one_minus_one() {
        let j = Involution::new(SymMatrix::from_diag(&[1.0, -1.0])).unwrap();
        assert_eq!(j.projector().as_array(), &array![[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(j.projector_perp().as_array(), &array![[0.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn swap_projector() {
        let j = Involution::new(sym(array![[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_abs_diff_eq!(
            j.projector().as_array().clone(),
            array![[0.5, 0.5], [0.5, 0.5]],
            epsilon = 1e-15
        );
        let pp = j.projector().matmul(j.projector());
        assert_abs_diff_eq!(pp, j.projector().as_array().clone(), epsilon = 1e-15);
    }

    #[test]
    fn trivial_involutions_rejected() {
        assert_eq!(
            Involution::new(SymMatrix::<f64>::identity(2)).unwrap_err(),
            InvolutionError::Trivial { sign: '+' }
        );
        assert_eq!(
            Involution::new(SymMatrix::from_diag(&[-1.0, -1.0])).unwrap_err(),
            InvolutionError::Trivial { sign: '-' }
        );
        assert!(Involution::<f64>::diagonal(&[true]).is_err());
    }

    #[test]
    fn non_involution_rejected() {
        let err = Involution::new(SymMatrix::from_diag(&[1.0, -2.0])).unwrap_err();
        assert!(matches!(err, InvolutionError::NotInvolution { .. }));
    }

    #[test]
    fn commutation_examples() {
        let j = Involution::new(SymMatrix::from_diag(&[1.0, -1.0])).unwrap();
        let a = SymMatrix::from_diag(&[2.0, 0.5]);
        let c = commutes(&j, &a, 1e-10).unwrap();
        assert!(c.commutes);
        assert_eq!(c.residual, 0.0);

        let swap = Involution::new(sym(array![[0.0, 1.0], [1.0, 0.0]])).unwrap();
        let c = commutes(&swap, &a, 1e-10).unwrap();
        assert!(!c.commutes);
        assert_abs_diff_eq!(c.residual, 1.5, epsilon = 1e-14);

        let c = commutes(&swap, &SymMatrix::identity(2), 1e-10).unwrap();
        assert!(c.commutes);
    }

    #[test]
    fn commutation_dimension_mismatch() {
        let j = Involution::<f64>::standard(1, 1).unwrap();
        assert!(matches!(
            commutes(&j, &SymMatrix::identity(3), 1e-10),
            Err(InvolutionError::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn block_decompose_remark_example() {
        let h = sym(array![[0.0, 1.0], [1.0, 0.0]]);
        let j = Involution::new(SymMatrix::from_diag(&[1.0, -1.0])).unwrap();
        let b = block_decompose(&h, &j).unwrap();
        assert_eq!(b.plus.as_array(), &array![[0.0]]);
        assert_eq!(b.minus.as_array(), &array![[0.0]]);
        assert_eq!(b.coupling, array![[1.0]]);
    }

    #[test]
    fn diagonal_blocks_have_no_coupling() {
        let m = SymMatrix::from_diag(&[3.0, -1.0, 2.0, 5.0]);
        let j = Involution::<f64>::diagonal(&[true, false, false, true]).unwrap();
        let b = block_decompose(&m, &j).unwrap();
        assert!(b.coupling.iter().all(|&x| x == 0.0));
        assert_eq!(b.plus.as_array(), &array![[3.0, 0.0], [0.0, 5.0]]);
    }

    #[test]
    fn enumeration_counts() {
        let two: Vec<_> = enumerate_diagonal_involutions::<f64>(2).unwrap().collect();
        assert_eq!(two.len(), 2);
        let pats: Vec<_> = two.iter().map(|j| j.diagonal_signs().unwrap()).collect();
        assert!(pats.contains(&vec![true, false]));
        assert!(pats.contains(&vec![false, true]));
        assert_eq!(enumerate_diagonal_involutions::<f64>(3).unwrap().count(), 6);
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(
            enumerate_diagonal_involutions::<f64>(25),
            Err(InvolutionError::TooLarge { n: 25, max: 24 })
        ));
    }

    #[test]
    fn diagonal_constructor_agrees_with_general() {
        let d = Involution::<f64>::diagonal(&[false, true, true]).unwrap();
        let g = Involution::new(SymMatrix::from_diag(&[-1.0, 1.0, 1.0])).unwrap();
        assert_eq!(d.plus_basis(), g.plus_basis());
        assert_eq!(d.minus_basis(), g.minus_basis());
        assert_eq!(d.projector(), g.projector());
    }
}

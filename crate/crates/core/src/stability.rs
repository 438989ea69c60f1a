//! Domain-stability audit for the associated operator `B`.
//!
//! In finite dimension every operator below is bounded, so the seven
//! equivalent stability conditions hold trivially. The suite reports norms
//! and residuals and only flags a condition false on numerical
//! inconsistency; growth of those norms along a family of truncations is
//! what signals failure in the limit.

use nalgebra::{DMatrix, Schur};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use thiserror::Error;

use crate::general::{check_invertible, gap_blocks, sign_with_zero, PsdOperator, RepError};
use crate::involution::{commutes, enumerate_diagonal_involutions, Involution};
use crate::scalar::Real;
use crate::spectral::{spectral_norm, SpectralDecomposition, SpectralError, SymMatrix, TolPolicy};
use crate::tolerance::Tolerances;

/// Largest truncation size for which the involution sweep is exhaustive.
pub const MAX_EXHAUSTIVE_FAMILY_SIZE: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("{what}: {value:e} violates bound {bound:e}")]
    PreconditionBreach {
        what: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("truncation size {size} exceeds the exhaustive sweep limit {max}")]
    SizeGuard { size: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("eigenvalue computation failed for a {rows}x{cols} product")]
    Eigen { rows: usize, cols: usize },
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Value assigned to `sgn(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SgnChoice(i8);

impl SgnChoice {
    pub const PLUS: SgnChoice = SgnChoice(1);
    pub const MINUS: SgnChoice = SgnChoice(-1);

    pub fn new(s: i8) -> Option<Self> {
        matches!(s, 1 | -1).then_some(SgnChoice(s))
    }

    pub fn get(self) -> i8 {
        self.0
    }

    pub fn value<T: Real>(self) -> T {
        T::lit(self.0 as f64)
    }
}

impl Default for SgnChoice {
    fn default() -> Self {
        SgnChoice::PLUS
    }
}

fn sgn_scalar<T: Real>(x: T, tau: T, s: T) -> T {
    if x.abs() <= tau {
        s
    } else {
        x.signum()
    }
}

fn zero_tau<T: Real>(dec: &SpectralDecomposition<T>, tol: &Tolerances<T>) -> T {
    tol.zero_threshold(dec.dim(), dec.source_norm)
}

/// `sgn(B)`: `-1`, `s`, `+1` on the negative, numerically zero and positive
/// spectral subspaces.
pub fn sgn_matrix<T: Real>(
    b: &SymMatrix<T>,
    choice: SgnChoice,
    tol: &Tolerances<T>,
) -> Result<SymMatrix<T>, SpectralError> {
    let dec = b.eig()?;
    let tau = zero_tau(&dec, tol);
    let s = choice.value();
    dec.apply_fn(|x| sgn_scalar(x, tau, s))
}

/// Which of the equivalent stability conditions survived the numerical
/// checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabilityConditions {
    /// `dom|B|^{1/2} = dom A^{1/2}`
    pub i: bool,
    /// `dom|B|^{1/2} ⊇ dom A^{1/2}`
    pub ii: bool,
    /// `dom|B|^{1/2} ⊆ dom A^{1/2}`
    pub ii_prime: bool,
    /// `X` bounded symmetric
    pub iii: bool,
    /// `Y` bounded symmetric
    pub iii_prime: bool,
    /// `K` bounded involution
    pub iv: bool,
    /// `sgn(B)` preserves `dom A^{1/2}`
    pub v: bool,
}

impl StabilityConditions {
    pub fn as_array(&self) -> [(&'static str, bool); 7] {
        [
            ("i", self.i),
            ("ii", self.ii),
            ("ii'", self.ii_prime),
            ("iii", self.iii),
            ("iii'", self.iii_prime),
            ("iv", self.iv),
            ("v", self.v),
        ]
    }

    pub fn all_agree(&self) -> bool {
        let flags = self.as_array();
        flags.iter().all(|(_, f)| *f == flags[0].1)
    }

    pub fn all_hold(&self) -> bool {
        self.as_array().iter().all(|(_, f)| *f)
    }
}

/// `X, Y, K` and the pair `X̃, Ỹ` for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOperators<T: Real> {
    pub sgn: SymMatrix<T>,
    /// `(A+I)^{-1/2} |B + sgn B| (A+I)^{-1/2}`
    pub x: SymMatrix<T>,
    /// `(A+I)^{1/2} |B + sgn B|^{-1} (A+I)^{1/2}`
    pub y: SymMatrix<T>,
    /// `(A+I)^{1/2} sgn B (A+I)^{-1/2}`
    pub k: Array2<T>,
    /// `(A+I)^{1/2} (B + sgn B)^{-1} (A+I)^{1/2}`
    pub x_tilde: SymMatrix<T>,
    /// `(A+I)^{-1/2} (B + sgn B) (A+I)^{-1/2}`
    pub y_tilde: SymMatrix<T>,
    /// `|B + sgn B|^{1/2} (A+I)^{-1/2}`
    pub upper_embedding: Array2<T>,
    /// `(A+I)^{1/2} |B + sgn B|^{-1/2}`
    pub lower_embedding: Array2<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T: Real> {
    pub norm_x: T,
    pub norm_y: T,
    pub norm_k: T,
    pub norm_x_tilde: T,
    pub norm_y_tilde: T,
    /// `‖K² - I‖`
    pub k_involution_residual: T,
    /// `max(‖X̃Ỹ - I‖, ‖ỸX̃ - I‖)`
    pub xy_inverse_residual: T,
    /// `‖XY - I‖`
    pub x_y_residual: T,
    /// `‖K - X̃X‖`
    pub k_factor_residual: T,
    /// `max(‖sgn(B)B - sign(B)B‖, ‖sgn(B)|B| - sign(B)|B|‖)`
    pub sgn_invariance_residual: T,
    /// `‖sgn(B)² - I‖`
    pub sgn_square_residual: T,
    /// `min|σ(B + sgn B)|`
    pub shifted_gap: T,
    /// `(1 + ‖A‖)(1 + ‖B‖)`
    pub scale: T,
    pub conditions: StabilityConditions,
}

fn eye<T: Real>(n: usize) -> Array2<T> {
    Array2::eye(n)
}

fn dist_to_identity<T: Real>(m: &Array2<T>) -> T {
    spectral_norm((m - &eye::<T>(m.nrows())).view())
}

fn max_asymmetry<T: Real>(m: ArrayView2<T>) -> T {
    spectral_norm((&m - &m.t()).view())
}

/// Builds the stability operators. Errors if `B + sgn(B)` fails the
/// functional-calculus gap `min|σ| ≥ 1`.
pub fn stability_operators<T: Real>(
    a: &SymMatrix<T>,
    b: &SymMatrix<T>,
    choice: SgnChoice,
    tol: &Tolerances<T>,
) -> Result<(StabilityOperators<T>, T), StabilityError> {
    let n = b.dim();
    if a.dim() != n {
        return Err(StabilityError::DimensionMismatch {
            expected: n,
            found: a.dim(),
        });
    }
    let psd = PsdOperator::new(a, tol)?;
    let dec = b.eig()?;
    let tau = zero_tau(&dec, tol);
    let s = choice.value();
    let sgn = dec.apply_fn(|x| sgn_scalar(x, tau, s))?;

    let shifted = b.add(&sgn);
    let shifted_gap = shifted.min_abs_eig()?;
    if shifted_gap < T::one() - tol.stability {
        return Err(StabilityError::PreconditionBreach {
            what: "min |eig(B + sgn B)| >= 1",
            value: shifted_gap.to_f64_lossy(),
            bound: (T::one() - tol.stability).to_f64_lossy(),
        });
    }
    // |B + sgn B| = |B| + 1 and (B + sgn B)^{-1} share B's eigenvectors.
    let abs_shift = |x: T| x.abs() + T::one();
    let abs_m = dec.apply_fn(abs_shift)?;
    let abs_m_inv = dec.apply_fn(|x| T::one() / abs_shift(x))?;
    let abs_m_half = dec.apply_fn(|x| abs_shift(x).sqrt())?;
    let abs_m_inv_half = dec.apply_fn(|x| T::one() / abs_shift(x).sqrt())?;
    let m_inv = dec.apply_fn(|x| T::one() / (x + sgn_scalar(x, tau, s)))?;

    let up = psd.shifted_sqrt();
    let down = psd.shifted_inv_sqrt();
    let ops = StabilityOperators {
        x: abs_m.sandwich(&down),
        y: abs_m_inv.sandwich(&up),
        k: up.as_array().dot(sgn.as_array()).dot(down.as_array()),
        x_tilde: m_inv.sandwich(&up),
        y_tilde: shifted.sandwich(&down),
        upper_embedding: abs_m_half.matmul(&down),
        lower_embedding: up.matmul(&abs_m_inv_half),
        sgn,
    };
    Ok((ops, shifted_gap))
}

/// Runs the full audit for `(A, B)` with `sgn(0) = s`.
pub fn stability_suite<T: Real>(
    a: &SymMatrix<T>,
    b: &SymMatrix<T>,
    choice: SgnChoice,
    tol: &Tolerances<T>,
) -> Result<StabilityReport<T>, StabilityError> {
    let (ops, shifted_gap) = stability_operators(a, b, choice, tol)?;
    let n = b.dim();
    let norm_a = a.op_norm()?;
    let norm_b = b.op_norm()?;
    let scale = (T::one() + norm_a) * (T::one() + norm_b);
    let eps = tol.stability;

    let norm_x = ops.x.op_norm()?;
    let norm_y = ops.y.op_norm()?;
    let norm_k = spectral_norm(ops.k.view());
    let norm_x_tilde = ops.x_tilde.op_norm()?;
    let norm_y_tilde = ops.y_tilde.op_norm()?;

    let k_involution_residual = dist_to_identity(&ops.k.dot(&ops.k));
    let xy_inverse_residual = dist_to_identity(&ops.x_tilde.matmul(&ops.y_tilde))
        .max(dist_to_identity(&ops.y_tilde.matmul(&ops.x_tilde)));
    let x_y_residual = dist_to_identity(&ops.x.matmul(&ops.y));
    let k_factor_residual = spectral_norm((&ops.k - &ops.x_tilde.matmul(&ops.x)).view());
    let sgn_square_residual = dist_to_identity(&ops.sgn.matmul(&ops.sgn));

    let dec = b.eig()?;
    let tau = zero_tau(&dec, tol);
    let sign = dec.apply_fn(|x| sign_with_zero(x, tau))?;
    let abs_b = dec.apply_fn(|x| x.abs())?;
    let sgn_invariance_residual = spectral_norm((ops.sgn.matmul(b) - sign.matmul(b)).view()).max(
        spectral_norm((ops.sgn.matmul(&abs_b) - sign.matmul(&abs_b)).view()),
    );

    let finite = |x: T| x.is_finite();
    let upper = spectral_norm(ops.upper_embedding.view());
    let lower = spectral_norm(ops.lower_embedding.view());
    // Gram identities tie the embeddings back to X and Y.
    let upper_gram = ops.upper_embedding.t().dot(&ops.upper_embedding);
    let lower_gram = ops.lower_embedding.dot(&ops.lower_embedding.t());
    let ii = finite(upper)
        && spectral_norm((&upper_gram - ops.x.as_array()).view()) <= eps * scale * (T::one() + norm_x);
    let ii_prime = finite(lower)
        && spectral_norm((&lower_gram - ops.y.as_array()).view()) <= eps * scale * (T::one() + norm_y);
    let x_min = ops.x.eig()?.min_eig();
    let iii = finite(norm_x)
        && max_asymmetry(ops.x.as_array().view()) <= eps * norm_x
        && x_min >= -tol.zero_threshold(n, norm_x);
    let iii_prime = finite(norm_y)
        && max_asymmetry(ops.y.as_array().view()) <= eps * norm_y
        && x_y_residual <= eps * scale * (T::one() + norm_x * norm_y);
    let iv = finite(norm_k) && k_involution_residual <= eps * scale * (T::one() + norm_k * norm_k);
    let v = finite(norm_k) && sgn_square_residual <= eps * T::lit(n as f64);

    Ok(StabilityReport {
        norm_x,
        norm_y,
        norm_k,
        norm_x_tilde,
        norm_y_tilde,
        k_involution_residual,
        xy_inverse_residual,
        x_y_residual,
        k_factor_residual,
        sgn_invariance_residual,
        sgn_square_residual,
        shifted_gap,
        scale,
        conditions: StabilityConditions {
            i: ii && ii_prime,
            ii,
            ii_prime,
            iii,
            iii_prime,
            iv,
            v,
        },
    })
}

/// Definite `H`: with `sgn(0)` chosen to match the sign of `H`, `sgn(B)` is
/// `±I`. Returns `false` when `H` is indefinite.
pub fn sufficient_b_definite<T: Real>(
    h: &SymMatrix<T>,
    b: &SymMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<bool, StabilityError> {
    let dec = h.eig()?;
    let (choice, target) = if dec.min_eig() > T::zero() {
        (SgnChoice::PLUS, T::one())
    } else if dec.max_eig() < T::zero() {
        (SgnChoice::MINUS, -T::one())
    } else {
        return Ok(false);
    };
    let sgn = sgn_matrix(b, choice, tol)?;
    let residual = spectral_norm((sgn.as_array() - &(eye::<T>(b.dim()) * target)).view());
    if residual > tol.stability {
        return Err(StabilityError::PreconditionBreach {
            what: "sgn(B) = ±I for definite H",
            value: residual.to_f64_lossy(),
            bound: tol.stability.to_f64_lossy(),
        });
    }
    Ok(true)
}

/// Maximum number of shifts tried by [`sufficient_c_semibounded`].
pub const SHIFT_SEARCH_CAP: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSearch<T: Real> {
    pub found: bool,
    /// Accepted shift, or the last one tried.
    pub c: T,
    /// Number of shifts tried.
    pub attempts: usize,
}

/// Doubling search from `‖B‖ + 1` for `c` with `H̃ + c(A+I)⁻¹ ≻ 0` and
/// `-1/c ∉ σ((B+J)⁻¹)`.
pub fn sufficient_c_semibounded<T: Real>(
    a: &SymMatrix<T>,
    h_tilde: &SymMatrix<T>,
    b: &SymMatrix<T>,
    j: &Involution<T>,
    tol: &Tolerances<T>,
) -> Result<ShiftSearch<T>, StabilityError> {
    let n = b.dim();
    for m in [a.dim(), h_tilde.dim(), j.dim()] {
        if m != n {
            return Err(StabilityError::DimensionMismatch { expected: n, found: m });
        }
    }
    let psd = PsdOperator::new(a, tol)?;
    let resolvent = psd.shifted_inv();
    let inv_spectrum: Vec<T> = b
        .add(j.matrix())
        .eig()?
        .eigenvalues
        .iter()
        .map(|&x| T::one() / x)
        .collect();
    let inv_norm = inv_spectrum.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let inv_tau = tol.zero_threshold(n, inv_norm);

    let two = T::lit(2.0);
    let mut c = b.op_norm()? + T::one();
    for attempt in 1..=SHIFT_SEARCH_CAP {
        let shifted = h_tilde.add(&resolvent.scale(c));
        let dec = shifted.eig()?;
        let positive = dec.min_eig() > zero_tau(&dec, tol);
        let target = -T::one() / c;
        let separated = inv_spectrum
            .iter()
            .all(|&mu| (mu - target).abs() > inv_tau);
        if positive && separated {
            return Ok(ShiftSearch {
                found: true,
                c,
                attempts: attempt,
            });
        }
        if attempt < SHIFT_SEARCH_CAP {
            c = c * two;
        }
    }
    Ok(ShiftSearch {
        found: false,
        c,
        attempts: SHIFT_SEARCH_CAP,
    })
}

/// Hausdorff distance between the nonzero eigenvalues of `T₁T₂` and
/// `T₂T₁` (as points of the complex plane). With `m = ‖T₁‖‖T₂‖`,
/// eigenvalues with modulus at or below `max(policy(dim, m), √eps·m)` count
/// as zero; the `√eps` floor covers the spread of a computed zero cluster of
/// a non-normal product.
pub fn spectral_identity_residual<T: Real>(
    t1: ArrayView2<T>,
    t2: ArrayView2<T>,
    policy: &TolPolicy<T>,
) -> Result<T, StabilityError> {
    let (p, q) = t1.dim();
    if t2.dim() != (q, p) {
        return Err(StabilityError::DimensionMismatch {
            expected: q,
            found: t2.nrows(),
        });
    }
    let m = spectral_norm(t1) * spectral_norm(t2);
    let left = nonzero_spectrum(&t1.dot(&t2), m, policy)?;
    let right = nonzero_spectrum(&t2.dot(&t1), m, policy)?;
    let d = match (left.is_empty(), right.is_empty()) {
        (true, true) => 0.0,
        (false, false) => directed(&left, &right).max(directed(&right, &left)),
        _ => f64::INFINITY,
    };
    Ok(T::lit(d))
}

fn nonzero_spectrum<T: Real>(
    m: &Array2<T>,
    factor_norm: T,
    policy: &TolPolicy<T>,
) -> Result<Vec<(f64, f64)>, StabilityError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]].to_f64_lossy());
    let tau = policy
        .threshold(n, factor_norm)
        .max(T::epsilon().sqrt() * factor_norm)
        .to_f64_lossy();
    let eig = Schur::try_new(dm, f64::EPSILON, 0)
        .ok_or(StabilityError::Eigen { rows: n, cols: n })?
        .complex_eigenvalues();
    Ok(eig
        .iter()
        .filter(|z| z.norm() > tau)
        .map(|z| (z.re, z.im))
        .collect())
}

fn directed(from: &[(f64, f64)], to: &[(f64, f64)]) -> f64 {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| (a.0 - b.0).hypot(a.1 - b.1))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Named truncation families `N ↦ (A_N, H_N)` of size `2N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    /// `A = ⊕ diag(k+1, 1/(k+1))`, `H = ⊕ [[0,1],[1,0]]`.
    Counterexample,
    /// `A = I`, `H = ⊕ diag(1, -1)`.
    Constant,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Counterexample => "counterexample",
            FamilyKind::Constant => "constant",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "counterexample" => Some(FamilyKind::Counterexample),
            "constant" => Some(FamilyKind::Constant),
            _ => None,
        }
    }

    pub fn generate<T: Real>(self, n: usize) -> (SymMatrix<T>, SymMatrix<T>) {
        match self {
            FamilyKind::Counterexample => counterexample_truncation(n),
            FamilyKind::Constant => constant_truncation(n),
        }
    }
}

pub fn counterexample_truncation<T: Real>(n: usize) -> (SymMatrix<T>, SymMatrix<T>) {
    let mut a = Vec::with_capacity(2 * n);
    let mut h = Array2::zeros((2 * n, 2 * n));
    for k in 1..=n {
        let w = T::lit((k + 1) as f64);
        a.push(w);
        a.push(T::one() / w);
        let i = 2 * (k - 1);
        h[[i, i + 1]] = T::one();
        h[[i + 1, i]] = T::one();
    }
    (SymMatrix::from_diag(&a), SymMatrix::new(h).expect("symmetric"))
}

pub fn constant_truncation<T: Real>(n: usize) -> (SymMatrix<T>, SymMatrix<T>) {
    let h: Vec<T> = (0..2 * n)
        .map(|i| if i % 2 == 0 { T::one() } else { -T::one() })
        .collect();
    (SymMatrix::identity(2 * n), SymMatrix::from_diag(&h))
}

/// Per-size diagnostics of a truncation family, aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDiagnostics<T: Real> {
    pub sizes: Vec<usize>,
    pub norm_x: Vec<T>,
    pub norm_y: Vec<T>,
    pub norm_k: Vec<T>,
    pub norm_b: Vec<T>,
    pub cond_a: Vec<T>,
    /// `‖(A+I)^{1/2} H (A+I)^{-1/2}‖`
    pub h_transport_norm: Vec<T>,
    /// Whether some diagonal involution satisfies the gap condition; `None`
    /// when the sweep was skipped.
    pub gap_search_outcomes: Vec<Option<bool>>,
    pub involutions_swept: Vec<usize>,
    pub certifying_involutions: Vec<usize>,
}

struct SizeRow<T: Real> {
    norm_x: T,
    norm_y: T,
    norm_k: T,
    norm_b: T,
    cond_a: T,
    h_transport_norm: T,
    outcome: Option<bool>,
    swept: usize,
    certifying: usize,
}

/// Evaluates `generator` at each size (producing `2N×2N` matrices), builds
/// `B_N = A^{1/2} H A^{1/2}` regardless of the gap condition, and audits it
/// with `sgn(0) = +1`. With `sweep`, every diagonal involution is tried
/// against the gap condition; sizes above
/// [`MAX_EXHAUSTIVE_FAMILY_SIZE`] are then rejected.
pub fn family_diagnostics<T, G>(
    generator: G,
    sizes: &[usize],
    sweep: bool,
    tol: &Tolerances<T>,
) -> Result<FamilyDiagnostics<T>, StabilityError>
where
    T: Real,
    G: Fn(usize) -> (SymMatrix<T>, SymMatrix<T>) + Sync,
{
    if sweep {
        if let Some(&size) = sizes.iter().find(|&&n| n > MAX_EXHAUSTIVE_FAMILY_SIZE) {
            return Err(StabilityError::SizeGuard {
                size,
                max: MAX_EXHAUSTIVE_FAMILY_SIZE,
            });
        }
    }
    let rows: Vec<SizeRow<T>> = sizes
        .par_iter()
        .map(|&n| family_row(&generator, n, sweep, tol))
        .collect::<Result<_, _>>()?;

    let mut out = FamilyDiagnostics {
        sizes: sizes.to_vec(),
        norm_x: Vec::new(),
        norm_y: Vec::new(),
        norm_k: Vec::new(),
        norm_b: Vec::new(),
        cond_a: Vec::new(),
        h_transport_norm: Vec::new(),
        gap_search_outcomes: Vec::new(),
        involutions_swept: Vec::new(),
        certifying_involutions: Vec::new(),
    };
    for r in rows {
        out.norm_x.push(r.norm_x);
        out.norm_y.push(r.norm_y);
        out.norm_k.push(r.norm_k);
        out.norm_b.push(r.norm_b);
        out.cond_a.push(r.cond_a);
        out.h_transport_norm.push(r.h_transport_norm);
        out.gap_search_outcomes.push(r.outcome);
        out.involutions_swept.push(r.swept);
        out.certifying_involutions.push(r.certifying);
    }
    Ok(out)
}

fn family_row<T, G>(generator: &G, n: usize, sweep: bool, tol: &Tolerances<T>) -> Result<SizeRow<T>, StabilityError>
where
    T: Real,
    G: Fn(usize) -> (SymMatrix<T>, SymMatrix<T>) + Sync,
{
    let (a, h) = generator(n);
    let psd = PsdOperator::new(&a, tol)?;
    check_invertible(&h, tol)?;
    let b = h.sandwich(&psd.sqrt());
    let report = stability_suite(psd.matrix(), &b, SgnChoice::PLUS, tol)?;
    let transport = psd
        .shifted_sqrt()
        .matmul(&h)
        .dot(psd.shifted_inv_sqrt().as_array());

    let (outcome, swept, certifying) = if sweep {
        let dim = a.dim();
        let involutions: Vec<Involution<T>> = enumerate_diagonal_involutions(dim)
            .map_err(RepError::from)?
            .collect();
        let certifying = involutions
            .par_iter()
            .map(|j| -> Result<bool, StabilityError> {
                let c = commutes(j, psd.matrix(), tol.commute).map_err(RepError::from)?;
                Ok(c.commutes && gap_blocks(&h, j)?.satisfied)
            })
            .collect::<Result<Vec<bool>, _>>()?
            .into_iter()
            .filter(|&ok| ok)
            .count();
        (Some(certifying > 0), involutions.len(), certifying)
    } else {
        (None, 0, 0)
    };

    Ok(SizeRow {
        norm_x: report.norm_x,
        norm_y: report.norm_y,
        norm_k: report.norm_k,
        norm_b: b.op_norm()?,
        cond_a: psd.condition_number(),
        h_transport_norm: spectral_norm(transport.view()),
        outcome,
        swept,
        certifying,
    })
}

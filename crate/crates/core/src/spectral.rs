//! Dense self-adjoint spectral machinery.
//!
//! Everything downstream (square roots, resolvents, sign functions, kernels)
//! goes through [`eig_sym`] and [`SpectralDecomposition::apply_fn`]. The
//! eigensolver is a Householder tridiagonalisation followed by the implicit
//! QL iteration, written against [`Real`] so it runs in `f32` or `f64`.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian: max asymmetry {asymmetry:e} exceeds {bound:e}")]
    NotHermitian { asymmetry: f64, bound: f64 },
    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    Domain { eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shift {shift:e} lies within {tol:e} of eigenvalue {eigenvalue:e}")]
    NearSpectrum { shift: f64, eigenvalue: f64, tol: f64 },
    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
}

/// Dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T: Real> {
    data: Array2<T>,
}

impl<T: Real> SymMatrix<T> {
    /// Validates shape, finiteness and symmetry (to `100·eps·‖M‖_F`), then
    /// symmetrizes.
    pub fn new(data: Array2<T>) -> Result<Self, SpectralError> {
        let asym = check_square_finite(data.view())?;
        let norm = frobenius_norm(data.view());
        let bound = T::lit(100.0) * T::epsilon() * norm;
        if asym > bound {
            return Err(SpectralError::NotHermitian {
                asymmetry: asym.to_f64_lossy(),
                bound: bound.to_f64_lossy(),
            });
        }
        Ok(Self::symmetrize(data))
    }

    /// Like [`SymMatrix::new`] but accepts any asymmetry, returning the
    /// largest `|M[i,j] - M[j,i]|` that was averaged away.
    pub fn symmetrized(data: Array2<T>) -> Result<(Self, T), SpectralError> {
        let asym = check_square_finite(data.view())?;
        Ok((Self::symmetrize(data), asym))
    }

    pub(crate) fn symmetrize(data: Array2<T>) -> Self {
        let half = T::lit(0.5);
        let sym = (&data + &data.t()) * half;
        Self { data: sym }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: Array2::eye(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: Array2::zeros((n, n)),
        }
    }

    pub fn from_diag(diag: &[T]) -> Self {
        Self {
            data: Array2::from_diag(&Array1::from(diag.to_vec())),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<T> {
        &self.data
    }

    pub fn into_array(self) -> Array2<T> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[[i, j]]
    }

    pub fn eig(&self) -> Result<SpectralDecomposition<T>, SpectralError> {
        eig_sym(self)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            data: &self.data - &other.data,
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            data: &self.data * s,
        }
    }

    pub fn matmul(&self, other: &Self) -> Array2<T> {
        self.data.dot(&other.data)
    }

    /// `outer · self · outer`, symmetrized.
    pub fn sandwich(&self, outer: &Self) -> Self {
        Self::symmetrize(outer.data.dot(&self.data).dot(&outer.data))
    }

    /// `basisᵀ · self · basis` for an `n×k` basis.
    pub fn compress(&self, basis: &Array2<T>) -> Self {
        Self::symmetrize(basis.t().dot(&self.data).dot(basis))
    }

    pub fn frobenius_norm(&self) -> T {
        frobenius_norm(self.data.view())
    }

    /// Spectral norm via the eigendecomposition.
    pub fn op_norm(&self) -> Result<T, SpectralError> {
        Ok(self.eig()?.op_norm())
    }

    pub fn min_abs_eig(&self) -> Result<T, SpectralError> {
        Ok(self.eig()?.min_abs_eig())
    }
}

fn check_square_finite<T: Real>(data: ArrayView2<T>) -> Result<T, SpectralError> {
    let (rows, cols) = data.dim();
    if rows != cols {
        return Err(SpectralError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(SpectralError::Empty);
    }
    let mut asym = T::zero();
    for ((i, j), &x) in data.indexed_iter() {
        if !x.is_finite() {
            return Err(SpectralError::NonFinite { row: i, col: j });
        }
        asym = asym.max((x - data[[j, i]]).abs());
    }
    Ok(asym)
}

pub fn frobenius_norm<T: Real>(m: ArrayView2<T>) -> T {
    m.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Largest singular value of an arbitrary (possibly rectangular) matrix.
pub fn spectral_norm<T: Real>(m: ArrayView2<T>) -> T {
    let (p, q) = m.dim();
    if p == 0 || q == 0 {
        return T::zero();
    }
    let gram = if q <= p { m.t().dot(&m) } else { m.dot(&m.t()) };
    let gram = SymMatrix::symmetrize(gram);
    match eig_sym(&gram) {
        Ok(d) => d.max_eig().max(T::zero()).sqrt(),
        Err(_) => T::nan(),
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T: Real> {
    pub eigenvalues: Array1<T>,
    pub eigenvectors: Array2<T>,
    /// Largest `|λ|`.
    pub source_norm: T,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V · diag(f(λ)) · Vᵀ`. Fails if `f` is not finite at some eigenvalue.
    pub fn apply_fn<F>(&self, f: F) -> Result<SymMatrix<T>, SpectralError>
    where
        F: Fn(T) -> T,
    {
        let mut mapped = Array1::zeros(self.dim());
        for (m, &lam) in mapped.iter_mut().zip(self.eigenvalues.iter()) {
            let y = f(lam);
            if !y.is_finite() {
                return Err(SpectralError::Domain {
                    eigenvalue: lam.to_f64_lossy(),
                });
            }
            *m = y;
        }
        Ok(self.synthesize(&mapped))
    }

    /// `V · diag(values) · Vᵀ` for already-mapped eigenvalues.
    pub fn synthesize(&self, values: &Array1<T>) -> SymMatrix<T> {
        let v = &self.eigenvectors;
        let scaled = v * &values.view().insert_axis(Axis(0));
        SymMatrix::symmetrize(scaled.dot(&v.t()))
    }

    pub fn reconstruct(&self) -> SymMatrix<T> {
        self.synthesize(&self.eigenvalues)
    }

    pub fn op_norm(&self) -> T {
        self.source_norm
    }

    pub fn min_abs_eig(&self) -> T {
        self.eigenvalues
            .iter()
            .fold(T::infinity(), |acc, &x| acc.min(x.abs()))
    }

    /// Ordering within tie clusters follows the eigenvectors, so the
    /// extremes are taken over all eigenvalues.
    pub fn min_eig(&self) -> T {
        self.eigenvalues.iter().fold(T::infinity(), |acc, &x| acc.min(x))
    }

    pub fn max_eig(&self) -> T {
        self.eigenvalues.iter().fold(T::neg_infinity(), |acc, &x| acc.max(x))
    }

    /// Eigenvectors whose eigenvalues satisfy `pred`, as an orthonormal basis.
    pub fn select<P>(&self, pred: P) -> SubspaceBasis<T>
    where
        P: Fn(T) -> bool,
    {
        let idx: Vec<usize> = (0..self.dim())
            .filter(|&i| pred(self.eigenvalues[i]))
            .collect();
        SubspaceBasis {
            vectors: self.eigenvectors.select(Axis(1), &idx),
        }
    }
}

/// Symmetric eigendecomposition, eigenvalues ascending.
///
/// Each eigenvector is normalised so that its first component of magnitude
/// above `100·eps` is positive; eigenvalues equal to within `n·eps·‖M‖` are
/// ordered by descending lexicographic order of their eigenvectors.
pub fn eig_sym<T: Real>(m: &SymMatrix<T>) -> Result<SpectralDecomposition<T>, SpectralError> {
    let n = m.dim();
    for ((i, j), &x) in m.data.indexed_iter() {
        if !x.is_finite() {
            return Err(SpectralError::NonFinite { row: i, col: j });
        }
    }
    let mut v = m.data.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;

    let source_norm = d.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let noise = T::lit(100.0) * T::epsilon();
    for j in 0..n {
        let mut col = v.column_mut(j);
        if let Some(&first) = col.iter().find(|x| x.abs() > noise) {
            if first < T::zero() {
                col.mapv_inplace(|x| -x);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(Ordering::Equal));
    let tie = T::lit(n as f64) * T::epsilon() * source_norm;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && d[order[end]] - d[order[end - 1]] <= tie {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].sort_by(|&a, &b| lex_desc(&v, a, b));
        }
        start = end;
    }

    let eigenvalues = Array1::from_iter(order.iter().map(|&i| d[i]));
    let eigenvectors = v.select(Axis(1), &order);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        source_norm,
    })
}

fn lex_desc<T: Real>(v: &Array2<T>, a: usize, b: usize) -> Ordering {
    for k in 0..v.nrows() {
        match v[[k, b]].partial_cmp(&v[[k, a]]) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

// Householder reduction to tridiagonal form (EISPACK tred2 lineage).
// On exit `v` holds the accumulated orthogonal transform, `d` the diagonal
// and `e[1..]` the subdiagonal.
fn tridiagonalize<T: Real>(v: &mut Array2<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = T::zero();
                v[[j, i]] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g = g + v[[k, j]] * d[k];
                    e[k] = e[k] + v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[[k, j]] = v[[k, j]] - (f * e[k] + g * d[k]);
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g = g + v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] = v[[k, j]] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = T::zero();
    }
    v[[n - 1, n - 1]] = T::one();
    e[0] = T::zero();
}

// Implicit QL with Wilkinson-style shifts on the tridiagonal (d, e),
// accumulating rotations into `v` (EISPACK tql2 lineage).
fn ql_implicit<T: Real>(v: &mut Array2<T>, d: &mut [T], e: &mut [T]) -> Result<(), SpectralError> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let eps = T::epsilon();
    let two = T::lit(2.0);
    let max_iter = 60 * n.max(1);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(SpectralError::NoConvergence { index: l });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[[k, i + 1]];
                        v[[k, i + 1]] = s * v[[k, i]] + c * h;
                        v[[k, i]] = c * v[[k, i]] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Threshold rule for "numerically zero" eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TolPolicy<T: Real> {
    /// `n · eps · norm`
    Default,
    /// `k · n · eps · norm`
    EpsMultiple(T),
    /// `r · norm`
    Relative(T),
    /// Fixed threshold.
    Absolute(T),
}

impl<T: Real> Default for TolPolicy<T> {
    fn default() -> Self {
        TolPolicy::Default
    }
}

impl<T: Real> TolPolicy<T> {
    pub fn threshold(&self, n: usize, norm: T) -> T {
        let n = T::lit(n as f64);
        match *self {
            TolPolicy::Default => n * T::epsilon() * norm,
            TolPolicy::EpsMultiple(k) => k * n * T::epsilon() * norm,
            TolPolicy::Relative(r) => r * norm,
            TolPolicy::Absolute(t) => t,
        }
    }
}

/// Orthonormal basis of a subspace of `R^n`; `dim() == 0` is the trivial
/// subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis<T: Real> {
    vectors: Array2<T>,
}

impl<T: Real> SubspaceBasis<T> {
    /// Wraps columns that the caller guarantees are orthonormal.
    pub fn from_orthonormal(vectors: Array2<T>) -> Self {
        Self { vectors }
    }

    pub fn trivial(n: usize) -> Self {
        Self {
            vectors: Array2::zeros((n, 0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &Array2<T> {
        &self.vectors
    }

    pub fn projector(&self) -> Array2<T> {
        self.vectors.dot(&self.vectors.t())
    }

    /// `‖UᵀU - I‖_F`.
    pub fn orthonormality_defect(&self) -> T {
        let g = self.vectors.t().dot(&self.vectors) - Array2::<T>::eye(self.dim());
        frobenius_norm(g.view())
    }

    /// Embeds this basis of `R^k` into `R^n` through an `n×k` isometry.
    pub fn embed(&self, isometry: &Array2<T>) -> Self {
        Self {
            vectors: isometry.dot(&self.vectors),
        }
    }

    /// Orthogonal direct sum of two bases living in complementary coordinate
    /// blocks: the result spans `U ⊕ W` in `R^{p+q}`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (p, q) = (self.ambient_dim(), other.ambient_dim());
        let (a, b) = (self.dim(), other.dim());
        let mut out = Array2::zeros((p + q, a + b));
        out.slice_mut(ndarray::s![..p, ..a]).assign(&self.vectors);
        out.slice_mut(ndarray::s![p.., a..]).assign(&other.vectors);
        Self { vectors: out }
    }
}

/// Orthonormal basis of the eigenspace of `|λ| ≤ τ`, `τ = policy(n, ‖M‖)`.
pub fn nullspace<T: Real>(
    m: &SymMatrix<T>,
    policy: &TolPolicy<T>,
) -> Result<SubspaceBasis<T>, SpectralError> {
    nullspace_at_scale(m, T::zero(), policy)
}

/// As [`nullspace`] with `τ = policy(n, max(‖M‖, scale))`, for matrices that
/// are small next to the operator they belong to.
pub fn nullspace_at_scale<T: Real>(
    m: &SymMatrix<T>,
    scale: T,
    policy: &TolPolicy<T>,
) -> Result<SubspaceBasis<T>, SpectralError> {
    let dec = eig_sym(m)?;
    let tau = policy.threshold(m.dim(), dec.source_norm.max(scale));
    Ok(dec.select(|lam| lam.abs() <= tau))
}

/// Kernel of a rectangular `p×q` matrix, via `nullspace(MᵀM)`.
pub fn kernel_of<T: Real>(
    m: &Array2<T>,
    policy: &TolPolicy<T>,
) -> Result<SubspaceBasis<T>, SpectralError> {
    kernel_of_at_scale(m, T::zero(), policy)
}

/// As [`kernel_of`], judging `MᵀM` against at least `scale²`.
pub fn kernel_of_at_scale<T: Real>(
    m: &Array2<T>,
    scale: T,
    policy: &TolPolicy<T>,
) -> Result<SubspaceBasis<T>, SpectralError> {
    if m.ncols() == 0 {
        return Ok(SubspaceBasis::trivial(0));
    }
    nullspace_at_scale(&SymMatrix::symmetrize(m.t().dot(m)), scale * scale, policy)
}

/// Orthonormal basis of the column space of `m`, via eigenvectors of `MMᵀ`
/// with eigenvalue above `policy(n, ‖MMᵀ‖)`.
pub fn range_basis<T: Real>(
    m: &Array2<T>,
    policy: &TolPolicy<T>,
) -> Result<SubspaceBasis<T>, SpectralError> {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Ok(SubspaceBasis::trivial(n));
    }
    let dec = eig_sym(&SymMatrix::symmetrize(m.dot(&m.t())))?;
    let tau = policy.threshold(n, dec.source_norm);
    Ok(dec.select(|lam| lam > tau))
}

/// Intersection of two subspaces of the same ambient space, as the nullspace
/// of `(I - Π₁) + (I - Π₂)`.
pub fn intersection<T: Real>(
    a: &SubspaceBasis<T>,
    b: &SubspaceBasis<T>,
    policy: &TolPolicy<T>,
) -> Result<SubspaceBasis<T>, SpectralError> {
    let n = a.ambient_dim();
    if b.ambient_dim() != n {
        return Err(SpectralError::DimensionMismatch {
            expected: n,
            found: b.ambient_dim(),
        });
    }
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(SubspaceBasis::trivial(n));
    }
    let two = Array2::<T>::eye(n) * T::lit(2.0);
    let m = two - a.projector() - b.projector();
    let dec = eig_sym(&SymMatrix::symmetrize(m))?;
    // Judged against the summands (total norm 4) rather than the computed
    // ‖M‖, which is tiny when both subspaces are nearly everything; defects
    // of the bases enter the projectors directly.
    let tau = policy.threshold(n, T::lit(4.0))
        + T::lit(2.0) * (a.orthonormality_defect() + b.orthonormality_defect());
    Ok(dec.select(|lam| lam.abs() <= tau))
}

/// Largest principal angle between two subspaces, in radians. Subspaces of
/// different dimension are at angle `π/2`.
pub fn principal_angle<T: Real>(a: &SubspaceBasis<T>, b: &SubspaceBasis<T>) -> T {
    if a.dim() != b.dim() || a.ambient_dim() != b.ambient_dim() {
        return T::lit(std::f64::consts::FRAC_PI_2);
    }
    if a.dim() == 0 {
        return T::zero();
    }
    // sin θ_max = ‖(I - UUᵀ) W‖₂, accurate for small angles.
    let u = a.vectors();
    let w = b.vectors();
    let resid = w - &u.dot(&u.t().dot(w));
    spectral_norm(resid.view()).min(T::one()).asin()
}

/// Second resolvent identity residual for `R_λ(T) = (λI - T)⁻¹`:
/// the larger of `‖R₁ - R₂ - R₁(T₁-T₂)R₂‖` and `‖R₁ - R₂ - R₂(T₁-T₂)R₁‖`.
pub fn resolvent_identity_residual<T: Real>(
    t1: &SymMatrix<T>,
    t2: &SymMatrix<T>,
    lambda: T,
) -> Result<T, SpectralError> {
    let n = t1.dim();
    if t2.dim() != n {
        return Err(SpectralError::DimensionMismatch {
            expected: n,
            found: t2.dim(),
        });
    }
    let d1 = eig_sym(t1)?;
    let d2 = eig_sym(t2)?;
    let scale = d1.source_norm.max(d2.source_norm).max(lambda.abs());
    let tol = TolPolicy::Default.threshold(n, scale);
    let r1 = resolvent(&d1, lambda, tol)?;
    let r2 = resolvent(&d2, lambda, tol)?;
    let diff = t1.sub(t2);
    let lhs = r1.as_array() - r2.as_array();
    let right = r1.as_array().dot(diff.as_array()).dot(r2.as_array());
    let left = r2.as_array().dot(diff.as_array()).dot(r1.as_array());
    let e1 = spectral_norm((&lhs - &right).view());
    let e2 = spectral_norm((&lhs - &left).view());
    Ok(e1.max(e2))
}

fn resolvent<T: Real>(
    d: &SpectralDecomposition<T>,
    lambda: T,
    tol: T,
) -> Result<SymMatrix<T>, SpectralError> {
    for &mu in d.eigenvalues.iter() {
        if (lambda - mu).abs() <= tol {
            return Err(SpectralError::NearSpectrum {
                shift: lambda.to_f64_lossy(),
                eigenvalue: mu.to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
    }
    d.apply_fn(|mu| T::one() / (lambda - mu))
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
    fn eig_of_remark_matrix() {
        let d = eig_sym(&SymMatrix::from_diag(&[2.0, 0.5])).unwrap();
        assert_eq!(d.eigenvalues.to_vec(), vec![0.5, 2.0]);
        assert_eq!(d.source_norm, 2.0);
    }

    #[test]
    fn eig_of_identity() {
        for n in 1..6 {
            let d = eig_sym(&SymMatrix::<f64>::identity(n)).unwrap();
            assert!(d.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-15));
            let g = d.eigenvectors.t().dot(&d.eigenvectors);
            assert_abs_diff_eq!(g, Array2::eye(n), epsilon = 1e-14);
        }
    }

    #[test]
    fn eig_one_by_one() {
        let d = eig_sym(&sym(array![[-3.5]])).unwrap();
        assert_eq!(d.eigenvalues[0], -3.5);
        assert_eq!(d.eigenvectors[[0, 0]], 1.0);
    }

    #[test]
    fn eig_sign_convention() {
        let d = eig_sym(&sym(array![[2.0, 1.0], [1.0, 2.0]])).unwrap();
        for j in 0..2 {
            assert!(d.eigenvectors[[0, j]] > 0.0);
        }
        assert_abs_diff_eq!(d.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigenvalues[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_eigenspace_ordering_is_canonical() {
        let d = eig_sym(&SymMatrix::from_diag(&[1.0, -1.0, 1.0])).unwrap();
        let v = &d.eigenvectors;
        assert_eq!(v.column(0).to_vec(), vec![0.0, 1.0, 0.0]);
        assert_eq!(v.column(1).to_vec(), vec![1.0, 0.0, 0.0]);
        assert_eq!(v.column(2).to_vec(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_non_finite() {
        let err = SymMatrix::new(array![[1.0, f64::NAN], [f64::NAN, 1.0]]).unwrap_err();
        assert_eq!(err, SpectralError::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn rejects_asymmetric() {
        let err = SymMatrix::new(array![[1.0, 2.0], [0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, SpectralError::NotHermitian { .. }));
    }

    #[test]
    fn rejects_rectangular_and_empty() {
        assert!(matches!(
            SymMatrix::new(Array2::<f64>::zeros((2, 3))),
            Err(SpectralError::NotSquare { rows: 2, cols: 3 })
        ));
        assert_eq!(
            SymMatrix::new(Array2::<f64>::zeros((0, 0))),
            Err(SpectralError::Empty)
        );
    }

    #[test]
    fn tiny_asymmetry_is_averaged() {
        let m = SymMatrix::new(array![[1.0, 2.0], [2.0 + 1e-16, 1.0]]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn apply_fn_examples() {
        let d = SymMatrix::from_diag(&[4.0, 9.0]).eig().unwrap();
        let r = d.apply_fn(f64::sqrt).unwrap();
        assert_abs_diff_eq!(r.into_array(), array![[2.0, 0.0], [0.0, 3.0]], epsilon = 1e-15);

        let d = SymMatrix::from_diag(&[3.0, -2.0]).eig().unwrap();
        let r = d.apply_fn(f64::abs).unwrap();
        assert_abs_diff_eq!(r.into_array(), array![[3.0, 0.0], [0.0, 2.0]], epsilon = 1e-15);

        let d = SymMatrix::from_diag(&[2.0, 0.5]).eig().unwrap();
        let r = d.apply_fn(|x: f64| 1.0 / (x + 1.0).sqrt()).unwrap();
        let expected = array![[3f64.powf(-0.5), 0.0], [0.0, 1.5f64.powf(-0.5)]];
        assert_abs_diff_eq!(r.into_array(), expected, epsilon = 1e-15);
    }

    #[test]
    fn apply_fn_domain_error_names_eigenvalue() {
        let d = SymMatrix::from_diag(&[1.0, -4.0]).eig().unwrap();
        assert_eq!(
            d.apply_fn(f64::sqrt).unwrap_err(),
            SpectralError::Domain { eigenvalue: -4.0 }
        );
    }

    #[test]
    fn nullspace_examples() {
        let z = nullspace(&SymMatrix::<f64>::zeros(3), &TolPolicy::Default).unwrap();
        assert_eq!(z.dim(), 3);

        let k = nullspace(&SymMatrix::from_diag(&[0.0, 1.0, 2.0]), &TolPolicy::Default).unwrap();
        assert_eq!(k.dim(), 1);
        assert_abs_diff_eq!(k.vectors().column(0).to_owned(), array![1.0, 0.0, 0.0]);

        let k = nullspace(&sym(array![[1.0, 1.0], [1.0, 1.0]]), &TolPolicy::Default).unwrap();
        assert_eq!(k.dim(), 1);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(k.vectors().column(0).to_owned(), array![s, -s], epsilon = 1e-15);
    }

    #[test]
    fn norms_of_small_examples() {
        let m = SymMatrix::from_diag(&[2.0, 0.5]);
        assert_eq!(m.op_norm().unwrap(), 2.0);
        assert_eq!(m.min_abs_eig().unwrap(), 0.5);
        let swap = sym(array![[0.0, 1.0], [1.0, 0.0]]);
        assert_abs_diff_eq!(swap.op_norm().unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spectral_norm_rectangular() {
        let m = array![[3.0, 0.0, 0.0], [0.0, 4.0, 0.0]];
        assert_abs_diff_eq!(spectral_norm(m.view()), 4.0, epsilon = 1e-14);
        assert_eq!(spectral_norm(Array2::<f64>::zeros((3, 0)).view()), 0.0);
    }

    #[test]
    fn resolvent_identity_examples() {
        let t = sym(array![[1.0, 0.3], [0.3, -2.0]]);
        assert!(resolvent_identity_residual(&t, &t, 5.0).unwrap() < 1e-15);

        let t1 = SymMatrix::from_diag(&[1.0, 2.0]);
        let t2 = SymMatrix::from_diag(&[1.0, 3.0]);
        assert!(resolvent_identity_residual(&t1, &t2, 0.0).unwrap() <= 1e-14);
    }

    #[test]
    fn resolvent_rejects_shift_on_spectrum() {
        let t1 = SymMatrix::from_diag(&[1.0, 2.0]);
        let err = resolvent_identity_residual(&t1, &t1, 2.0).unwrap_err();
        assert!(matches!(err, SpectralError::NearSpectrum { eigenvalue, .. } if eigenvalue == 2.0));
    }

    #[test]
    fn principal_angles() {
        let e1 = SubspaceBasis::from_orthonormal(array![[1.0], [0.0]]);
        let e2 = SubspaceBasis::from_orthonormal(array![[0.0], [1.0]]);
        assert_eq!(principal_angle(&e1, &e1), 0.0);
        assert_abs_diff_eq!(principal_angle(&e1, &e2), std::f64::consts::FRAC_PI_2);
        let diag = SubspaceBasis::from_orthonormal(array![[0.5f64.sqrt()], [0.5f64.sqrt()]]);
        assert_abs_diff_eq!(
            principal_angle(&e1, &diag),
            std::f64::consts::FRAC_PI_4,
            epsilon = 1e-15
        );
        let t: SubspaceBasis<f64> = SubspaceBasis::trivial(2);
        assert_eq!(principal_angle(&t, &t), 0.0);
        assert_abs_diff_eq!(principal_angle(&t, &e1), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn intersection_of_planes() {
        // span{e1, e2} ∩ span{e2, e3} = span{e2}
        let a = SubspaceBasis::from_orthonormal(array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let b = SubspaceBasis::from_orthonormal(array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let c = intersection(&a, &b, &TolPolicy::Default).unwrap();
        assert_eq!(c.dim(), 1);
        assert_abs_diff_eq!(c.vectors().column(0).to_owned(), array![0.0, 1.0, 0.0], epsilon = 1e-15);
    }

    #[test]
    fn range_and_kernel_of_rectangular() {
        let t = array![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]];
        let ker = kernel_of(&t, &TolPolicy::Default).unwrap();
        assert_eq!(ker.dim(), 1);
        let ran = range_basis(&t, &TolPolicy::Default).unwrap();
        assert_eq!(ran.dim(), 1);
        assert_abs_diff_eq!(ran.vectors().column(0).to_owned(), array![1.0, 0.0, 0.0]);
    }

    #[test]
    fn direct_sum_layout() {
        let a = SubspaceBasis::from_orthonormal(array![[1.0], [0.0]]);
        let b = SubspaceBasis::from_orthonormal(array![[0.0], [1.0]]);
        let s = a.direct_sum(&b);
        assert_eq!(s.vectors(), &Array2::<f64>::eye(4).select(Axis(1), &[0, 3]));
    }

    #[test]
    fn works_in_single_precision() {
        let m = SymMatrix::<f32>::new(array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let d = m.eig().unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-6);
        assert!((d.eigenvalues[1] - 3.0).abs() < 1e-6);
    }
}

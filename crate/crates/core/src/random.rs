//! Seeded random ensembles and probe vectors.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Array2<T> {
    Array2::from_shape_simple_fn((rows, cols), || T::lit(rng.sample(StandardNormal)))
}

pub fn gaussian_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Array1<T> {
    Array1::from_shape_simple_fn(n, || T::lit(rng.sample(StandardNormal)))
}

pub fn unit_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Array1<T> {
    loop {
        let v = gaussian_vector::<T, R>(rng, n);
        let norm = v.dot(&v).sqrt();
        if norm > T::zero() {
            return v / norm;
        }
    }
}

/// Haar-ish random orthogonal matrix: Gram–Schmidt (applied twice) on a
/// Gaussian matrix.
pub fn random_orthogonal<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Array2<T> {
    let mut q = gaussian_matrix::<T, R>(rng, n, n);
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let qk = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-proj, &qk);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    q
}

/// Pairs `(x, y)` at which two sesquilinear forms are compared.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet<T: Real> {
    pub pairs: Vec<(Array1<T>, Array1<T>)>,
}

/// Canonical pairs are added only up to this dimension.
pub const CANONICAL_PROBE_MAX_DIM: usize = 16;

impl<T: Real> ProbeSet<T> {
    /// `2n` random unit Gaussian pairs, plus every `(e_i, e_j)` when
    /// `n ≤ 16`. Deterministic in `seed`.
    pub fn standard(n: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let mut pairs = Vec::new();
        for _ in 0..2 * n {
            let x = unit_vector::<T, _>(&mut rng, n);
            let y = unit_vector::<T, _>(&mut rng, n);
            pairs.push((x, y));
        }
        if n <= CANONICAL_PROBE_MAX_DIM {
            for i in 0..n {
                for j in 0..n {
                    let mut x = Array1::zeros(n);
                    let mut y = Array1::zeros(n);
                    x[i] = T::one();
                    y[j] = T::one();
                    pairs.push((x, y));
                }
            }
        }
        Self { pairs }
    }

    pub fn from_pairs(pairs: Vec<(Array1<T>, Array1<T>)>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = seeded(3);
        let q: Array2<f64> = random_orthogonal(&mut rng, 12);
        assert_abs_diff_eq!(q.t().dot(&q), Array2::eye(12), epsilon = 1e-13);
    }

    #[test]
    fn probe_counts() {
        assert_eq!(ProbeSet::<f64>::standard(3, 0).len(), 6 + 9);
        assert_eq!(ProbeSet::<f64>::standard(17, 0).len(), 34);
    }

    #[test]
    fn probes_are_deterministic() {
        assert_eq!(ProbeSet::<f64>::standard(5, 11), ProbeSet::<f64>::standard(5, 11));
        assert_ne!(ProbeSet::<f64>::standard(5, 11), ProbeSet::<f64>::standard(5, 12));
    }
}

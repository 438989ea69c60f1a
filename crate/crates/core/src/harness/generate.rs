//! Seeded instance generators.

use ndarray::{s, Array2};
use rand::Rng;

use super::spec::{Expectation, Problem, ProblemSpec};
use super::HarnessError;
use crate::random::{gaussian_matrix, random_orthogonal, seeded, SeededRng};
use crate::spectral::SymMatrix;
use crate::stability::counterexample_truncation;

pub const MAX_COUNTEREXAMPLE_SIZE: usize = 64;
pub const MAX_RANDOM_DIM: usize = 512;

/// `A = ⊕ diag(k+1, 1/(k+1))`, `H = ⊕ [[0,1],[1,0]]` for `k = 1..=n`,
/// with `force` set and no involution (so one is searched for).
pub fn gen_counterexample(n: usize) -> Result<ProblemSpec, HarnessError> {
    if !(1..=MAX_COUNTEREXAMPLE_SIZE).contains(&n) {
        return Err(HarnessError::Bound {
            what: "counterexample size",
            value: n,
            min: 1,
            max: MAX_COUNTEREXAMPLE_SIZE,
        });
    }
    let (a, h) = counterexample_truncation(n);
    let mut spec = ProblemSpec::new(Problem::General { a, h, j: None });
    spec.force = true;
    spec.expect = Some(Expectation::NoGap);
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomKind {
    /// `n ≥ 2`; the gap condition holds with `α* ≥ min(1, alpha)`.
    General { n: usize, alpha: f64 },
    OffDiagonal {
        plus_dim: usize,
        minus_dim: usize,
        /// Prescribed `dim Ker A₊`.
        plus_kernel: usize,
        /// Prescribed `dim Ker A₋`.
        minus_kernel: usize,
    },
}

pub fn gen_random(kind: RandomKind, seed: u64) -> Result<ProblemSpec, HarnessError> {
    let mut rng = seeded(seed);
    let problem = match kind {
        RandomKind::General { n, alpha } => {
            check_dim("n", n, 2)?;
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(HarnessError::Invalid(format!("alpha must be positive, got {alpha}")));
            }
            random_general(&mut rng, n, alpha)
        }
        RandomKind::OffDiagonal {
            plus_dim,
            minus_dim,
            plus_kernel,
            minus_kernel,
        } => {
            check_dim("plus_dim", plus_dim, 1)?;
            check_dim("minus_dim", minus_dim, 1)?;
            check_dim("plus_dim + minus_dim", plus_dim + minus_dim, 2)?;
            for (what, k, d) in [("plus_kernel", plus_kernel, plus_dim), ("minus_kernel", minus_kernel, minus_dim)] {
                if k > d {
                    return Err(HarnessError::Bound {
                        what,
                        value: k,
                        min: 0,
                        max: d,
                    });
                }
            }
            random_offdiag(&mut rng, plus_dim, minus_dim, plus_kernel, minus_kernel)
        }
    };
    let mut spec = ProblemSpec::new(problem);
    spec.seed = seed;
    if matches!(kind, RandomKind::General { .. }) {
        spec.expect = Some(Expectation::Certified);
    }
    Ok(spec)
}

fn check_dim(what: &'static str, n: usize, min: usize) -> Result<(), HarnessError> {
    if n < min || n > MAX_RANDOM_DIM {
        return Err(HarnessError::Bound {
            what,
            value: n,
            min,
            max: MAX_RANDOM_DIM,
        });
    }
    Ok(())
}

fn conjugate(q: &Array2<f64>, core: &Array2<f64>) -> SymMatrix<f64> {
    SymMatrix::symmetrized(q.dot(core).dot(&q.t()))
        .expect("finite square")
        .0
}

/// Non-negative spectrum with exactly `zeros` zero eigenvalues, the rest in
/// `[0.2, 3]`.
fn psd_spectrum(rng: &mut SeededRng, n: usize, zeros: usize) -> Vec<f64> {
    let mut d: Vec<f64> = (0..n)
        .map(|i| if i < zeros { 0.0 } else { rng.random_range(0.2..3.0) })
        .collect();
    // Zeros at random positions.
    for i in (1..n).rev() {
        let k = rng.random_range(0..=i);
        d.swap(i, k);
    }
    d
}

/// Definite block `margin·I + G Gᵀ / m` of size `m`.
fn definite_block(rng: &mut SeededRng, m: usize, margin: f64) -> Array2<f64> {
    let g: Array2<f64> = gaussian_matrix(rng, m, m);
    Array2::eye(m) * margin + g.dot(&g.t()) / m as f64
}

fn random_general(rng: &mut SeededRng, n: usize, alpha: f64) -> Problem {
    let q = random_orthogonal::<f64, _>(rng, n);
    let plus = rng.random_range(1..n);
    let minus = n - plus;
    let zeros = rng.random_range(0..=n.min(3));

    let mut signs = Array2::zeros((n, n));
    for i in 0..n {
        signs[[i, i]] = if i < plus { 1.0 } else { -1.0 };
    }
    let a_diag = psd_spectrum(rng, n, zeros);
    let a_core = Array2::from_diag(&ndarray::Array1::from(a_diag));

    let margin = alpha * 1.05;
    let mut h_core = Array2::zeros((n, n));
    h_core
        .slice_mut(s![..plus, ..plus])
        .assign(&definite_block(rng, plus, margin));
    h_core
        .slice_mut(s![plus.., plus..])
        .assign(&-definite_block(rng, minus, margin));
    let coupling: Array2<f64> = gaussian_matrix::<f64, _>(rng, plus, minus) / (n as f64).sqrt();
    h_core.slice_mut(s![..plus, plus..]).assign(&coupling);
    h_core.slice_mut(s![plus.., ..plus]).assign(&coupling.t());

    Problem::General {
        a: conjugate(&q, &a_core),
        h: conjugate(&q, &h_core),
        j: Some(conjugate(&q, &signs)),
    }
}

/// PSD matrix with `zeros` kernel dimensions, and its eigenbasis ordered
/// kernel first.
fn random_psd(rng: &mut SeededRng, n: usize, zeros: usize) -> (SymMatrix<f64>, Array2<f64>) {
    let q = random_orthogonal::<f64, _>(rng, n);
    let d = psd_spectrum(rng, n, zeros);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| d[i] != 0.0);
    let mut basis = Array2::zeros((n, n));
    for (c, &i) in order.iter().enumerate() {
        basis.column_mut(c).assign(&q.column(i));
    }
    let core = Array2::from_diag(&ndarray::Array1::from(d));
    (conjugate(&q, &core), basis)
}

/// Projector onto the span of the columns of the orthonormal `basis` from
/// index `k` on: the complement of the first `k`, exactly zero when `k = n`.
fn complement_of(basis: &Array2<f64>, k: usize) -> Array2<f64> {
    let rest = basis.slice(s![.., k..]);
    rest.dot(&rest.t())
}

/// `A±` with the requested kernel dimensions and `T` of random rank whose
/// range and co-range avoid a random number of kernel vectors, so that the
/// kernel of the assembled operator is generically nontrivial.
fn random_offdiag(
    rng: &mut SeededRng,
    p: usize,
    q: usize,
    plus_kernel: usize,
    minus_kernel: usize,
) -> Problem {
    let (a_plus, basis_plus) = random_psd(rng, p, plus_kernel);
    let (a_minus, basis_minus) = random_psd(rng, q, minus_kernel);
    let keep_plus = rng.random_range(0..=plus_kernel);
    let keep_minus = rng.random_range(0..=minus_kernel);
    let rank = rng.random_range(0..=p.min(q));

    let left: Array2<f64> = gaussian_matrix(rng, p, rank);
    let right: Array2<f64> = gaussian_matrix(rng, rank, q);
    let scale = 1.0 / ((p.max(q) * rank.max(1)) as f64).sqrt();
    let t = complement_of(&basis_plus, keep_plus)
        .dot(&left)
        .dot(&right)
        .dot(&complement_of(&basis_minus, keep_minus))
        * scale;
    Problem::OffDiagonal { a_plus, a_minus, t }
}

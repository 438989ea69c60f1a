//! Numerical thresholds used by the checks. Values are stated for `f64` and
//! rescaled to the working precision through [`Real::tol`].

use crate::scalar::Real;
use crate::spectral::TolPolicy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T: Real> {
    /// Relative commutation tolerance, `‖JA - AJ‖ ≤ commute·‖A‖`.
    pub commute: T,
    /// Agreement of two algebraic routes to the same operator, relative to
    /// the instance scale.
    pub consistency: T,
    /// Bound on normalised representation residuals.
    pub residual: T,
    /// Allowed negative slack in `min|σ(B+J)| - c`.
    pub gap_margin: T,
    /// Allowed slack in `c ≤ α*` and `c ≤ 1`.
    pub alpha_slack: T,
    /// Largest principal angle accepted between two kernels.
    pub angle: T,
    /// Bound on residuals of the domain-stability operators.
    pub stability: T,
    /// Rule for "numerically zero" eigenvalues.
    pub kernel: TolPolicy<T>,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            commute: T::tol(1e-10),
            consistency: T::tol(1e-10),
            residual: T::tol(1e-10),
            gap_margin: T::tol(1e-8),
            alpha_slack: T::tol(1e-10),
            angle: T::tol(1e-8),
            stability: T::tol(1e-10),
            kernel: TolPolicy::Default,
        }
    }
}

impl<T: Real> Tolerances<T> {
    /// Multiplies every threshold (including the kernel rule) by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let kernel = match self.kernel {
            TolPolicy::Default => TolPolicy::EpsMultiple(factor),
            TolPolicy::EpsMultiple(k) => TolPolicy::EpsMultiple(k * factor),
            TolPolicy::Relative(r) => TolPolicy::Relative(r * factor),
            TolPolicy::Absolute(t) => TolPolicy::Absolute(t * factor),
        };
        Self {
            commute: self.commute * factor,
            consistency: self.consistency * factor,
            residual: self.residual * factor,
            gap_margin: self.gap_margin * factor,
            alpha_slack: self.alpha_slack * factor,
            angle: self.angle * factor,
            stability: self.stability * factor,
            kernel,
        }
    }

    /// Kernel threshold for an `n×n` matrix of norm `norm`.
    pub fn zero_threshold(&self, n: usize, norm: T) -> T {
        self.kernel.threshold(n, norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_multiplies_everything() {
        let t = Tolerances::<f64>::default().scaled(10.0);
        assert_eq!(t.residual, 1e-9);
        assert_eq!(t.gap_margin, 1e-7);
        assert_eq!(t.kernel, TolPolicy::EpsMultiple(10.0));
        assert_eq!(t.zero_threshold(2, 1.0), 20.0 * f64::EPSILON);
    }
}

//! Problem files, instance generators and the report-producing runner
//! behind the command line tool. Everything here works in `f64`.

mod generate;
mod run;
mod spec;

use thiserror::Error;

use crate::general::RepError;
use crate::involution::InvolutionError;
use crate::spectral::SpectralError;
use crate::stability::StabilityError;

pub use generate::{gen_counterexample, gen_random, RandomKind, MAX_COUNTEREXAMPLE_SIZE, MAX_RANDOM_DIM};
pub use run::{
    run, Check, CertificateSummary, FamilySummary, KernelSummary, Report, RepresentationSummary,
    RunMode, RunOptions, StabilitySummary, SufficientSummary, SweepSummary,
};
pub use spec::{load_spec, save_spec, Expectation, Problem, ProblemSpec, ToleranceOverrides};

/// Largest truncation size accepted in a family spec.
pub const MAX_FAMILY_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field {field} required for kind {kind}")]
    MissingField {
        field: &'static str,
        kind: &'static str,
    },
    #[error("unknown kind {0:?} (expected general, offdiag or family)")]
    UnknownKind(String),
    #[error("unknown family {0:?} (expected counterexample or constant)")]
    UnknownFamily(String),
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("matrix {matrix} entry ({row}, {col}) is not a finite number: {text:?}")]
    BadEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
        text: String,
    },
    #[error("{what} = {value} outside [{min}, {max}]")]
    Bound {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("representation: {0}")]
    Rep(#[from] RepError),
    #[error("stability: {0}")]
    Stability(#[from] StabilityError),
    #[error("spectral: {0}")]
    Spectral(#[from] SpectralError),
    #[error("involution: {0}")]
    Involution(#[from] InvolutionError),
}

impl HarnessError {
    /// Input problems (exit code 2) as opposed to internal failures.
    pub fn is_input_error(&self) -> bool {
        match self {
            HarnessError::Rep(e) => e.is_input_error(),
            HarnessError::Stability(StabilityError::Rep(e)) => e.is_input_error(),
            HarnessError::Stability(StabilityError::SizeGuard { .. })
            | HarnessError::Stability(StabilityError::DimensionMismatch { .. }) => true,
            HarnessError::Stability(_) => false,
            HarnessError::Spectral(SpectralError::NoConvergence { .. }) => false,
            _ => true,
        }
    }
}

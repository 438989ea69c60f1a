//! Problem files: JSON parsing and serialization.
//!
//! Matrices are row-major arrays of decimal strings; writing uses 17
//! significant digits so that reading back reproduces every `f64` exactly.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::spectral::{SymMatrix, TolPolicy};
use crate::stability::FamilyKind;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    General {
        a: SymMatrix<f64>,
        h: SymMatrix<f64>,
        /// Without `J`, diagonal involutions are swept.
        j: Option<SymMatrix<f64>>,
    },
    OffDiagonal {
        a_plus: SymMatrix<f64>,
        a_minus: SymMatrix<f64>,
        t: Array2<f64>,
    },
    Family {
        kind: FamilyKind,
        sizes: Vec<usize>,
    },
}

impl Problem {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Problem::General { .. } => "general",
            Problem::OffDiagonal { .. } => "offdiag",
            Problem::Family { .. } => "family",
        }
    }
}

/// Expected outcome of the gap check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Certified,
    /// No involution satisfies the gap condition; that outcome passes.
    NoGap,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commute: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<f64>,
    /// Zero threshold becomes `k · n · eps · ‖M‖`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_eps_multiple: Option<f64>,
}

impl ToleranceOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn resolve(&self) -> Tolerances<f64> {
        let mut t = Tolerances::default();
        let set = |field: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *field = v;
            }
        };
        set(&mut t.commute, self.commute);
        set(&mut t.consistency, self.consistency);
        set(&mut t.residual, self.residual);
        set(&mut t.gap_margin, self.gap_margin);
        set(&mut t.alpha_slack, self.alpha_slack);
        set(&mut t.angle, self.angle);
        set(&mut t.stability, self.stability);
        if let Some(k) = self.kernel_eps_multiple {
            t.kernel = TolPolicy::EpsMultiple(k);
        }
        match self.tol_scale {
            Some(s) => t.scaled(s),
            None => t,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let fields = [
            ("tol_scale", self.tol_scale),
            ("commute", self.commute),
            ("consistency", self.consistency),
            ("residual", self.residual),
            ("gap_margin", self.gap_margin),
            ("alpha_slack", self.alpha_slack),
            ("angle", self.angle),
            ("stability", self.stability),
            ("kernel_eps_multiple", self.kernel_eps_multiple),
        ];
        for (name, v) in fields {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(HarnessError::Invalid(format!(
                        "tolerance {name} must be a positive finite number, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub problem: Problem,
    pub seed: u64,
    pub tolerances: ToleranceOverrides,
    pub force: bool,
    pub expect: Option<Expectation>,
}

impl ProblemSpec {
    pub fn new(problem: Problem) -> Self {
        Self {
            problem,
            seed: 0,
            tolerances: ToleranceOverrides::default(),
            force: false,
            expect: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        raw.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawSpec::from(self)).expect("spec serializes")
    }

    /// The on-disk form, as JSON.
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(RawSpec::from(self)).expect("spec serializes")
    }
}

pub fn load_spec(path: &Path) -> Result<ProblemSpec, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ProblemSpec::from_json(&text)
}

pub fn save_spec(spec: &ProblemSpec, path: &Path) -> Result<(), HarnessError> {
    let mut text = spec.to_json();
    text.push('\n');
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Matrix entry as read: a decimal string or a bare JSON number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Text(String),
    Number(f64),
}

type RawMatrix = Vec<Vec<Entry>>;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrices {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a: Option<RawMatrix>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    h: Option<RawMatrix>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    j: Option<RawMatrix>,
    #[serde(rename = "A_plus", default, skip_serializing_if = "Option::is_none")]
    a_plus: Option<RawMatrix>,
    #[serde(rename = "A_minus", default, skip_serializing_if = "Option::is_none")]
    a_minus: Option<RawMatrix>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    t: Option<RawMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    name: String,
    sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrices: Option<RawMatrices>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<RawFamily>,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    tolerances: ToleranceOverrides,
    #[serde(default)]
    force: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expect: Option<Expectation>,
}

fn encode(m: &Array2<f64>) -> RawMatrix {
    m.rows()
        .into_iter()
        .map(|row| row.iter().map(|x| Entry::Text(format!("{x:.16e}"))).collect())
        .collect()
}

fn decode(name: &'static str, raw: &RawMatrix) -> Result<Array2<f64>, HarnessError> {
    let rows = raw.len();
    let cols = raw.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(HarnessError::Invalid(format!("matrix {name} is empty")));
    }
    let mut out = Array2::zeros((rows, cols));
    for (i, row) in raw.iter().enumerate() {
        if row.len() != cols {
            return Err(HarnessError::Dimension {
                what: format!("row {i} of {name}"),
                expected: cols,
                found: row.len(),
            });
        }
        for (j, e) in row.iter().enumerate() {
            let x = match e {
                Entry::Number(x) => *x,
                Entry::Text(s) => s.trim().parse::<f64>().map_err(|_| HarnessError::BadEntry {
                    matrix: name,
                    row: i,
                    col: j,
                    text: s.clone(),
                })?,
            };
            if !x.is_finite() {
                return Err(HarnessError::BadEntry {
                    matrix: name,
                    row: i,
                    col: j,
                    text: x.to_string(),
                });
            }
            out[[i, j]] = x;
        }
    }
    Ok(out)
}

fn decode_sym(name: &'static str, raw: &RawMatrix) -> Result<SymMatrix<f64>, HarnessError> {
    let m = decode(name, raw)?;
    if m.nrows() != m.ncols() {
        return Err(HarnessError::Dimension {
            what: format!("columns of {name}"),
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let (sym, asym) = SymMatrix::symmetrized(m)?;
    if asym > 0.0 {
        log::info!("symmetrized {name}: max asymmetry {asym:e}");
    }
    Ok(sym)
}

fn require<'a>(field: &'static str, kind: &'static str, m: &'a Option<RawMatrix>) -> Result<&'a RawMatrix, HarnessError> {
    m.as_ref().ok_or(HarnessError::MissingField { field, kind })
}

fn reject(field: &'static str, kind: &'static str, present: bool) -> Result<(), HarnessError> {
    if present {
        Err(HarnessError::Invalid(format!("field {field} not allowed for kind {kind}")))
    } else {
        Ok(())
    }
}

fn same_dim(what: &'static str, n: usize, found: usize) -> Result<(), HarnessError> {
    if n != found {
        return Err(HarnessError::Dimension {
            what: what.to_string(),
            expected: n,
            found,
        });
    }
    Ok(())
}

impl RawSpec {
    fn validate(self) -> Result<ProblemSpec, HarnessError> {
        self.tolerances.validate()?;
        let matrices = self.matrices.unwrap_or_default();
        let problem = match self.kind.as_str() {
            "general" => {
                const K: &str = "general";
                reject("family", K, self.family.is_some())?;
                reject("A_plus", K, matrices.a_plus.is_some())?;
                reject("A_minus", K, matrices.a_minus.is_some())?;
                reject("T", K, matrices.t.is_some())?;
                let a = decode_sym("A", require("A", K, &matrices.a)?)?;
                let h = decode_sym("H", require("H", K, &matrices.h)?)?;
                same_dim("H", a.dim(), h.dim())?;
                let j = match &matrices.j {
                    Some(raw) => {
                        let j = decode_sym("J", raw)?;
                        same_dim("J", a.dim(), j.dim())?;
                        Some(j)
                    }
                    None => None,
                };
                Problem::General { a, h, j }
            }
            "offdiag" => {
                const K: &str = "offdiag";
                reject("family", K, self.family.is_some())?;
                reject("A", K, matrices.a.is_some())?;
                reject("H", K, matrices.h.is_some())?;
                reject("J", K, matrices.j.is_some())?;
                let a_plus = decode_sym("A_plus", require("A_plus", K, &matrices.a_plus)?)?;
                let a_minus = decode_sym("A_minus", require("A_minus", K, &matrices.a_minus)?)?;
                let t = decode("T", require("T", K, &matrices.t)?)?;
                same_dim("rows of T", a_plus.dim(), t.nrows())?;
                same_dim("columns of T", a_minus.dim(), t.ncols())?;
                Problem::OffDiagonal { a_plus, a_minus, t }
            }
            "family" => {
                const K: &str = "family";
                let any_matrix = matrices.a.is_some()
                    || matrices.h.is_some()
                    || matrices.j.is_some()
                    || matrices.a_plus.is_some()
                    || matrices.a_minus.is_some()
                    || matrices.t.is_some();
                reject("matrices", K, any_matrix)?;
                let fam = self.family.ok_or(HarnessError::MissingField {
                    field: "family",
                    kind: K,
                })?;
                let kind = FamilyKind::from_name(&fam.name)
                    .ok_or_else(|| HarnessError::UnknownFamily(fam.name.clone()))?;
                if fam.sizes.is_empty() {
                    return Err(HarnessError::Invalid("family sizes must not be empty".into()));
                }
                if let Some(&n) = fam.sizes.iter().find(|&&n| n == 0 || n > super::MAX_FAMILY_SIZE) {
                    return Err(HarnessError::Bound {
                        what: "family size",
                        value: n,
                        min: 1,
                        max: super::MAX_FAMILY_SIZE,
                    });
                }
                Problem::Family {
                    kind,
                    sizes: fam.sizes,
                }
            }
            other => return Err(HarnessError::UnknownKind(other.to_string())),
        };
        Ok(ProblemSpec {
            problem,
            seed: self.seed,
            tolerances: self.tolerances,
            force: self.force,
            expect: self.expect,
        })
    }
}

impl From<&ProblemSpec> for RawSpec {
    fn from(spec: &ProblemSpec) -> Self {
        let mut matrices = RawMatrices::default();
        let mut family = None;
        match &spec.problem {
            Problem::General { a, h, j } => {
                matrices.a = Some(encode(a.as_array()));
                matrices.h = Some(encode(h.as_array()));
                matrices.j = j.as_ref().map(|j| encode(j.as_array()));
            }
            Problem::OffDiagonal { a_plus, a_minus, t } => {
                matrices.a_plus = Some(encode(a_plus.as_array()));
                matrices.a_minus = Some(encode(a_minus.as_array()));
                matrices.t = Some(encode(t));
            }
            Problem::Family { kind, sizes } => {
                family = Some(RawFamily {
                    name: kind.name().to_string(),
                    sizes: sizes.clone(),
                });
            }
        }
        let has_matrices = !matches!(spec.problem, Problem::Family { .. });
        RawSpec {
            kind: spec.problem.kind_name().to_string(),
            matrices: has_matrices.then_some(matrices),
            family,
            seed: spec.seed,
            tolerances: spec.tolerances,
            force: spec.force,
            expect: spec.expect,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    const MINIMAL_GENERAL: &str = r#"{
        "kind": "general",
        "matrices": {
            "A": [["1", "0"], ["0", "2"]],
            "H": [["1", "0.5"], ["0.5", "-1"]],
            "J": [["1", "0"], ["0", "-1"]]
        }
    }"#;

    #[test]
    fn minimal_general_loads() {
        let s = ProblemSpec::from_json(MINIMAL_GENERAL).unwrap();
        assert_eq!(s.problem.kind_name(), "general");
        assert_eq!(s.seed, 0);
        assert!(!s.force);
        match s.problem {
            Problem::General { h, j, .. } => {
                assert_eq!(h.get(0, 1), 0.5);
                assert!(j.is_some());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn offdiag_requires_t() {
        let text = r#"{"kind": "offdiag", "matrices": {"A_plus": [["1"]], "A_minus": [["1"]]}}"#;
        let err = ProblemSpec::from_json(text).unwrap_err();
        assert_eq!(err.to_string(), "field T required for kind offdiag");
        assert!(err.is_input_error());
    }

    #[test]
    fn family_loads() {
        let text = r#"{"kind": "family", "family": {"name": "counterexample", "sizes": [1, 2, 3]}}"#;
        let s = ProblemSpec::from_json(text).unwrap();
        assert_eq!(
            s.problem,
            Problem::Family {
                kind: FamilyKind::Counterexample,
                sizes: vec![1, 2, 3]
            }
        );
    }

    #[test]
    fn unknown_kind() {
        let err = ProblemSpec::from_json(r#"{"kind": "diagonal"}"#).unwrap_err();
        assert!(matches!(err, HarnessError::UnknownKind(ref k) if k == "diagonal"));
    }

    #[test]
    fn parse_error_carries_position() {
        let err = ProblemSpec::from_json("{\n  \"kind\": \"general\",\n  oops\n}").unwrap_err();
        match err {
            HarnessError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let text = r#"{"kind": "general", "matrices": {"A": [["1"]], "H": [["1","0"],["0","1"]]}}"#;
        assert!(matches!(
            ProblemSpec::from_json(text),
            Err(HarnessError::Dimension { .. })
        ));
        let text = r#"{"kind": "offdiag", "matrices": {"A_plus": [["1"]], "A_minus": [["1"]], "T": [["1", "2"]]}}"#;
        assert!(matches!(
            ProblemSpec::from_json(text),
            Err(HarnessError::Dimension { .. })
        ));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"kind": "family", "family": {"name": "constant", "sizes": [1]}, "colour": 3}"#;
        assert!(matches!(ProblemSpec::from_json(text), Err(HarnessError::Parse { .. })));
    }

    #[test]
    fn bad_entry_reported() {
        let text = r#"{"kind": "general", "matrices": {"A": [["one"]], "H": [["1"]]}}"#;
        assert!(matches!(
            ProblemSpec::from_json(text),
            Err(HarnessError::BadEntry { matrix: "A", row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn asymmetric_input_is_symmetrized() {
        let text = r#"{"kind": "general", "matrices": {"A": [["1", "0.2"], ["0.4", "1"]], "H": [["1","0"],["0","-1"]]}}"#;
        let s = ProblemSpec::from_json(text).unwrap();
        match s.problem {
            Problem::General { a, .. } => assert_eq!(a.get(0, 1), a.get(1, 0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn awkward_values_round_trip() {
        let t = array![[0.1, 1.0 / 3.0, -2.0e-300], [f64::MAX, f64::MIN_POSITIVE, 5e-324]];
        let spec = ProblemSpec::new(Problem::OffDiagonal {
            a_plus: SymMatrix::from_diag(&[0.0, 1.0]),
            a_minus: SymMatrix::from_diag(&[1.0 / 7.0, 2.0, 3.0]),
            t,
        });
        let back = ProblemSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn tolerance_overrides() {
        let o = ToleranceOverrides {
            residual: Some(1e-6),
            tol_scale: Some(10.0),
            ..Default::default()
        };
        let t = o.resolve();
        approx::assert_relative_eq!(t.residual, 1e-5, max_relative = 1e-15);
        assert_eq!(t.commute, 1e-9);
        let bad = r#"{"kind": "family", "family": {"name": "constant", "sizes": [1]}, "tolerances": {"residual": -1}}"#;
        assert!(matches!(ProblemSpec::from_json(bad), Err(HarnessError::Invalid(_))));
    }
}

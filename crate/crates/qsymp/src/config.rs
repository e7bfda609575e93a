//! Experiment configuration: a strict JSON schema, a named-constant grammar
//! for matrix entries, and load-time re-validation of every module
//! precondition the configured experiment will rely on.
//!
//! Irrational frequency entries must survive serialization exactly, so
//! matrix and profile-frequency entries accept either a JSON number or a
//! string expression over the named constants `sqrt2`, `sqrt3`, `golden`
//! combined with decimals by `+`, `-`, and `*` (e.g. `"sqrt2-1"`,
//! `"0.5*golden"`).

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::annulus::{ProfileMode, RadialProfile};
use crate::critical::IndexClass;
use crate::error::QsympError;
use crate::field::{Mode, QuasiPeriodicScalar, TorusPoint};
use crate::flow::{TimeMode, TimePeriodicField};

/// Which procedure a config drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SpectralCheck,
    FixedPoints,
    ErgodicDensity,
    KacRice,
    Coarea,
    Flow,
    Pb2d,
    Xval,
    MeanDisplacement,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SpectralCheck => "spectral-check",
            ExperimentKind::FixedPoints => "fixed-points",
            ExperimentKind::ErgodicDensity => "ergodic-density",
            ExperimentKind::KacRice => "kac-rice",
            ExperimentKind::Coarea => "coarea",
            ExperimentKind::Flow => "flow",
            ExperimentKind::Pb2d => "pb2d",
            ExperimentKind::Xval => "xval",
            ExperimentKind::MeanDisplacement => "mean-displacement",
        }
    }
}

/// A numeric entry: either a JSON number or a constant expression string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Expression(String),
}

impl Entry {
    pub fn resolve(&self) -> Result<f64, QsympError> {
        match self {
            Entry::Number(x) => Ok(*x),
            Entry::Expression(s) => {
                parse_const_expr(s).map_err(|e| QsympError::Config(format!("entry {s:?}: {e}")))
            }
        }
    }
}

fn named_constant(name: &str) -> Option<f64> {
    match name {
        "sqrt2" => Some(2.0_f64.sqrt()),
        "sqrt3" => Some(3.0_f64.sqrt()),
        "golden" => Some(0.5 * (1.0 + 5.0_f64.sqrt())),
        _ => None,
    }
}

/// Parse a sum of signed terms, each `decimal`, `name`, or `decimal*name`.
pub fn parse_const_expr(input: &str) -> Result<f64, String> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty expression".into());
    }
    // Split into signed terms; a '+'/'-' right after 'e' or 'E' belongs to a
    // scientific-notation exponent, not a new term.
    let mut terms: Vec<String> = Vec::new();
    let mut current = String::new();
    for (i, ch) in s.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 {
            let prev = s.as_bytes()[i - 1] as char;
            if prev != 'e' && prev != 'E' {
                terms.push(std::mem::take(&mut current));
                current.push(ch);
                continue;
            }
        }
        current.push(ch);
    }
    terms.push(current);

    let mut total = 0.0;
    for term in terms {
        if term.is_empty() || term == "+" || term == "-" {
            return Err(format!("dangling sign in {input:?}"));
        }
        let (sign, body) = match term.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, term.strip_prefix('+').unwrap_or(&term)),
        };
        let value = if let Some((coef, name)) = body.split_once('*') {
            let c: f64 = coef
                .parse()
                .map_err(|_| format!("bad coefficient {coef:?} in {input:?}"))?;
            let k = named_constant(name)
                .ok_or_else(|| format!("unknown constant {name:?} in {input:?}"))?;
            c * k
        } else if let Some(k) = named_constant(body) {
            k
        } else {
            body.parse::<f64>()
                .map_err(|_| format!("unknown term {body:?} in {input:?}"))?
        };
        total += sign * value;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub m: Vec<i64>,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeModeSpec {
    pub m: Vec<i64>,
    #[serde(default)]
    pub k: i64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileModeSpec {
    pub nu: Entry,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default = "default_slope")]
    pub slope: f64,
    pub beta: f64,
    pub modes: Vec<ProfileModeSpec>,
}

fn default_slope() -> f64 {
    1.0
}

/// How census points are filtered by Hessian signature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexClassSpec {
    Any,
    DetPositive,
    DetNegative,
    Morse(usize),
}

impl IndexClassSpec {
    pub fn to_class(&self) -> IndexClass {
        match self {
            IndexClassSpec::Any => IndexClass::Any,
            IndexClassSpec::DetPositive => IndexClass::DetPositive,
            IndexClassSpec::DetNegative => IndexClass::DetNegative,
            IndexClassSpec::Morse(k) => IndexClass::Morse(*k),
        }
    }
}

/// The on-disk experiment schema. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_matrix: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_modes: Option<Vec<TimeModeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_class: Option<IndexClassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_radius: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

/// A config with every referenced object constructed and every module
/// precondition re-checked.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub raw: ExperimentConfig,
    pub matrix: Option<DMatrix<f64>>,
    pub field: Option<QuasiPeriodicScalar>,
    pub time_field: Option<TimePeriodicField>,
    pub profile: Option<RadialProfile>,
    pub base: Option<TorusPoint>,
}

impl ResolvedConfig {
    pub fn matrix(&self) -> Result<&DMatrix<f64>, QsympError> {
        self.matrix
            .as_ref()
            .ok_or_else(|| QsympError::Config("this experiment needs a frequency_matrix".into()))
    }

    pub fn field(&self) -> Result<&QuasiPeriodicScalar, QsympError> {
        self.field
            .as_ref()
            .ok_or_else(|| QsympError::Config("this experiment needs field modes".into()))
    }

    pub fn time_field(&self) -> Result<&TimePeriodicField, QsympError> {
        self.time_field
            .as_ref()
            .ok_or_else(|| QsympError::Config("this experiment needs time_modes".into()))
    }

    pub fn profile(&self) -> Result<&RadialProfile, QsympError> {
        self.profile
            .as_ref()
            .ok_or_else(|| QsympError::Config("this experiment needs a profile".into()))
    }

    /// Base torus point; defaults to the origin of the field's torus.
    pub fn base_or_zero(&self) -> Result<TorusPoint, QsympError> {
        match (&self.base, &self.matrix) {
            (Some(b), _) => Ok(b.clone()),
            (None, Some(a)) => Ok(TorusPoint::zero(a.nrows())),
            (None, None) => Err(QsympError::Config(
                "no base point and no frequency matrix to infer a torus from".into(),
            )),
        }
    }

    pub fn index_class(&self) -> IndexClass {
        self.raw
            .index_class
            .as_ref()
            .map(IndexClassSpec::to_class)
            .unwrap_or(IndexClass::Any)
    }

    pub fn map_dim(&self) -> Result<usize, QsympError> {
        self.raw
            .map_dim
            .ok_or_else(|| QsympError::Config("this experiment needs map_dim".into()))
    }
}

fn resolve_matrix(spec: &[Vec<Entry>]) -> Result<DMatrix<f64>, QsympError> {
    let rows = spec.len();
    let cols = spec.first().map(Vec::len).unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(QsympError::Config("frequency_matrix is empty".into()));
    }
    let mut a = DMatrix::zeros(rows, cols);
    for (i, row) in spec.iter().enumerate() {
        if row.len() != cols {
            return Err(QsympError::Config(format!(
                "frequency_matrix row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
        for (j, entry) in row.iter().enumerate() {
            a[(i, j)] = entry.resolve()?;
        }
    }
    Ok(a)
}

/// Structural validation shared by every experiment; returns all violations
/// at once so a bad config is diagnosed in one pass.
fn validate(cfg: &ExperimentConfig) -> Result<ResolvedConfig, QsympError> {
    let mut violations: Vec<String> = Vec::new();

    let matrix = match &cfg.frequency_matrix {
        Some(spec) => match resolve_matrix(spec) {
            Ok(a) => {
                if a.nrows() < a.ncols() {
                    violations.push(format!(
                        "dimension: frequency matrix has N = {} rows < n = {} columns",
                        a.nrows(),
                        a.ncols()
                    ));
                }
                let gram = a.transpose() * &a;
                if gram.clone().lu().determinant().abs() <= 1e-12 {
                    violations.push("frequency matrix is rank-deficient (AᵀA singular)".into());
                }
                Some(a)
            }
            Err(e) => {
                violations.push(e.to_string());
                None
            }
        },
        None => None,
    };

    if let (Some(d), Some(a)) = (cfg.map_dim, &matrix) {
        if a.ncols() != 2 * d {
            violations.push(format!(
                "dimension: map_dim = {d} needs a frequency matrix with {} columns, found {}",
                2 * d,
                a.ncols()
            ));
        }
    }

    let base = match (&cfg.base, &matrix) {
        (Some(b), Some(a)) if b.len() != a.nrows() => {
            violations.push(format!(
                "base point has {} coordinates but the torus dimension is {}",
                b.len(),
                a.nrows()
            ));
            None
        }
        (Some(b), _) => Some(TorusPoint::from_slice(b)),
        (None, _) => None,
    };

    let field = match (&cfg.modes, &matrix) {
        (Some(modes), Some(a)) => {
            let built = QuasiPeriodicScalar::new(
                a.nrows(),
                modes
                    .iter()
                    .map(|m| Mode {
                        m: m.m.clone(),
                        c: m.c,
                        s: m.s,
                    })
                    .collect::<Vec<_>>(),
            );
            match built {
                Ok(f) => {
                    for mode in f.modes() {
                        let pulled = crate::field::pulled_frequency(a, &mode.m);
                        if pulled.norm() <= 1e-12 && mode.amplitude() > 0.0 {
                            violations.push(format!(
                                "resonant mode {:?}: Aᵀm vanishes although the matrix is \
                                 declared ergodic",
                                mode.m
                            ));
                        }
                    }
                    Some(f)
                }
                Err(e) => {
                    violations.push(e.to_string());
                    None
                }
            }
        }
        (Some(_), None) => {
            violations.push("field modes given without a frequency_matrix".into());
            None
        }
        (None, _) => None,
    };

    let time_field = match (&cfg.time_modes, &matrix) {
        (Some(modes), Some(a)) => {
            let built = TimePeriodicField::new(
                a.nrows(),
                modes.iter().map(|m| TimeMode {
                    m: m.m.clone(),
                    k: m.k,
                    c: m.c,
                    s: m.s,
                }),
            );
            match built {
                Ok(f) => Some(f),
                Err(e) => {
                    violations.push(e.to_string());
                    None
                }
            }
        }
        (Some(_), None) => {
            violations.push("time modes given without a frequency_matrix".into());
            None
        }
        (None, _) => None,
    };

    let profile = match &cfg.profile {
        Some(spec) => {
            let modes: Result<Vec<ProfileMode>, QsympError> = spec
                .modes
                .iter()
                .map(|m| {
                    Ok(ProfileMode {
                        nu: m.nu.resolve()?,
                        c: m.c,
                        s: m.s,
                    })
                })
                .collect();
            match modes.and_then(|ms| RadialProfile::new(spec.slope, spec.beta, ms)) {
                Ok(p) => Some(p),
                Err(e) => {
                    violations.push(e.to_string());
                    None
                }
            }
        }
        None => None,
    };

    if let Some(margin) = cfg.twist_margin {
        if !(margin > 0.0 && margin < 1.0) {
            violations.push(format!("twist_margin = {margin} must lie in (0, 1)"));
        }
    }
    if let Some(step) = cfg.flow_step {
        if !(step > 0.0 && step <= 0.5) {
            violations.push(format!("flow_step = {step} must lie in (0, 0.5]"));
        }
    }
    if let Some(schedule) = &cfg.box_schedule {
        if schedule.is_empty() || schedule.iter().any(|&l| !(l > 0.0)) {
            violations.push("box_schedule must be nonempty with positive half-widths".into());
        }
    }
    if let Some(schedule) = &cfg.epsilon_schedule {
        if schedule.is_empty() || schedule.iter().any(|&e| !(e > 0.0)) {
            violations.push("epsilon_schedule must be nonempty with positive entries".into());
        }
    }
    if let Some(samples) = cfg.samples {
        if samples == 0 {
            violations.push("samples must be positive".into());
        }
    }
    if let Some([lo, hi]) = cfg.q_range {
        if !(hi > lo) {
            violations.push(format!("q_range [{lo}, {hi}) is empty"));
        }
    }

    if violations.is_empty() {
        Ok(ResolvedConfig {
            raw: cfg.clone(),
            matrix,
            field,
            time_field,
            profile,
            base,
        })
    } else {
        Err(QsympError::Config(violations.join("; ")))
    }
}

/// Parse and validate a config file.
pub fn load_config(path: &Path) -> Result<ResolvedConfig, QsympError> {
    let bytes = fs::read(path)?;
    let cfg: ExperimentConfig = serde_json::from_slice(&bytes)?;
    validate(&cfg)
}

/// Parse and validate a config from a JSON string (used by tests).
pub fn load_config_str(json: &str) -> Result<ResolvedConfig, QsympError> {
    let cfg: ExperimentConfig = serde_json::from_str(json)?;
    validate(&cfg)
}

/// Helper shared by map-building experiments: spatial field + matrix + base
/// into a generating twist map with the configured margin.
pub fn build_generating_map(
    resolved: &ResolvedConfig,
) -> Result<crate::twist::GeneratingMap, QsympError> {
    let field = resolved.field()?.clone();
    let a = resolved.matrix()?.clone();
    let base = resolved.base_or_zero()?;
    let d = resolved.map_dim()?;
    let margin = resolved
        .raw
        .twist_margin
        .unwrap_or(crate::twist::DEFAULT_TWIST_MARGIN);
    crate::twist::GeneratingMap::new(field, a, base, d, margin)
}

/// Helper for flow experiments: time field + matrix + base into a flow map.
pub fn build_flow_map(resolved: &ResolvedConfig) -> Result<crate::flow::FlowMap, QsympError> {
    let field = resolved.time_field()?.clone();
    let a = resolved.matrix()?.clone();
    let base = resolved.base_or_zero()?;
    let d = resolved.map_dim()?;
    let step = resolved
        .raw
        .flow_step
        .unwrap_or(crate::flow::DEFAULT_FLOW_STEP);
    let tol = resolved
        .raw
        .flow_tolerance
        .unwrap_or(crate::flow::DEFAULT_FLOW_TOLERANCE);
    crate::flow::FlowMap::new(field, a, base, d, step, tol)
}

/// Uniform random base points for Monte Carlo over the torus; the center
/// vector for box scans defaults to the phase-space origin.
pub fn box_center(resolved: &ResolvedConfig, n: usize) -> Result<DVector<f64>, QsympError> {
    match &resolved.raw.box_center {
        Some(c) if c.len() == n => Ok(DVector::from_column_slice(c)),
        Some(c) => Err(QsympError::Config(format!(
            "box_center has {} coordinates, expected {n}",
            c.len()
        ))),
        None => Ok(DVector::zeros(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn baseline_json() -> String {
        r#"{
            "experiment": "xval",
            "seed": 7,
            "map_dim": 1,
            "frequency_matrix": [["1", "0"], ["0", "1"]],
            "modes": [
                {"m": [1, 0], "c": 0.05},
                {"m": [0, 1], "c": 0.05}
            ],
            "box_schedule": [1.0, 2.0, 4.0],
            "epsilon_schedule": [0.05, 0.02],
            "samples": 1000
        }"#
        .to_string()
    }

    #[test]
    fn constant_expressions_resolve() {
        assert_abs_diff_eq!(
            parse_const_expr("sqrt2-1").unwrap(),
            2f64.sqrt() - 1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            parse_const_expr("golden").unwrap(),
            0.5 * (1.0 + 5f64.sqrt()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            parse_const_expr("0.5*sqrt3+1").unwrap(),
            0.5 * 3f64.sqrt() + 1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(parse_const_expr("1e-3").unwrap(), 1e-3, epsilon = 1e-18);
        assert_abs_diff_eq!(
            parse_const_expr("2.5e-2-sqrt2").unwrap(),
            0.025 - 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(parse_const_expr("sqrt5").is_err());
        assert!(parse_const_expr("1+").is_err());
        assert!(parse_const_expr("").is_err());
    }

    #[test]
    fn baseline_config_loads() {
        let resolved = load_config_str(&baseline_json()).unwrap();
        assert_eq!(resolved.raw.experiment, ExperimentKind::Xval);
        assert_eq!(resolved.matrix().unwrap().nrows(), 2);
        assert_eq!(resolved.field().unwrap().modes().len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = baseline_json().replace("\"seed\": 7,", "\"seed\": 7, \"extra\": 1,");
        match load_config_str(&json) {
            Err(QsympError::Json(e)) => {
                assert!(e.to_string().contains("extra"), "{e}");
            }
            other => panic!("expected a strict-schema error, got {other:?}"),
        }
    }

    #[test]
    fn mean_zero_violation_is_reported() {
        let json =
            baseline_json().replace(r#"{"m": [1, 0], "c": 0.05}"#, r#"{"m": [0, 0], "c": 0.05}"#);
        match load_config_str(&json) {
            Err(QsympError::Config(msg)) => {
                assert!(msg.contains("mean"), "{msg}");
            }
            other => panic!("expected mean-zero violation, got {other:?}"),
        }
    }

    #[test]
    fn wide_matrix_is_a_dimension_error() {
        let json = baseline_json().replace(r#"[["1", "0"], ["0", "1"]]"#, r#"[["1", "0"]]"#);
        match load_config_str(&json) {
            Err(QsympError::Config(msg)) => {
                assert!(msg.contains("dimension"), "{msg}");
            }
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let json =
            baseline_json().replace(r#"[["1", "0"], ["0", "1"]]"#, r#"[["1", "1"], ["1", "1"]]"#);
        match load_config_str(&json) {
            Err(QsympError::Config(msg)) => {
                assert!(msg.contains("rank"), "{msg}");
            }
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn schema_round_trips() {
        let resolved = load_config_str(&baseline_json()).unwrap();
        let serialized = serde_json::to_string_pretty(&resolved.raw).unwrap();
        let reparsed: ExperimentConfig = serde_json::from_str(&serialized).unwrap();
        assert_eq!(reparsed, resolved.raw);
    }

    #[test]
    fn profile_config_builds() {
        let json = r#"{
            "experiment": "pb2d",
            "seed": 3,
            "profile": {
                "beta": 0.5,
                "modes": [
                    {"nu": "1", "c": 0.5},
                    {"nu": "sqrt2", "c": 0.5}
                ]
            },
            "q_range": [0.0, 100.0]
        }"#;
        let resolved = load_config_str(json).unwrap();
        let profile = resolved.profile().unwrap();
        assert_abs_diff_eq!(profile.modes()[1].nu, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(profile.slope(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn resonant_mode_with_ergodic_matrix_is_flagged() {
        // A = [[1],[1]] (N=2, n=1): the mode (1, -1) pulls back to zero.
        let json = r#"{
            "experiment": "kac-rice",
            "seed": 1,
            "frequency_matrix": [["1"], ["1"]],
            "modes": [{"m": [1, -1], "c": 0.1}],
            "epsilon_schedule": [0.1],
            "samples": 100
        }"#;
        match load_config_str(json) {
            Err(QsympError::Config(msg)) => {
                assert!(msg.contains("resonant"), "{msg}");
            }
            other => panic!("expected resonance violation, got {other:?}"),
        }
    }
}

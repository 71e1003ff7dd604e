//! The TOML run configuration and its validation.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thermoform::symbolic::{CylinderFunction, CylinderMeasure, Point, ShiftModel, Word};
use thermoform::transfer::{uniform_weight, TransferOperator};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Rpf,
    Kms,
    MonomialCheck,
    Optimize,
    Subaction,
    Ground,
    Renewal,
    VerifyAll,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Rpf => "rpf",
            Task::Kms => "kms",
            Task::MonomialCheck => "monomial-check",
            Task::Optimize => "optimize",
            Task::Subaction => "subaction",
            Task::Ground => "ground",
            Task::Renewal => "renewal",
            Task::VerifyAll => "verify-all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// A cylinder depth, or `"auto"` for the smallest one that works.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "DepthRepr", into = "DepthRepr")]
pub enum Depth {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DepthRepr {
    Fixed(usize),
    Named(String),
}

impl TryFrom<DepthRepr> for Depth {
    type Error = String;

    fn try_from(r: DepthRepr) -> Result<Self, String> {
        match r {
            DepthRepr::Fixed(d) => Ok(Depth::Fixed(d)),
            DepthRepr::Named(s) if s == "auto" => Ok(Depth::Auto),
            DepthRepr::Named(s) => Err(format!("expected \"auto\" or an integer, got {s:?}")),
        }
    }
}

impl From<Depth> for DepthRepr {
    fn from(d: Depth) -> Self {
        match d {
            Depth::Auto => DepthRepr::Named("auto".into()),
            Depth::Fixed(d) => DepthRepr::Fixed(d),
        }
    }
}

/// A function given as a constant or as a table from words of one length to values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Table {
    Constant(f64),
    Words(BTreeMap<String, f64>),
}

/// A probability on the shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureConfig {
    /// Point mass at `prefix · period^∞`.
    Dirac {
        #[serde(default)]
        prefix: String,
        period: String,
    },
    /// Cylinder masses at one depth.
    Masses { masses: BTreeMap<String, f64> },
    /// The Gibbs state of the configured potential.
    Gibbs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub model: ModelConfig,
    pub potential: PotentialConfig,
    pub numeric: NumericConfig,
    pub output: OutputConfig,
    pub kms: KmsConfig,
    pub monomial: MonomialConfig,
    pub ground: GroundConfig,
    pub renewal: RenewalConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub alphabet_size: usize,
    /// Rows of the 0/1 transition matrix; absent means the full shift.
    pub transition: Option<Vec<Vec<i64>>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            alphabet_size: 2,
            transition: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// The gauge potential `H`; defaults to 1.
    pub h: Option<Table>,
    /// The normalized weight `p`; defaults to one over the number of preimages.
    pub p: Option<Table>,
    /// Transfer weight for `rpf`; defaults to `H^{-β}`.
    pub weight: Option<Table>,
    pub beta: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            h: None,
            p: None,
            weight: None,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub depth: Depth,
    pub starts: usize,
    /// Number of operators `F_1 … F_N` in one KMS pass.
    pub levels: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            tol: 1e-12,
            max_iter: 10_000,
            seed: 0,
            depth: Depth::Auto,
            starts: 5,
            levels: 8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmsConfig {
    /// Inverse temperatures; defaults to `potential.beta`.
    pub betas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonomialConfig {
    pub pairs: usize,
    pub max_level: usize,
    pub coefficient_depth: usize,
}

impl Default for MonomialConfig {
    fn default() -> Self {
        MonomialConfig {
            pairs: 200,
            max_level: 3,
            coefficient_depth: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundConfig {
    pub n: usize,
    pub betas: Vec<f64>,
    pub measure: MeasureConfig,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig {
            n: 1,
            betas: (0..=10).map(|i| 5.0 * i as f64).collect(),
            measure: MeasureConfig::Dirac {
                prefix: String::new(),
                period: "0".into(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenewalConfig {
    pub gamma: f64,
    #[serde(rename = "K")]
    pub truncation: usize,
    pub betas: Vec<f64>,
    /// Compare each grid point with the tower bisection.
    pub oracle: bool,
}

impl Default for RenewalConfig {
    fn default() -> Self {
        RenewalConfig {
            gamma: 3.0,
            truncation: 100_000,
            betas: (5..=15).map(|i| i as f64 / 10.0).collect(),
            oracle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random monomial pairs for the KMS equality.
    pub pairs: usize,
    /// Bridge identity and quasi-basis checks run for `n ≤ levels`.
    pub levels: usize,
    /// Tolerance of the KMS equality and condition defects.
    pub kms_tol: f64,
    /// Tolerance of the multi-start agreement.
    pub probe_tol: f64,
    /// State tested against the KMS condition; defaults to the Gibbs state.
    pub candidate: Option<MeasureConfig>,
    /// Include the renewal checks.
    pub renewal: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            pairs: 200,
            levels: 4,
            kms_tol: 1e-9,
            probe_tol: 1e-8,
            candidate: None,
            renewal: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml(src: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| {
            let key = e.span().map(|s| key_at(src, s.start)).unwrap_or_else(|| "config".into());
            CliError::validation(key, e.message())
        })
    }

    /// Checks every scalar field and every section, independent of the task.
    pub fn validate(&self) -> Result<(), CliError> {
        let n = &self.numeric;
        positive("numeric.tol", n.tol)?;
        at_least("numeric.max_iter", n.max_iter, 1)?;
        at_least("numeric.starts", n.starts, 1)?;
        at_least("numeric.levels", n.levels, 1)?;
        if let Depth::Fixed(d) = n.depth {
            at_least("numeric.depth", d, 1)?;
        }
        non_negative("potential.beta", self.potential.beta)?;
        if let Some(betas) = &self.kms.betas {
            if betas.is_empty() {
                return Err(CliError::validation("kms.betas", "grid is empty"));
            }
            for (i, &b) in betas.iter().enumerate() {
                non_negative(&format!("kms.betas[{i}]"), b)?;
            }
        }
        let m = &self.monomial;
        at_least("monomial.pairs", m.pairs, 1)?;
        at_least("monomial.coefficient_depth", m.coefficient_depth, 1)?;
        if m.max_level > 4 {
            return Err(CliError::validation("monomial.max_level", "at most 4 is supported"));
        }
        let g = &self.ground;
        at_least("ground.n", g.n, 1)?;
        if g.betas.len() < 2 {
            return Err(CliError::validation("ground.betas", "need at least two grid points"));
        }
        for (i, &b) in g.betas.iter().enumerate() {
            non_negative(&format!("ground.betas[{i}]"), b)?;
            if i > 0 && b <= g.betas[i - 1] {
                return Err(CliError::validation(format!("ground.betas[{i}]"), "grid must be strictly increasing"));
            }
        }
        let r = &self.renewal;
        if !(r.gamma > 2.0 && r.gamma.is_finite()) {
            return Err(CliError::validation("renewal.gamma", format!("must exceed 2, got {}", r.gamma)));
        }
        at_least("renewal.K", r.truncation, 1)?;
        if r.betas.is_empty() {
            return Err(CliError::validation("renewal.betas", "grid is empty"));
        }
        for (i, &b) in r.betas.iter().enumerate() {
            positive(&format!("renewal.betas[{i}]"), b)?;
        }
        let v = &self.verify;
        at_least("verify.pairs", v.pairs, 1)?;
        at_least("verify.levels", v.levels, 1)?;
        positive("verify.kms_tol", v.kms_tol)?;
        positive("verify.probe_tol", v.probe_tol)?;
        Ok(())
    }

    pub fn shift_model(&self) -> Result<Arc<ShiftModel>, CliError> {
        let k = self.model.alphabet_size;
        if !(1..=36).contains(&k) {
            return Err(CliError::validation("model.alphabet_size", format!("must be in 1..=36, got {k}")));
        }
        let rows = match &self.model.transition {
            None => vec![vec![1; k]; k],
            Some(rows) => rows.clone(),
        };
        if rows.len() != k {
            return Err(CliError::validation(
                "model.transition",
                format!("expected {k} rows, got {}", rows.len()),
            ));
        }
        let mut flat = Vec::with_capacity(k * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(CliError::validation(
                    format!("model.transition[{i}]"),
                    format!("expected {k} entries, got {}", row.len()),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0 && v != 1 {
                    return Err(CliError::validation(
                        format!("model.transition[{i}][{j}]"),
                        format!("entries must be 0 or 1, got {v}"),
                    ));
                }
                flat.push(v as u8);
            }
        }
        ShiftModel::new(k, &flat)
            .map(Arc::new)
            .map_err(|e| CliError::validation("model.transition", e.to_string()))
    }

    /// `H`, checked positive.
    pub fn h(&self, model: &Arc<ShiftModel>) -> Result<CylinderFunction, CliError> {
        match &self.potential.h {
            None => Ok(CylinderFunction::one(model.clone())),
            Some(t) => table_function(model, t, "potential.h", true),
        }
    }

    /// `p`, checked positive and normalized.
    pub fn p(&self, model: &Arc<ShiftModel>) -> Result<CylinderFunction, CliError> {
        match &self.potential.p {
            None => Ok(uniform_weight(model.clone())),
            Some(t) => {
                let p = table_function(model, t, "potential.p", true)?;
                TransferOperator::normalized(p.clone()).map_err(|e| CliError::validation("potential.p", e.to_string()))?;
                Ok(p)
            }
        }
    }

    pub fn weight(&self, model: &Arc<ShiftModel>) -> Result<Option<CylinderFunction>, CliError> {
        self.potential
            .weight
            .as_ref()
            .map(|t| table_function(model, t, "potential.weight", true))
            .transpose()
    }

    /// Canonical JSON of the configuration, the input of the digest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}

/// Builds a depth-`depth` measure, or reports the key that makes it impossible.
pub fn measure(
    model: &Arc<ShiftModel>,
    config: &MeasureConfig,
    key: &str,
    depth: usize,
    gibbs: impl FnOnce(usize) -> Result<CylinderMeasure, CliError>,
) -> Result<CylinderMeasure, CliError> {
    match config {
        MeasureConfig::Dirac { prefix, period } => {
            let prefix: Word = prefix
                .parse()
                .map_err(|e: thermoform::Error| CliError::validation(format!("{key}.prefix"), e.to_string()))?;
            let period: Word = period
                .parse()
                .map_err(|e: thermoform::Error| CliError::validation(format!("{key}.period"), e.to_string()))?;
            let x = Point::new(model, prefix, period)
                .map_err(|e| CliError::validation(format!("{key}.period"), e.to_string()))?;
            CylinderMeasure::dirac(model.clone(), &x, depth).map_err(|e| CliError::validation(key, e.to_string()))
        }
        MeasureConfig::Masses { masses } => {
            let key = format!("{key}.masses");
            let (d, values) = word_table(model, masses, &key, false)?;
            if d < depth {
                return Err(CliError::validation(key, format!("depth {d} is too small, need at least {depth}")));
            }
            let mu = CylinderMeasure::new(model.clone(), d, values).map_err(|e| CliError::validation(&key, e.to_string()))?;
            mu.marginal(depth).map_err(|e| CliError::validation(key, e.to_string()))
        }
        MeasureConfig::Gibbs => gibbs(depth),
    }
}

fn table_function(
    model: &Arc<ShiftModel>,
    table: &Table,
    key: &str,
    positive: bool,
) -> Result<CylinderFunction, CliError> {
    match table {
        Table::Constant(c) => {
            check_value(key, *c, positive)?;
            Ok(CylinderFunction::constant(model.clone(), *c))
        }
        Table::Words(words) => {
            let (d, values) = word_table(model, words, key, positive)?;
            CylinderFunction::new(model.clone(), d, values).map_err(|e| CliError::validation(key, e.to_string()))
        }
    }
}

/// Values of a word table in rank order, with its common word length.
fn word_table(
    model: &Arc<ShiftModel>,
    words: &BTreeMap<String, f64>,
    key: &str,
    positive: bool,
) -> Result<(usize, Vec<f64>), CliError> {
    let mut depth = None;
    let mut parsed = Vec::with_capacity(words.len());
    for (w, &v) in words {
        let wkey = format!("{key}.{w}");
        let word: Word = w.parse().map_err(|e: thermoform::Error| CliError::validation(&wkey, e.to_string()))?;
        if word.is_empty() {
            return Err(CliError::validation(wkey, "words must be non-empty"));
        }
        match depth {
            None => depth = Some(word.len()),
            Some(d) if d != word.len() => {
                return Err(CliError::validation(
                    wkey,
                    format!("all words must have length {d}, got {}", word.len()),
                ))
            }
            _ => {}
        }
        if word.symbols().iter().any(|&s| s >= model.alphabet_size()) || !model.is_admissible(word.symbols()) {
            return Err(CliError::validation(wkey, "word is not admissible"));
        }
        check_value(&wkey, v, positive)?;
        parsed.push((word, v));
    }
    let d = depth.ok_or_else(|| CliError::validation(key, "table is empty"))?;
    model.check_depth(d).map_err(|e| CliError::validation(key, e.to_string()))?;
    let mut values = vec![f64::NAN; model.word_count(d)];
    for (w, v) in parsed {
        values[model.rank(w.symbols())] = v;
    }
    if let Some(missing) = model.words(d).into_iter().find(|w| values[model.rank(w.symbols())].is_nan()) {
        return Err(CliError::validation(key, format!("missing admissible word {missing}")));
    }
    Ok((d, values))
}

fn check_value(key: &str, v: f64, positive: bool) -> Result<(), CliError> {
    if !v.is_finite() {
        return Err(CliError::validation(key, format!("value must be finite, got {v}")));
    }
    if positive && v <= 0.0 {
        return Err(CliError::validation(key, format!("value must be positive, got {v}")));
    }
    if !positive && v < 0.0 {
        return Err(CliError::validation(key, format!("value must be nonnegative, got {v}")));
    }
    Ok(())
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(key, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(key, format!("must be nonnegative and finite, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::validation(key, format!("must be at least {min}, got {v}")))
    }
}

/// Dotted key of the assignment or table header on the line containing `offset`.
fn key_at(src: &str, offset: usize) -> String {
    let offset = offset.min(src.len());
    let line_start = src[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line = src[line_start..].lines().next().unwrap_or("").trim();
    let section = src[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    if line.starts_with('[') {
        return line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
    }
    let name = line.split('=').next().unwrap_or("").trim().trim_matches('"');
    match (section, name.is_empty()) {
        (_, true) => "config".into(),
        (Some(s), false) => format!("{s}.{name}"),
        (None, false) => name.to_string(),
    }
}

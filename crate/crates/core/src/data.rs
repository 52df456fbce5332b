//! Samples, datasets with a materialized importance-weight matrix, and weight
//! families.
//!
//! Weights are stored as an explicit `n × |W|` matrix: entry `(i, j)` is the
//! value of the `j`-th weight function at sample `i`. Analytic weight
//! functions are evaluated once when a dataset is built.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{MroError, Result};
use crate::json;

/// Relative slack when comparing stored weights against declared bounds.
const BOUND_SLACK: f64 = 1e-12;

/// One observation `z = (x, y)` with an optional mixture-component tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<u32>,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: f64) -> Self {
        Self {
            features,
            label,
            tag: None,
        }
    }

    pub fn tagged(features: Vec<f64>, label: f64, tag: u32) -> Self {
        Self {
            features,
            label,
            tag: Some(tag),
        }
    }
}

/// A finite family of named importance-weight functions with bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily", deny_unknown_fields)]
pub struct WeightFamily {
    names: Vec<String>,
    per_weight_bound: Vec<f64>,
    family_bound: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    names: Vec<String>,
    per_weight_bound: Vec<f64>,
    family_bound: f64,
}

impl TryFrom<RawFamily> for WeightFamily {
    type Error = MroError;

    fn try_from(raw: RawFamily) -> Result<Self> {
        WeightFamily::new(raw.names, raw.per_weight_bound, raw.family_bound)
    }
}

impl WeightFamily {
    pub fn new(names: Vec<String>, per_weight_bound: Vec<f64>, family_bound: f64) -> Result<Self> {
        if names.is_empty() {
            return Err(MroError::InvalidFamily("family is empty".into()));
        }
        if names.len() != per_weight_bound.len() {
            return Err(MroError::InvalidFamily(format!(
                "{} names but {} bounds",
                names.len(),
                per_weight_bound.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(MroError::InvalidFamily(format!("duplicate weight name `{name}`")));
            }
        }
        if !(family_bound.is_finite() && family_bound >= 1.0) {
            return Err(MroError::InvalidFamily(format!(
                "family bound must be a finite real >= 1, got {family_bound}"
            )));
        }
        for (name, &b) in names.iter().zip(&per_weight_bound) {
            if !(b.is_finite() && b >= 0.0) {
                return Err(MroError::InvalidFamily(format!("bound of `{name}` is {b}")));
            }
            if b > family_bound * (1.0 + BOUND_SLACK) {
                return Err(MroError::InvalidFamily(format!(
                    "bound {b} of `{name}` exceeds family bound {family_bound}"
                )));
            }
        }
        Ok(Self {
            names,
            per_weight_bound,
            family_bound,
        })
    }

    /// Family whose family bound is the largest member bound (at least 1).
    pub fn from_bounds(names: Vec<String>, per_weight_bound: Vec<f64>) -> Result<Self> {
        let b = per_weight_bound.iter().copied().fold(1.0_f64, f64::max);
        Self::new(names, per_weight_bound, b)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> &[f64] {
        &self.per_weight_bound
    }

    pub fn bound(&self, index: usize) -> f64 {
        self.per_weight_bound[index]
    }

    pub fn family_bound(&self) -> f64 {
        self.family_bound
    }

    pub fn max_weight_bound(&self) -> f64 {
        self.per_weight_bound.iter().copied().fold(0.0, f64::max)
    }
}

/// `n` samples plus the `n × |W|` weight matrix, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    columns: Vec<Vec<f64>>,
    weight_names: Vec<String>,
    label_bound: Option<f64>,
}

impl Dataset {
    /// Builds a dataset from samples and one weight vector per column.
    pub fn new(samples: Vec<Sample>, columns: Vec<Vec<f64>>, weight_names: Vec<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(MroError::InvalidDataset("dataset has no samples".into()));
        }
        if columns.len() != weight_names.len() {
            return Err(MroError::InvalidDataset(format!(
                "{} weight columns but {} names",
                columns.len(),
                weight_names.len()
            )));
        }
        if columns.is_empty() {
            return Err(MroError::InvalidDataset("dataset has no weight columns".into()));
        }
        let dim = samples[0].features.len();
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(MroError::InvalidDataset(format!(
                    "sample {i} has {} features, expected {dim}",
                    s.features.len()
                )));
            }
            if !s.label.is_finite() || s.features.iter().any(|x| !x.is_finite()) {
                return Err(MroError::NonFinite(format!("sample {i}")));
            }
        }
        for (name, col) in weight_names.iter().zip(&columns) {
            if col.len() != samples.len() {
                return Err(MroError::InvalidDataset(format!(
                    "weight column `{name}` has {} rows, expected {}",
                    col.len(),
                    samples.len()
                )));
            }
            if let Some(row) = col.iter().position(|w| !w.is_finite()) {
                return Err(MroError::InvalidWeight {
                    name: name.clone(),
                    row,
                    reason: "non-finite weight".into(),
                });
            }
        }
        Ok(Self {
            samples,
            columns,
            weight_names,
            label_bound: None,
        })
    }

    /// Declares `|label| <= bound` and checks it on every sample.
    pub fn with_label_bound(mut self, bound: f64) -> Result<Self> {
        if let Some(i) = self.samples.iter().position(|s| s.label.abs() > bound) {
            return Err(MroError::InvalidDataset(format!(
                "sample {i} label {} exceeds label bound {bound}",
                self.samples[i].label
            )));
        }
        self.label_bound = Some(bound);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn feature_dim(&self) -> usize {
        self.samples[0].features.len()
    }

    pub fn num_weights(&self) -> usize {
        self.columns.len()
    }

    pub fn weight_names(&self) -> &[String] {
        &self.weight_names
    }

    pub fn label_bound(&self) -> Option<f64> {
        self.label_bound
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn weight(&self, row: usize, column: usize) -> f64 {
        self.columns[column][row]
    }

    pub fn column_mean(&self, index: usize) -> f64 {
        self.columns[index].iter().sum::<f64>() / self.len() as f64
    }

    /// Per-sample composite weights `ω_i = Σ_w a_w · W[i, w]`.
    pub fn mix_columns(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.num_weights() {
            return Err(MroError::DimensionMismatch {
                expected: self.num_weights(),
                got: coefficients.len(),
            });
        }
        let mut omega = vec![0.0; self.len()];
        for (col, &a) in self.columns.iter().zip(coefficients) {
            if a == 0.0 {
                continue;
            }
            for (o, &w) in omega.iter_mut().zip(col) {
                *o += a * w;
            }
        }
        Ok(omega)
    }

    /// Reads JSON Lines; columns follow the order of `family.names()`.
    pub fn read_jsonl<R: BufRead>(reader: R, family: &WeightFamily) -> Result<Self> {
        let mut samples = Vec::new();
        let mut columns = vec![Vec::new(); family.len()];
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: SampleRecord = serde_json::from_str(&line)
                .map_err(|e| MroError::InvalidDataset(format!("line {}: {e}", lineno + 1)))?;
            if record.weights.len() != family.len() {
                let extra: Vec<_> = record.weights.keys().filter(|k| !family.names().contains(k)).collect();
                if !extra.is_empty() {
                    return Err(MroError::InvalidDataset(format!(
                        "line {}: unknown weight names {extra:?}",
                        lineno + 1
                    )));
                }
            }
            for (col, name) in columns.iter_mut().zip(family.names()) {
                let w =
                    record.weights.get(name).copied().ok_or_else(|| {
                        MroError::InvalidDataset(format!("line {}: missing weight `{name}`", lineno + 1))
                    })?;
                col.push(w);
            }
            samples.push(Sample {
                features: record.features,
                label: record.label,
                tag: record.tag,
            });
        }
        Dataset::new(samples, columns, family.names().to_vec())
    }

    /// Writes one JSON object per sample with 17-digit reals.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            let weights = self
                .weight_names
                .iter()
                .zip(&self.columns)
                .map(|(name, col)| (name.clone(), col[i]))
                .collect();
            let record = SampleRecord {
                features: s.features.clone(),
                label: s.label,
                tag: s.tag,
                weights,
            };
            writeln!(writer, "{}", json::to_line(&record)?)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    features: Vec<f64>,
    label: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<u32>,
    weights: BTreeMap<String, f64>,
}

/// Outcome of [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub column_means: Vec<f64>,
    pub renormalized: bool,
}

/// A dataset that passed validation against its family, possibly renormalized.
#[derive(Debug, Clone)]
pub struct Validated {
    pub dataset: Dataset,
    pub family: WeightFamily,
    pub report: ValidationReport,
}

/// Checks every weight entry against `[0, B_w]` and reports column means.
///
/// With `renormalize`, each column is divided by its sample mean (and its
/// bound by the same factor) so the empirical mean is one. The family bound
/// grows if a rescaled member bound exceeds it.
pub fn validate_dataset(dataset: &Dataset, family: &WeightFamily, renormalize: bool) -> Result<Validated> {
    if dataset.weight_names() != family.names() {
        return Err(MroError::InvalidDataset(format!(
            "weight columns {:?} do not match family {:?}",
            dataset.weight_names(),
            family.names()
        )));
    }
    let mut column_means = Vec::with_capacity(family.len());
    for (w, name) in family.names().iter().enumerate() {
        let bound = family.bound(w);
        for (row, &value) in dataset.column(w).iter().enumerate() {
            if value < 0.0 {
                return Err(MroError::InvalidWeight {
                    name: name.clone(),
                    row,
                    reason: format!("negative weight {value}"),
                });
            }
            if value > bound * (1.0 + BOUND_SLACK) {
                return Err(MroError::InvalidWeight {
                    name: name.clone(),
                    row,
                    reason: format!("weight {value} exceeds bound {bound}"),
                });
            }
        }
        let mean = dataset.column_mean(w);
        if mean <= 0.0 {
            return Err(MroError::InvalidWeight {
                name: name.clone(),
                row: 0,
                reason: "column mean is zero (degenerate weight)".into(),
            });
        }
        column_means.push(mean);
    }

    if !renormalize {
        return Ok(Validated {
            dataset: dataset.clone(),
            family: family.clone(),
            report: ValidationReport {
                column_means,
                renormalized: false,
            },
        });
    }

    let columns: Vec<Vec<f64>> = dataset
        .columns()
        .iter()
        .zip(&column_means)
        .map(|(col, &m)| col.iter().map(|w| w / m).collect())
        .collect();
    let bounds: Vec<f64> = family.bounds().iter().zip(&column_means).map(|(b, m)| b / m).collect();
    let family_bound = bounds.iter().copied().fold(family.family_bound(), f64::max);
    let mut out = Dataset::new(dataset.samples().to_vec(), columns, family.names().to_vec())?;
    out.label_bound = dataset.label_bound;
    let family = WeightFamily::new(family.names().to_vec(), bounds, family_bound)?;
    Ok(Validated {
        dataset: out,
        family,
        report: ValidationReport {
            column_means,
            renormalized: true,
        },
    })
}

/// `σ̂_w² = (1/n) Σ_i W[i, w]²`.
pub fn empirical_weight_second_moment(dataset: &Dataset, weight_index: usize) -> Result<f64> {
    if weight_index >= dataset.num_weights() {
        return Err(MroError::IndexOutOfRange {
            index: weight_index,
            len: dataset.num_weights(),
        });
    }
    let col = dataset.column(weight_index);
    Ok(col.iter().map(|w| w * w).sum::<f64>() / col.len() as f64)
}

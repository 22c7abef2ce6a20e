//! Labeled text datasets: loading, validation, label spaces and splits.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: duplicate id {id:?} (first seen on line {first})")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        first: usize,
        id: String,
    },
    #[error("dataset {0:?} has no instances")]
    Empty(String),
    #[error("label {label:?} of instance {id:?} is not in the label manifest")]
    UnknownLabel { id: String, label: String },
    #[error("label space needs at least two labels, found {0}")]
    TooFewLabels(usize),
    #[error("invalid split: {0}")]
    Split(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guess from the file extension; anything other than `.csv` is JSON Lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub text: String,
    #[serde(rename = "label")]
    pub gold_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    name: String,
    instances: Vec<Instance>,
    labels: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, deriving the label space from the data (sorted) when
    /// no manifest is given. A manifest must cover every gold label.
    pub fn new(
        name: impl Into<String>,
        instances: Vec<Instance>,
        manifest: Option<Vec<String>>,
    ) -> Result<Self, CorpusError> {
        let name = name.into();
        if instances.is_empty() {
            return Err(CorpusError::Empty(name));
        }
        let mut seen = HashSet::new();
        for inst in &instances {
            if !seen.insert(inst.id.as_str()) {
                return Err(CorpusError::Malformed {
                    path: PathBuf::from(&name),
                    line: 0,
                    reason: format!("duplicate id {:?}", inst.id),
                });
            }
            if inst.text.trim().is_empty() {
                return Err(CorpusError::Malformed {
                    path: PathBuf::from(&name),
                    line: 0,
                    reason: format!("instance {:?} has empty text", inst.id),
                });
            }
        }
        let labels = match manifest {
            Some(labels) => {
                let known: HashSet<&str> = labels.iter().map(String::as_str).collect();
                if let Some(bad) = instances
                    .iter()
                    .find(|i| !known.contains(i.gold_label.as_str()))
                {
                    return Err(CorpusError::UnknownLabel {
                        id: bad.id.clone(),
                        label: bad.gold_label.clone(),
                    });
                }
                labels
            }
            None => instances
                .iter()
                .map(|i| i.gold_label.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        if labels.len() < 2 {
            return Err(CorpusError::TooFewLabels(labels.len()));
        }
        Ok(Self {
            name,
            instances,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Same label space, different instances.
    fn with_instances(&self, name: String, instances: Vec<Instance>) -> Self {
        Self {
            name,
            instances,
            labels: self.labels.clone(),
        }
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        for inst in &self.instances {
            let line = serde_json::to_string(inst).expect("instance serializes");
            writeln!(out, "{line}").map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    text: Option<String>,
    label: Option<serde_json::Value>,
}

fn scalar_to_string(v: serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Loads a dataset. The dataset name is the file stem.
pub fn load_dataset(
    path: &Path,
    format: Format,
    manifest: Option<Vec<String>>,
) -> Result<Dataset, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let malformed = |line: usize, reason: String| CorpusError::Malformed {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rows: Vec<(usize, Instance)> = Vec::new();
    match format {
        Format::Jsonl => {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            for (idx, line) in reader.lines().enumerate() {
                let lineno = idx + 1;
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawRecord =
                    serde_json::from_str(&line).map_err(|e| malformed(lineno, e.to_string()))?;
                let id = raw
                    .id
                    .and_then(scalar_to_string)
                    .ok_or_else(|| malformed(lineno, "missing field `id`".into()))?;
                let text = raw
                    .text
                    .ok_or_else(|| malformed(lineno, "missing field `text`".into()))?;
                let label = raw
                    .label
                    .and_then(scalar_to_string)
                    .ok_or_else(|| malformed(lineno, "missing field `label`".into()))?;
                rows.push((
                    lineno,
                    Instance {
                        id,
                        text,
                        gold_label: label,
                    },
                ));
            }
        }
        Format::Csv => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => io_err(source),
                other => malformed(1, format!("{other:?}")),
            })?;
            let headers = reader
                .headers()
                .map_err(|e| malformed(1, e.to_string()))?
                .clone();
            let col = |name: &str| {
                headers
                    .iter()
                    .position(|h| h.trim() == name)
                    .ok_or_else(|| malformed(1, format!("missing column `{name}`")))
            };
            let (id_col, text_col, label_col) = (col("id")?, col("text")?, col("label")?);
            for (idx, record) in reader.records().enumerate() {
                // header is line 1
                let lineno = idx + 2;
                let record = record.map_err(|e| malformed(lineno, e.to_string()))?;
                let field = |c: usize| record.get(c).unwrap_or_default().to_string();
                rows.push((
                    lineno,
                    Instance {
                        id: field(id_col),
                        text: field(text_col),
                        gold_label: field(label_col),
                    },
                ));
            }
        }
    }

    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for (lineno, inst) in &rows {
        if inst.id.is_empty() {
            return Err(malformed(*lineno, "empty id".into()));
        }
        if inst.text.trim().is_empty() {
            return Err(malformed(*lineno, "empty text".into()));
        }
        if let Some(first) = first_seen.insert(inst.id.clone(), *lineno) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line: *lineno,
                first,
                id: inst.id.clone(),
            });
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::new(name, rows.into_iter().map(|(_, i)| i).collect(), manifest)
}

/// Reads a labels manifest: one label per line, order significant.
pub fn load_labels_manifest(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut labels: Vec<String> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if !labels.iter().any(|l| l == line) {
            labels.push(line.to_string());
        }
    }
    Ok(labels)
}

/// Deterministic train/eval split.
///
/// When every label has at least two instances the split is stratified: each
/// label contributes `round(n_label * train_fraction)` instances to the train
/// part, clamped so that both parts keep at least one. Otherwise the whole
/// dataset is shuffled and cut at `round(n * train_fraction)`. Both parts keep
/// the original record order.
pub fn split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::Split(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let n = dataset.len();
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in dataset.instances.iter().enumerate() {
        by_label.entry(&inst.gold_label).or_default().push(i);
    }
    let stratified = by_label.values().all(|v| v.len() >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx: Vec<usize> = Vec::new();

    if stratified {
        for members in by_label.values() {
            let mut members = members.clone();
            members.shuffle(&mut rng);
            let take = ((members.len() as f64 * train_fraction).round() as usize)
                .clamp(1, members.len() - 1);
            train_idx.extend_from_slice(&members[..take]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let take = (n as f64 * train_fraction).round() as usize;
        if take == 0 || take >= n {
            return Err(CorpusError::Split(format!(
                "fraction {train_fraction} of {n} instances leaves an empty part"
            )));
        }
        train_idx.extend_from_slice(&all[..take]);
    }

    let in_train: HashSet<usize> = train_idx.into_iter().collect();
    let (mut train, mut eval) = (Vec::new(), Vec::new());
    for (i, inst) in dataset.instances.iter().enumerate() {
        if in_train.contains(&i) {
            train.push(inst.clone());
        } else {
            eval.push(inst.clone());
        }
    }
    if train.is_empty() || eval.is_empty() {
        return Err(CorpusError::Split(format!(
            "fraction {train_fraction} of {n} instances leaves an empty part"
        )));
    }
    Ok((
        dataset.with_instances(format!("{}-train", dataset.name), train),
        dataset.with_instances(format!("{}-eval", dataset.name), eval),
    ))
}

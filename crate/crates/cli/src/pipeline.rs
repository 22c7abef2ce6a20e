//! The four stages over a shared run directory.
//!
//! Layout of a run directory:
//!
//! ```text
//! config.toml        resolved config, written by train
//! model.json         vectorizer + classifier archive
//! split.json         label space and train/eval ids
//! eval.jsonl         held-out instances
//! train.json         training diagnostics
//! records.jsonl      one LLM record per annotated instance
//! annotate.json      skipped ids and parse failures
//! features.jsonl     top-k feature sets
//! coverage.csv/.jsonl
//! audit.jsonl        optional per-feature matcher decisions
//! confusion.json
//! summary.json
//! tables/*.csv, tables/coverage.txt
//! figures/confusion.svg, figures/scatter_<matcher>.svg
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ratcov_core::corpus::{load_dataset, load_labels_manifest, split, Dataset, Format, Instance};
use ratcov_core::coverage::{self, batch_coverage, CoverageRecord};
use ratcov_core::featmodel::{argmax, top_features, FeatureSet, ModelArchive};
use ratcov_core::llm::{annotate_live, replay_load, LlmClient, LlmRecord, ResponseCache};
use ratcov_core::report::{self, Summary};
use ratcov_core::stats::{bootstrap_all, confusion, summarize, ConfusionMatrix};

use crate::config::{FeatureClass, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub dataset: String,
    pub labels: Vec<String>,
    pub train_fraction: f64,
    pub seed: u64,
    pub train_ids: Vec<String>,
    pub eval_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_train: usize,
    pub n_eval: usize,
    pub vocabulary_size: usize,
    pub train_accuracy: f64,
    pub eval_accuracy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotateReport {
    pub source: String,
    pub n_records: usize,
    pub n_parsed: usize,
    pub parse_failures: Vec<String>,
    /// Eval instances without a response.
    pub skipped: Vec<String>,
    /// Replay entries whose id is not in the eval split.
    pub unknown_ids: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write(path, &s)
}

fn require(
    run_dir: &Path,
    name: &str,
    what: &'static str,
    stage: &'static str,
) -> Result<PathBuf, CliError> {
    let path = run_dir.join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Missing { what, path, stage })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Artifact {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    coverage::read_jsonl(path).map_err(|reason| CliError::Artifact {
        path: path.to_path_buf(),
        reason,
    })
}

fn accuracy(archive: &ModelArchive, instances: &[Instance]) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    let hits = instances
        .iter()
        .filter(|i| archive.model.predict(&archive.transform(&i.text)).0 == i.gold_label)
        .count();
    hits as f64 / instances.len() as f64
}

fn load_eval(run_dir: &Path) -> Result<(SplitManifest, Dataset), CliError> {
    let split_path = require(run_dir, "split.json", "split manifest", "train")?;
    let eval_path = require(run_dir, "eval.jsonl", "eval split", "train")?;
    let manifest: SplitManifest = read_json(&split_path)?;
    let eval = load_dataset(&eval_path, Format::Jsonl, Some(manifest.labels.clone()))?;
    let eval = Dataset::new(
        manifest.dataset.clone(),
        eval.instances().to_vec(),
        Some(manifest.labels.clone()),
    )?;
    Ok((manifest, eval))
}

/// Splits the dataset, trains the reference model and writes the archive.
pub fn train(cfg: &RunConfig, run_dir: &Path) -> Result<TrainReport, CliError> {
    let manifest = cfg
        .dataset
        .labels
        .as_deref()
        .map(load_labels_manifest)
        .transpose()?;
    let loaded = load_dataset(
        &cfg.dataset.path,
        Format::from_path(&cfg.dataset.path),
        manifest,
    )?;
    let dataset = Dataset::new(
        cfg.dataset_name(),
        loaded.instances().to_vec(),
        Some(loaded.labels().to_vec()),
    )?;
    let (train_set, eval_set) = split(&dataset, cfg.split.train_fraction, cfg.split.seed)?;
    let stopwords = cfg.stopwords()?;
    let (archive, _) = ModelArchive::train(
        &train_set,
        &stopwords,
        cfg.vectorizer_config(&stopwords),
        &cfg.model,
    )?;
    if !archive.model.converged {
        log::warn!(
            "training stopped after {} iterations without reaching tolerance (gradient norm {:.3e})",
            archive.model.iterations,
            archive.model.gradient_norm
        );
    }

    fs::create_dir_all(run_dir).map_err(io_err(run_dir))?;
    write(&run_dir.join("config.toml"), &cfg.to_toml())?;
    archive.save(&run_dir.join("model.json"))?;
    let ids = |d: &Dataset| d.instances().iter().map(|i| i.id.clone()).collect();
    write_json(
        &run_dir.join("split.json"),
        &SplitManifest {
            dataset: dataset.name().to_string(),
            labels: dataset.labels().to_vec(),
            train_fraction: cfg.split.train_fraction,
            seed: cfg.split.seed,
            train_ids: ids(&train_set),
            eval_ids: ids(&eval_set),
        },
    )?;
    eval_set.save_jsonl(&run_dir.join("eval.jsonl"))?;
    let report = TrainReport {
        n_train: train_set.len(),
        n_eval: eval_set.len(),
        vocabulary_size: archive.vocabulary.len(),
        train_accuracy: accuracy(&archive, train_set.instances()),
        eval_accuracy: accuracy(&archive, eval_set.instances()),
        converged: archive.model.converged,
        iterations: archive.model.iterations,
        final_loss: archive.model.final_loss,
    };
    write_json(&run_dir.join("train.json"), &report)?;
    Ok(report)
}

/// Collects one LLM record per eval instance, from the replay file or the
/// endpoint (through the response cache).
pub fn annotate(
    cfg: &RunConfig,
    run_dir: &Path,
    offline: bool,
) -> Result<AnnotateReport, CliError> {
    cfg.check_llm_source()?;
    let (_, eval) = load_eval(run_dir)?;
    let labels = eval.labels().to_vec();
    let (source, records, skipped, unknown_ids) = match (&cfg.llm.replay, &cfg.llm.endpoint) {
        (Some(path), _) => {
            let mut by_id: HashMap<String, LlmRecord> = HashMap::new();
            let mut unknown_ids = Vec::new();
            for r in replay_load(path, &labels)? {
                if eval.get(&r.id).is_none() {
                    unknown_ids.push(r.id.clone());
                } else if by_id.contains_key(&r.id) {
                    return Err(CliError::Artifact {
                        path: path.clone(),
                        reason: format!("duplicate replay entry for id {:?}", r.id),
                    });
                } else {
                    by_id.insert(r.id.clone(), r);
                }
            }
            let mut records = Vec::new();
            let mut skipped = Vec::new();
            for inst in eval.instances() {
                match by_id.remove(&inst.id) {
                    Some(r) => records.push(r),
                    None => skipped.push(inst.id.clone()),
                }
            }
            if !skipped.is_empty() {
                log::warn!(
                    "replay has no response for {} eval instances; skipped",
                    skipped.len()
                );
            }
            if !unknown_ids.is_empty() {
                log::warn!(
                    "{} replay entries are not in the eval split",
                    unknown_ids.len()
                );
            }
            ("replay".to_string(), records, skipped, unknown_ids)
        }
        (None, Some(endpoint)) => {
            let cache_dir = cfg
                .llm
                .cache_dir
                .clone()
                .unwrap_or_else(|| run_dir.join("cache"));
            let client = LlmClient::http(
                Some(endpoint.clone()),
                ResponseCache::new(cache_dir),
                offline,
            )?;
            let template = cfg.prompt_template()?;
            let results = annotate_live(
                &client,
                eval.instances(),
                &template,
                &labels,
                endpoint.max_in_flight,
            );
            let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            log::info!("{} network calls", client.network_calls());
            (
                format!("endpoint:{}", endpoint.model),
                records,
                Vec::new(),
                Vec::new(),
            )
        }
        (None, None) => unreachable!("checked by check_llm_source"),
    };
    coverage::write_jsonl(&records, &run_dir.join("records.jsonl"))
        .map_err(io_err(&run_dir.join("records.jsonl")))?;
    let report = AnnotateReport {
        source,
        n_records: records.len(),
        n_parsed: records.iter().filter(|r| r.is_parsed()).count(),
        parse_failures: records
            .iter()
            .filter(|r| !r.is_parsed())
            .map(|r| r.id.clone())
            .collect(),
        skipped,
        unknown_ids,
    };
    write_json(&run_dir.join("annotate.json"), &report)?;
    Ok(report)
}

/// Feature extraction, coverage, group means, bootstrap tests and the
/// confusion matrix.
pub fn evaluate(cfg: &RunConfig, run_dir: &Path) -> Result<Summary, CliError> {
    let model_path = require(run_dir, "model.json", "model archive", "train")?;
    let records_path = require(run_dir, "records.jsonl", "LLM records", "annotate")?;
    let (manifest, eval) = load_eval(run_dir)?;
    let archive = ModelArchive::load(&model_path)?;
    let records: Vec<LlmRecord> = read_jsonl(&records_path)?;
    let llm_by_id: HashMap<&str, &LlmRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();

    let featuresets: Vec<FeatureSet> = eval
        .instances()
        .iter()
        .map(|inst| {
            let x = archive.transform(&inst.text);
            let lr_class = argmax(&archive.model.logits(&x));
            let class = match cfg.features.class {
                FeatureClass::Lr => lr_class,
                FeatureClass::Llm => llm_by_id
                    .get(inst.id.as_str())
                    .and_then(|r| r.predicted_label.as_deref())
                    .and_then(|l| archive.model.class_index(l))
                    .unwrap_or(lr_class),
            };
            top_features(
                &archive.model,
                &archive.vocabulary,
                &inst.id,
                &x,
                class,
                cfg.features.k,
            )
        })
        .collect();
    let features_path = run_dir.join("features.jsonl");
    coverage::write_jsonl(&featuresets, &features_path).map_err(io_err(&features_path))?;

    let gold: HashMap<String, String> = eval
        .instances()
        .iter()
        .map(|i| (i.id.clone(), i.gold_label.clone()))
        .collect();
    let batch = batch_coverage(
        &featuresets,
        &records,
        &gold,
        &cfg.matching.matchers,
        &cfg.matching.edit,
        cfg.run.execution,
        cfg.matching.audit,
    );
    let csv_path = run_dir.join("coverage.csv");
    coverage::write_csv(&batch.records, &csv_path).map_err(io_err(&csv_path))?;
    let jsonl_path = run_dir.join("coverage.jsonl");
    coverage::write_jsonl(&batch.records, &jsonl_path).map_err(io_err(&jsonl_path))?;
    if cfg.matching.audit {
        let audit_path = run_dir.join("audit.jsonl");
        coverage::write_jsonl(&batch.audit, &audit_path).map_err(io_err(&audit_path))?;
    }

    let cm = confusion(
        records.iter().filter_map(|r| {
            let pred = r.predicted_label.as_deref()?;
            Some((gold.get(&r.id)?.as_str(), pred))
        }),
        &manifest.labels,
    )?;
    write_json(&run_dir.join("confusion.json"), &cm)?;

    let mut matchers = cfg.matching.matchers.clone();
    matchers.sort();
    matchers.dedup();
    let groups = summarize(&manifest.dataset, &batch.records, &matchers);
    let (bootstrap, bootstrap_skipped) = bootstrap_all(
        &batch.records,
        &matchers,
        cfg.bootstrap.n_resamples,
        cfg.bootstrap.seed,
        cfg.run.execution,
    )?;
    for s in &bootstrap_skipped {
        log::warn!("bootstrap skipped: {s}");
    }
    let mut scored: Vec<&str> = batch
        .records
        .iter()
        .map(|r| r.instance_id.as_str())
        .collect();
    scored.dedup();
    let summary = Summary {
        dataset: manifest.dataset.clone(),
        k: cfg.features.k,
        matchers,
        n_eval: eval.len(),
        n_scored: scored.len(),
        n_parse_failures: batch.parse_failures.len(),
        n_skipped: batch.skipped.len(),
        llm_accuracy: cm.accuracy(),
        groups,
        bootstrap,
        bootstrap_skipped,
    };
    write_json(&run_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Renders tables and figures from the evaluate outputs. Never recomputes
/// statistics except to regroup coverage records into scatter points.
pub fn report(run_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let summary_path = require(run_dir, "summary.json", "summary", "evaluate")?;
    let cm_path = require(run_dir, "confusion.json", "confusion matrix", "evaluate")?;
    let cov_path = require(run_dir, "coverage.csv", "coverage records", "evaluate")?;
    let summary: Summary = read_json(&summary_path)?;
    let cm: ConfusionMatrix = read_json(&cm_path)?;
    let records: Vec<CoverageRecord> =
        coverage::read_csv(&cov_path).map_err(|reason| CliError::Artifact {
            path: cov_path.clone(),
            reason,
        })?;

    let mut written = Vec::new();
    let mut emit = |rel: &str, contents: String| -> Result<(), CliError> {
        let path = run_dir.join(rel);
        write(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    emit(
        "tables/coverage.csv",
        report::coverage_table_csv(&summary.groups),
    )?;
    emit(
        "tables/coverage.txt",
        report::coverage_table_text(&summary.groups),
    )?;
    emit(
        "tables/bootstrap.csv",
        report::bootstrap_table_csv(&summary.dataset, &summary.bootstrap),
    )?;
    emit("tables/confusion.csv", report::confusion_csv(&cm))?;
    emit(
        "figures/confusion.svg",
        report::render_heatmap(
            &cm,
            &format!("Confusion matrix for {} (LLM vs. gold)", summary.dataset),
        ),
    )?;
    for &m in &summary.matchers {
        let points = report::scatter_points(&records, m);
        emit(
            &format!("figures/scatter_{m}.svg"),
            report::render_scatter(
                &points,
                &format!(
                    "{}: support vs. contradiction coverage ({m})",
                    summary.dataset
                ),
            ),
        )?;
    }
    Ok(written)
}

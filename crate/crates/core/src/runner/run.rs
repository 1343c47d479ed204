use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{self, CharSubset, EmbeddingTable, LoadSummary};
use crate::error::{Error, Result};
use crate::metrics::{self, BreakdownRow, FoldRecord, MetricsReport};
use crate::probe::{self, Head, MlpConfig, MlpParams, Predictions, SUBSTRING_THRESHOLD};
use crate::seed::derive_seed;
use crate::tasks::{
    build_constitution_dataset, build_length_dataset, FoldPlan, Label, ProbeDataset, ProbeExample,
    SubstringPairs, TableExamples,
};

use crate::scalar::Scalar;

use super::config::{ExperimentConfig, Precision};

const REPORT_VERSION: u32 = 1;
const EVAL_BATCH: usize = 2048;

/// A task/fold unit that failed; the rest of the run is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub task: String,
    pub fold: Option<usize>,
    pub kind: String,
    pub message: String,
}

/// Everything a run produces, written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub config: ExperimentConfig,
    /// SHA-256 of the embedding file bytes.
    pub embedding_sha256: String,
    pub n_tokens: usize,
    pub dim: usize,
    pub excluded_special: usize,
    pub excluded_marker_only: usize,
    pub fold_sizes: Vec<usize>,
    pub reports: Vec<MetricsReport>,
    pub failures: Vec<Failure>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn report(&self, task: &str) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.task == task)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One row per task and metric; F1 and accuracy as percentages.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task", "metric", "mean", "folds"])?;
        for r in &self.reports {
            for (name, m) in &r.metrics {
                let (label, value) = match name.as_str() {
                    "mse" => ("mse".to_string(), format!("{:.2}", m.mean)),
                    other => (format!("{other}_pct"), metrics::percent(m.mean)),
                };
                w.write_record([r.task.as_str(), &label, &value, &m.per_fold.len().to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Writes `report.json` and `summary.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let report = dir.join("report.json");
        fs::write(&report, self.to_json()?).map_err(|e| Error::io(&report, e))?;
        let summary = dir.join("summary.csv");
        fs::write(&summary, self.summary_csv()?).map_err(|e| Error::io(&summary, e))?;
        Ok(vec![report, summary])
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Per-fold output before aggregation.
#[derive(Debug, Default)]
struct FoldOutcome {
    record: Option<FoldRecord>,
    support: BTreeMap<String, usize>,
    /// key -> (count, correct, sum of predictions)
    breakdown: BTreeMap<String, (usize, usize, f64)>,
    baselines: BTreeMap<String, f64>,
    length_pairs: Vec<(u32, f64)>,
    notes: Vec<String>,
}

impl FoldOutcome {
    fn tally(&mut self, key: String, correct: bool, pred: f64) {
        *self.support.entry(key.clone()).or_default() += 1;
        let e = self.breakdown.entry(key).or_default();
        e.0 += 1;
        e.1 += usize::from(correct);
        e.2 += pred;
    }
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Length { fold: usize },
    Substring { fold: usize },
    Constitution { task: usize, fold: usize },
}

struct Context<'a, T> {
    cfg: &'a ExperimentConfig,
    table: &'a EmbeddingTable<T>,
    folds: &'a FoldPlan,
    length: Option<ProbeDataset>,
    substring: Option<SubstringPairs>,
    chars: Option<(CharSubset, Vec<T>)>,
    constitution: Vec<ProbeDataset>,
}

impl<T: Scalar> Context<'_, T> {
    fn probe_config(&self, in_dim: usize, out_dim: usize) -> MlpConfig {
        MlpConfig::new(in_dim, out_dim)
            .with_hidden(self.cfg.model.hidden_dim)
            .with_layers(self.cfg.model.n_layers)
    }

    fn fit(
        &self,
        tag: &str,
        fold: usize,
        examples: &[ProbeExample],
        out_dim: usize,
        head: &Head<'_, T>,
    ) -> Result<(MlpParams<T>, f64)> {
        let view = TableExamples::new(self.table, examples)?;
        let cfg = self.probe_config(probe::ExampleSet::input_dim(&view), out_dim);
        let seed = self.cfg.seed;
        let params = MlpParams::init(cfg, derive_seed(seed, &format!("init/{tag}"), &[fold as u64]))?;
        let ids: Vec<usize> = (0..examples.len()).collect();
        let train_cfg = self.cfg.train_config(derive_seed(seed, &format!("train/{tag}"), &[fold as u64]));
        let out = probe::train(params, &view, &ids, &train_cfg, head)?;
        let last = out.loss_curve.last().copied().unwrap_or(f64::NAN);
        Ok((out.params, last))
    }

    fn predict(&self, params: &MlpParams<T>, examples: &[ProbeExample], head: &Head<'_, T>) -> Result<Predictions<T>> {
        let view = TableExamples::new(self.table, examples)?;
        let ids: Vec<usize> = (0..examples.len()).collect();
        probe::predict_set(params, &view, &ids, head, EVAL_BATCH)
    }

    fn job_task(&self, job: Job) -> String {
        match job {
            Job::Length { .. } => "length".into(),
            Job::Substring { .. } => "substring".into(),
            Job::Constitution { task, .. } => self.constitution[task].task.tag(),
        }
    }

    fn run_job(&self, job: Job) -> Result<FoldOutcome> {
        match job {
            Job::Length { fold } => self.length_fold(fold),
            Job::Substring { fold } => self.substring_fold(fold),
            Job::Constitution { task, fold } => self.constitution_fold(task, fold),
        }
    }

    fn length_fold(&self, fold: usize) -> Result<FoldOutcome> {
        let ds = self.length.as_ref().expect("length dataset");
        let train = ds.select(|e| !self.folds.is_test(e.word, fold));
        let eval = ds.select(|e| self.folds.is_test(e.word, fold));
        let (params, loss) = self.fit("length", fold, &train, 1, &Head::Regression)?;
        let Predictions::Real(preds) = self.predict(&params, &eval, &Head::Regression)? else {
            unreachable!()
        };
        let preds = to_f64(&preds);
        let label_of = |e: &ProbeExample| match e.label {
            Label::Length(n) => n,
            _ => unreachable!(),
        };
        let labels: Vec<u32> = eval.iter().map(label_of).collect();
        let labels_f: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let classes: Vec<u32> = preds.iter().map(|&p| metrics::round_to_class(p)).collect();

        let mut out = FoldOutcome::default();
        let mut m = BTreeMap::new();
        m.insert("mse".to_string(), metrics::mse(&preds, &labels_f)?);
        m.insert("weighted_f1".to_string(), metrics::weighted_f1(&classes, &labels)?);
        m.insert("accuracy".to_string(), metrics::accuracy(&classes, &labels)?);

        let train_mean = train.iter().map(|e| label_of(e) as f64).sum::<f64>() / train.len() as f64;
        out.baselines.insert("label_variance".into(), metrics::variance(&labels_f)?);
        out.baselines.insert(
            "train_mean_mse".into(),
            metrics::mse(&vec![train_mean; labels_f.len()], &labels_f)?,
        );
        for ((&l, &c), &p) in labels.iter().zip(&classes).zip(&preds) {
            out.tally(format!("{l:02}"), l == c, p);
            out.length_pairs.push((l, p));
        }
        out.record = Some(FoldRecord {
            fold,
            train_size: train.len(),
            eval_size: eval.len(),
            skipped: None,
            final_train_loss: Some(loss),
            metrics: m,
        });
        Ok(out)
    }

    fn substring_fold(&self, fold: usize) -> Result<FoldOutcome> {
        let pairs = self.substring.as_ref().expect("substring pairs");
        let sampling = self.cfg.sampling_config(derive_seed(self.cfg.seed, "sampling", &[]));
        let sf = pairs.fold(self.folds, fold, &sampling)?;
        let mut out = FoldOutcome::default();
        if let Some(reason) = sf.skipped {
            out.record = Some(FoldRecord {
                fold,
                train_size: sf.train.len(),
                eval_size: sf.eval.len(),
                skipped: Some(reason),
                final_train_loss: None,
                metrics: BTreeMap::new(),
            });
            return Ok(out);
        }
        if (sf.eval.len() as u64) < sf.eval_candidates {
            out.notes.push(format!(
                "fold {fold}: evaluated {} of {} candidate pairs (uniform sample)",
                sf.eval.len(),
                sf.eval_candidates
            ));
        }
        let (params, loss) = self.fit("substring", fold, &sf.train.examples, 1, &Head::Binary)?;
        let Predictions::Probability(probs) = self.predict(&params, &sf.eval.examples, &Head::Binary)? else {
            unreachable!()
        };
        let probs = to_f64(&probs);
        let labels: Vec<bool> = sf
            .eval
            .examples
            .iter()
            .map(|e| matches!(e.label, Label::IsSubstring(true)))
            .collect();
        let preds: Vec<bool> = probs.iter().map(|&p| p > SUBSTRING_THRESHOLD).collect();
        let mut m = BTreeMap::new();
        m.insert("weighted_f1".to_string(), metrics::weighted_f1(&preds, &labels)?);
        m.insert("accuracy".to_string(), metrics::accuracy(&preds, &labels)?);
        out.baselines.insert(
            "all_negative_weighted_f1".into(),
            metrics::weighted_f1(&vec![false; labels.len()], &labels)?,
        );
        for ((&l, &p), &prob) in labels.iter().zip(&preds).zip(&probs) {
            let key = if l { "positive" } else { "negative" };
            out.tally(key.to_string(), l == p, prob);
        }
        out.record = Some(FoldRecord {
            fold,
            train_size: sf.train.len(),
            eval_size: sf.eval.len(),
            skipped: None,
            final_train_loss: Some(loss),
            metrics: m,
        });
        Ok(out)
    }

    fn constitution_fold(&self, task: usize, fold: usize) -> Result<FoldOutcome> {
        let ds = &self.constitution[task];
        let (chars, decoder) = self.chars.as_ref().expect("character subset");
        let head = Head::Char {
            decoder,
            n_chars: chars.len(),
        };
        let train = ds.select(|e| !self.folds.is_test(e.word, fold));
        let eval = ds.select(|e| self.folds.is_test(e.word, fold));
        let mut out = FoldOutcome::default();
        if train.is_empty() || eval.is_empty() {
            out.record = Some(FoldRecord {
                fold,
                train_size: train.len(),
                eval_size: eval.len(),
                skipped: Some("empty training or test split".into()),
                final_train_loss: None,
                metrics: BTreeMap::new(),
            });
            return Ok(out);
        }
        let (params, loss) = self.fit(&ds.task.tag(), fold, &train, self.table.dim(), &head)?;
        let Predictions::Class(preds) = self.predict(&params, &eval, &head)? else {
            unreachable!()
        };
        let class_of = |e: &ProbeExample| match e.label {
            Label::Char(c) => c,
            _ => unreachable!(),
        };
        let labels: Vec<usize> = eval.iter().map(class_of).collect();
        let classes: Vec<usize> = preds.iter().map(|&(c, _)| c).collect();
        let mut m = BTreeMap::new();
        m.insert("accuracy".to_string(), metrics::accuracy(&classes, &labels)?);
        m.insert("weighted_f1".to_string(), metrics::weighted_f1(&classes, &labels)?);

        let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
        for e in &train {
            *freq.entry(class_of(e)).or_default() += 1;
        }
        // most frequent training class, lowest id on ties
        let majority = freq.iter().max_by_key(|&(&c, &n)| (n, std::cmp::Reverse(c))).map(|(&c, _)| c).unwrap();
        out.baselines.insert(
            "majority_accuracy".into(),
            metrics::accuracy(&vec![majority; labels.len()], &labels)?,
        );
        for (&l, &(c, logp)) in labels.iter().zip(&preds) {
            out.tally(chars.char_of(l).to_string(), l == c, logp.to_f64_lossy().exp());
        }
        out.record = Some(FoldRecord {
            fold,
            train_size: train.len(),
            eval_size: eval.len(),
            skipped: None,
            final_train_loss: Some(loss),
            metrics: m,
        });
        Ok(out)
    }
}

fn aggregate(task: String, outcomes: Vec<FoldOutcome>, dropped: usize, with_mean_prediction: bool) -> MetricsReport {
    let mut report = MetricsReport::new(task);
    report.dropped = dropped;
    let mut breakdown: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();
    let mut baselines: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for o in outcomes {
        if let Some(r) = o.record {
            report.folds.push(r);
        }
        for (k, v) in o.support {
            *report.class_support.entry(k).or_default() += v;
        }
        for (k, (n, c, s)) in o.breakdown {
            let e = breakdown.entry(k).or_default();
            e.0 += n;
            e.1 += c;
            e.2 += s;
        }
        for (k, v) in o.baselines {
            baselines.entry(k).or_default().push(v);
        }
        report.length_predictions.extend(o.length_pairs);
        report.notes.extend(o.notes);
    }
    report.folds.sort_by_key(|f| f.fold);
    report.aggregate();
    report.baselines = baselines
        .into_iter()
        .map(|(k, v)| (k, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    report.breakdown = breakdown
        .into_iter()
        .map(|(key, (n, c, s))| BreakdownRow {
            key,
            count: n,
            accuracy: c as f64 / n as f64,
            mean_prediction: with_mean_prediction.then(|| s / n as f64),
        })
        .collect();
    report
}

/// Loads the embeddings, builds every selected task, trains `k` probes per
/// task (and per position/direction for the constitution task) and
/// aggregates the held-out scores.
///
/// Failures of single task/fold units are recorded in
/// [`RunReport::failures`]; everything else still runs. When
/// `output_dir` is set the report is also written there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    match cfg.model.precision {
        Precision::F32 => run_typed::<f32>(cfg),
        Precision::F64 => run_typed::<f64>(cfg),
    }
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn run_typed<T: Scalar>(cfg: &ExperimentConfig) -> Result<RunReport> {
    let path = &cfg.embeddings.path;
    let mut stored: EmbeddingTable<f64> = embedding::load(path, cfg.embeddings.format, &cfg.load)?;
    if let Some(n) = cfg.embeddings.max_tokens {
        stored.truncate(n);
    }
    let table: EmbeddingTable<T> = stored.cast();
    drop(stored);
    let summary: LoadSummary = table.summary();
    let folds = FoldPlan::new(table.len(), cfg.folds, derive_seed(cfg.seed, "folds", &[]))?;

    let mut failures = Vec::new();
    let mut notes = vec![
        "length classes: regression output rounded half away from zero, clamped to >= 1".to_string(),
        format!(
            "probe: {} layers, hidden {}, {:?} precision, optimizer {:?}, {} epochs, batch {}",
            cfg.model.n_layers,
            cfg.model.hidden_dim,
            cfg.model.precision,
            cfg.train.optimizer,
            cfg.train.epochs,
            cfg.train.batch_size
        ),
    ];

    let mut ctx = Context {
        cfg,
        table: &table,
        folds: &folds,
        length: None,
        substring: None,
        chars: None,
        constitution: Vec::new(),
    };
    let mut jobs = Vec::new();
    let k = cfg.folds;
    if cfg.tasks.length {
        ctx.length = Some(build_length_dataset(&table));
        jobs.extend((0..k).map(|fold| Job::Length { fold }));
    }
    if cfg.tasks.substring {
        ctx.substring = Some(SubstringPairs::new(&table));
        jobs.extend((0..k).map(|fold| Job::Substring { fold }));
        if let Some(cap) = cfg.sampling.max_eval_pairs {
            notes.push(format!("substring evaluation capped at {cap} pairs per fold"));
        }
    }
    if let Some(c) = &cfg.tasks.constitution {
        match CharSubset::from_table(&table) {
            Ok(chars) => {
                let decoder = chars.vectors(&table);
                for &dir in &c.directions {
                    for &n in &c.positions {
                        match build_constitution_dataset(&table, &chars, n, dir) {
                            Ok(ds) => ctx.constitution.push(ds),
                            Err(e) => failures.push(Failure {
                                task: format!("constitution/{}/{n}", dir.as_str()),
                                fold: None,
                                kind: e.kind().into(),
                                message: e.to_string(),
                            }),
                        }
                    }
                }
                ctx.chars = Some((chars, decoder));
            }
            Err(e) => failures.push(Failure {
                task: "constitution".into(),
                fold: None,
                kind: e.kind().into(),
                message: e.to_string(),
            }),
        }
        for task in 0..ctx.constitution.len() {
            jobs.extend((0..k).map(|fold| Job::Constitution { task, fold }));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<FoldOutcome>> = pool.install(|| jobs.par_iter().map(|&j| ctx.run_job(j)).collect());

    // group by task, preserving job order
    let mut grouped: Vec<(String, Vec<FoldOutcome>, usize, bool)> = Vec::new();
    for (job, res) in jobs.iter().zip(results) {
        let task = ctx.job_task(*job);
        let fold = match *job {
            Job::Length { fold } | Job::Substring { fold } | Job::Constitution { fold, .. } => fold,
        };
        if grouped.last().is_none_or(|g| g.0 != task) {
            let (dropped, mean_pred) = match job {
                Job::Length { .. } => (0, true),
                Job::Substring { .. } => (0, false),
                Job::Constitution { task, .. } => (ctx.constitution[*task].dropped, false),
            };
            grouped.push((task.clone(), Vec::new(), dropped, mean_pred));
        }
        match res {
            Ok(o) => grouped.last_mut().unwrap().1.push(o),
            Err(e) => failures.push(Failure {
                task,
                fold: Some(fold),
                kind: e.kind().into(),
                message: e.to_string(),
            }),
        }
    }
    let reports = grouped
        .into_iter()
        .map(|(task, outcomes, dropped, mean_pred)| aggregate(task, outcomes, dropped, mean_pred))
        .collect();

    let report = RunReport {
        version: REPORT_VERSION,
        config: cfg.clone(),
        embedding_sha256: sha256_file(path)?,
        n_tokens: table.len(),
        dim: table.dim(),
        excluded_special: summary.excluded_special,
        excluded_marker_only: summary.marker_only,
        fold_sizes: folds.fold_sizes(),
        reports,
        failures,
        notes,
    };
    if let Some(dir) = &cfg.output_dir {
        report.write_to(dir)?;
    }
    Ok(report)
}

//! End-to-end evaluation: hold out queries, train an ensemble on the rest,
//! and score embedding proportions and ensemble intervals.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::embedding::{BoxEmbedding, EmbeddingError};
use crate::inference::{GeometricInterpretation, InferenceError};
use crate::interval::ProbInterval;
use crate::metrics::{approximation_gap, EmbeddingItem, InferenceItem, MetricReport};
use crate::normalize::{normalize_with, NormalizeOptions};
use crate::ontology::{Conditional, TBox};
use crate::pmp::{generate_query_set, pmp_bounds_for_query, UpperBoundRule};
use crate::train::{train_ensemble, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> ExperimentError {
    move |e| ExperimentError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ensemble_size: usize,
    pub query_fraction: f64,
    pub repeats: usize,
    pub train: TrainConfig,
    pub upper_bound: UpperBoundRule,
    /// Worker threads for ensemble training (0 picks the default).
    pub threads: usize,
    /// How the training part is normalized before training.
    pub normalize: NormalizeOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ensemble_size: 10,
            query_fraction: 0.3,
            repeats: 1,
            train: TrainConfig::default(),
            upper_bound: UpperBoundRule::default(),
            threads: 0,
            normalize: NormalizeOptions { share: true, ..NormalizeOptions::default() },
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.ensemble_size == 0 {
            return Err(ExperimentError::Config("ensemble size must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(ExperimentError::Config("repeat count must be at least 1".into()));
        }
        if !(self.query_fraction > 0.0 && self.query_fraction <= 1.0) {
            return Err(ExperimentError::Config(format!("query fraction {} outside (0, 1]", self.query_fraction)));
        }
        self.train.validate().map_err(stage("config"))
    }

    /// Training seed base of repeat `r`; members use consecutive seeds.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        self.train.seed.wrapping_add((r * self.ensemble_size.max(1000)) as u64)
    }
}

/// One held-out query scored against its ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub query: Conditional,
    pub pmp: ProbInterval,
    /// Point estimate of each member, `None` where its body box is degenerate.
    pub estimates: Vec<Option<f64>>,
}

impl QueryResult {
    /// `[min, max]` of the first `n` members' estimates.
    pub fn prefix_interval(&self, n: usize) -> ProbInterval {
        let mut it = self.estimates[..n].iter().flatten();
        match it.next() {
            None => ProbInterval::Vacuous,
            Some(&first) => {
                let (lo, hi) = it.fold((first, first), |(lo, hi), &p| (lo.min(p), hi.max(p)));
                ProbInterval::Bounds { lower: lo, upper: hi }
            }
        }
    }

    fn item(&self, n: usize) -> Option<InferenceItem> {
        InferenceItem::new(self.query.shape(), self.pmp, self.prefix_interval(n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatResult {
    pub training: TBox,
    pub queries: Vec<QueryResult>,
    pub embeddings: Vec<BoxEmbedding>,
    pub embedding_items: Vec<EmbeddingItem>,
    /// Training conditionals whose body box was degenerate in some member.
    pub skipped_conditionals: usize,
    pub report: MetricReport,
    pub seconds_per_epoch: f64,
    pub ms_per_query: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub repeats: Vec<RepeatResult>,
    pub report: MetricReport,
    /// `(N, AG)` for ensemble prefixes `N = 1..=size`, pooled over repeats.
    pub ag_curve: Vec<(usize, f64)>,
}

/// Embedding error items of `t` under every embedding; conditionals whose
/// body is degenerate in an embedding are counted and skipped.
pub fn embedding_items(
    t: &TBox,
    members: &[GeometricInterpretation],
) -> Result<(Vec<EmbeddingItem>, usize), ExperimentError> {
    let mut items = Vec::with_capacity(t.len() * members.len());
    let mut skipped = 0;
    for m in members {
        m.embedding().covers(t.signature()).map_err(stage::<EmbeddingError>("embedding error"))?;
        for c in t {
            match m.point_estimate(&c.head, &c.body) {
                Ok(p) => items.push(EmbeddingItem {
                    shape: c.shape(),
                    expected: (c.lower() + c.upper()) / 2.0,
                    estimate: p,
                }),
                Err(InferenceError::DegenerateBody(_)) => skipped += 1,
                Err(e) => return Err(stage("embedding error")(e)),
            }
        }
    }
    Ok((items, skipped))
}

/// Embedding error of `t` pooled over the given embeddings.
pub fn run_embedding_error(t: &TBox, embeddings: &[BoxEmbedding]) -> Result<(MetricReport, usize), ExperimentError> {
    if embeddings.is_empty() {
        return Err(ExperimentError::Config("no embeddings given".into()));
    }
    let members: Vec<_> = embeddings.iter().cloned().map(GeometricInterpretation::new).collect();
    let (items, skipped) = embedding_items(t, &members)?;
    Ok((MetricReport::new(&items, &[]), skipped))
}

fn run_repeat(t: &TBox, cfg: &ExperimentConfig, r: usize) -> Result<RepeatResult, ExperimentError> {
    let seed = cfg.repeat_seed(r);
    let qs = generate_query_set(t, cfg.query_fraction, seed).map_err(stage("queryset"))?;
    let opts = NormalizeOptions {
        keep_conditionals: cfg.train.complex_conditionals,
        ..cfg.normalize
    };
    let normalized = normalize_with(&qs.training, opts);
    let mut signature = normalized.signature().clone();
    for q in &qs.queries {
        signature.add_concept(&q.query.head);
        signature.add_concept(&q.query.body);
    }
    let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
    let trained = train_ensemble(&normalized, &signature, &train_cfg, cfg.ensemble_size, cfg.threads)
        .map_err(stage("train"))?;
    let seconds_per_epoch =
        trained.iter().map(|(_, rep)| rep.mean_seconds_per_epoch()).sum::<f64>() / trained.len() as f64;
    let embeddings: Vec<BoxEmbedding> = trained.into_iter().map(|(e, _)| e).collect();
    let members: Vec<_> = embeddings.iter().cloned().map(GeometricInterpretation::new).collect();

    let start = Instant::now();
    let mut queries = Vec::with_capacity(qs.queries.len());
    for q in &qs.queries {
        let pmp = pmp_bounds_for_query(&qs.training, q, cfg.upper_bound).map_err(stage("pmp"))?;
        let mut estimates = Vec::with_capacity(members.len());
        for m in &members {
            estimates.push(match m.point_estimate(q.head(), q.body()) {
                Ok(p) => Some(p),
                Err(InferenceError::DegenerateBody(_)) => None,
                Err(e) => return Err(stage("infer")(e)),
            });
        }
        queries.push(QueryResult {
            query: q.query.clone(),
            pmp,
            estimates,
        });
    }
    let answered = (queries.len() * members.len()).max(1);
    let ms_per_query = start.elapsed().as_secs_f64() * 1e3 / answered as f64;

    let (embedding_items, skipped_conditionals) = embedding_items(&qs.training, &members)?;
    let inference: Vec<_> = queries.iter().filter_map(|q| q.item(cfg.ensemble_size)).collect();
    let report = MetricReport::new(&embedding_items, &inference);
    Ok(RepeatResult {
        training: qs.training,
        queries,
        embeddings,
        embedding_items,
        skipped_conditionals,
        report,
        seconds_per_epoch,
        ms_per_query,
    })
}

/// Runs every repeat and pools the items into one report and AG curve.
pub fn run_eval(t: &TBox, cfg: &ExperimentConfig) -> Result<EvalResult, ExperimentError> {
    cfg.validate()?;
    let repeats = (0..cfg.repeats)
        .map(|r| run_repeat(t, cfg, r))
        .collect::<Result<Vec<_>, _>>()?;
    let embedding: Vec<_> = repeats.iter().flat_map(|r| r.embedding_items.iter().copied()).collect();
    let inference: Vec<_> = repeats
        .iter()
        .flat_map(|r| r.queries.iter().filter_map(|q| q.item(cfg.ensemble_size)))
        .collect();
    let report = MetricReport::new(&embedding, &inference);
    let mut ag_curve = Vec::with_capacity(cfg.ensemble_size);
    for n in 1..=cfg.ensemble_size {
        let pairs: Vec<_> = repeats
            .iter()
            .flat_map(|r| r.queries.iter().filter_map(|q| q.item(n)))
            .map(|i| (i.truth, i.estimate))
            .collect();
        if let Ok(ag) = approximation_gap(&pairs) {
            ag_curve.push((n, ag));
        }
    }
    Ok(EvalResult {
        repeats,
        report,
        ag_curve,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn mkdir(path: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl EvalResult {
    pub fn ag_curve_csv(&self) -> String {
        let mut s = String::from("N,AG\n");
        for (n, ag) in &self.ag_curve {
            writeln!(s, "{n},{ag:.6}").unwrap();
        }
        s
    }

    /// Per repeat: mean seconds per training epoch and milliseconds per query.
    pub fn runtime_csv(&self) -> String {
        let mut s = String::from("repeat,seconds_per_epoch,ms_per_query\n");
        for (r, rep) in self.repeats.iter().enumerate() {
            writeln!(s, "{r},{:.6},{:.6}", rep.seconds_per_epoch, rep.ms_per_query).unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let total = &self.report.all.total;
        writeln!(s, "repeats: {}", self.repeats.len()).unwrap();
        writeln!(s, "conditionals scored: {}", total.conditionals).unwrap();
        writeln!(s, "queries scored: {}", total.queries).unwrap();
        let skipped: usize = self.repeats.iter().map(|r| r.skipped_conditionals).sum();
        writeln!(s, "degenerate-body estimates skipped: {skipped}").unwrap();
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        writeln!(s, "MAE {} MRE {}", fmt(total.mae), fmt(total.mre)).unwrap();
        writeln!(s, "SE {} SA {} AG {}", fmt(total.se), fmt(total.sa), fmt(total.ag)).unwrap();
        s.push('\n');
        s.push_str(&self.report.to_table());
        s.push_str("\nruntime\n");
        for (r, rep) in self.repeats.iter().enumerate() {
            writeln!(s, "repeat {r}: {:.4} s/epoch, {:.4} ms/query", rep.seconds_per_epoch, rep.ms_per_query).unwrap();
        }
        s
    }

    /// Writes `metrics.csv`, `ag_curve.csv`, `runtime.csv`, `summary.txt`,
    /// and per repeat `repeat_<r>/{metrics.csv,training.tbox,queries.csv}`.
    pub fn write_to(&self, dir: &Path) -> Result<(), ExperimentError> {
        mkdir(dir)?;
        write(&dir.join("metrics.csv"), &self.report.to_csv())?;
        write(&dir.join("ag_curve.csv"), &self.ag_curve_csv())?;
        write(&dir.join("runtime.csv"), &self.runtime_csv())?;
        write(&dir.join("summary.txt"), &self.summary())?;
        for (r, rep) in self.repeats.iter().enumerate() {
            let sub = dir.join(format!("repeat_{r}"));
            mkdir(&sub)?;
            write(&sub.join("metrics.csv"), &rep.report.to_csv())?;
            write(&sub.join("training.tbox"), &crate::ontology::serialize_tbox(&rep.training))?;
            let mut q = String::from("query,pmp_lower,pmp_upper,est_lower,est_upper\n");
            for res in &rep.queries {
                let (pl, pu) = res.pmp.bounds_or_unit();
                let est = res.prefix_interval(res.estimates.len());
                let cells = match est.bounds() {
                    Some((l, u)) => format!("{l:.6},{u:.6}"),
                    None => ",".to_string(),
                };
                writeln!(q, "\"{}\",{pl:.6},{pu:.6},{cells}", res.query).unwrap();
            }
            write(&sub.join("queries.csv"), &q)?;
        }
        Ok(())
    }

    /// Writes each repeat's embeddings as `repeat_<r>/member_<i>.json`.
    pub fn write_embeddings(&self, dir: &Path) -> Result<(), ExperimentError> {
        for (r, rep) in self.repeats.iter().enumerate() {
            let sub = dir.join(format!("repeat_{r}"));
            mkdir(&sub)?;
            for (i, e) in rep.embeddings.iter().enumerate() {
                write(&sub.join(format!("member_{i}.json")), &e.to_json())?;
            }
        }
        Ok(())
    }
}

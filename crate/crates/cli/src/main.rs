use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use selbox::experiment::{run_embedding_error, run_eval, ExperimentConfig};
use selbox::generator::{generate, GeneratorConfig};
use selbox::inference::{ensemble_interval, GeometricInterpretation, InferenceError};
use selbox::normalize::{is_normal_form, is_safe, normalize, normalize_with, NormalizeOptions};
use selbox::ontology::{parse_query, parse_tbox_with, serialize_tbox, Concept, Conditional, ParseOptions};
use selbox::oracle::{query_bounds, OracleError};
use selbox::pmp::{find_premises, generate_query_set, pmp_bounds_for_query, UpperBoundRule};
use selbox::train::{train_ensemble, TrainConfig};
use selbox::{BoxEmbedding, RelationMode, TBox};

#[derive(Parser)]
#[command(name = "selbox", version, about = "Box embeddings for statistical EL ontologies")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for ensemble training (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a TBox from a random finite interpretation.
    Gen {
        #[arg(long, default_value_t = 20)]
        concepts: usize,
        #[arg(long, default_value_t = 2)]
        roles: usize,
        #[arg(long, default_value_t = 1000)]
        domain: usize,
        /// Widen every interval by this amount on each side.
        #[arg(long, default_value_t = 0.0)]
        slack: f64,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the sampled interpretation as JSON.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Rewrite a TBox into normal form.
    Normalize {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// One fresh name per distinct complex concept; atomic sides are kept.
        #[arg(long)]
        share: bool,
    },
    /// Hold out PMP queries from a TBox.
    Queryset {
        tbox: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
        /// Query file (TBox format).
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        train_out: PathBuf,
    },
    /// Train one embedding, or an ensemble with `--ensemble N`.
    Train {
        tbox: PathBuf,
        /// A JSON file for a single embedding, a directory of
        /// `member_<i>.json` files for an ensemble.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        ensemble: usize,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Point estimates of a query under trained embeddings.
    Infer {
        #[arg(required = true)]
        embeddings: Vec<PathBuf>,
        #[arg(long)]
        query: String,
    },
    /// PMP interval of a query from its premises in a TBox.
    Pmp {
        tbox: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, value_enum, default_value_t = Rule::Proposition)]
        upper_bound: Rule,
    },
    /// Exact interval of a query over a role-free TBox.
    Oracle {
        tbox: PathBuf,
        #[arg(long)]
        query: String,
    },
    /// Full evaluation: hold out queries, train, score.
    Eval {
        tbox: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        ensemble: usize,
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, value_enum, default_value_t = Rule::Proposition)]
        upper_bound: Rule,
        /// Also store the trained embeddings here.
        #[arg(long)]
        embeddings_dir: Option<PathBuf>,
        /// Give every probabilistic conditional its own fresh names when normalizing.
        #[arg(long)]
        no_share: bool,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Embedding error of a TBox under trained embeddings.
    EmbError {
        tbox: PathBuf,
        #[arg(required = true)]
        embeddings: Vec<PathBuf>,
        /// Print CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Final learning rate as a fraction of `--lr`.
    #[arg(long, default_value_t = 1.0)]
    lr_final_ratio: f64,
    #[arg(long, default_value_t = 10.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    t_start: f64,
    #[arg(long, default_value_t = 1e-3)]
    t_end: f64,
    /// Disable the location regularizer.
    #[arg(long)]
    no_loc: bool,
    /// Disable the volume regularizer.
    #[arg(long)]
    no_vol: bool,
    #[arg(long, value_enum, default_value_t = Relation::Affine)]
    relation: Relation,
    /// Penalize probabilistic conditionals on volume ratios instead of volumes.
    #[arg(long)]
    relative_loss: bool,
    /// Train probabilistic conditionals over complex concepts directly.
    #[arg(long)]
    complex_conditionals: bool,
    /// Smallest initial side length as a fraction of `--beta`.
    #[arg(long, default_value_t = 0.1)]
    init_side_min: f64,
    /// Largest initial side length as a fraction of `--beta`.
    #[arg(long, default_value_t = 0.5)]
    init_side_max: f64,
}

#[derive(ValueEnum, Clone, Copy)]
enum Relation {
    Affine,
    Translation,
}

#[derive(ValueEnum, Clone, Copy)]
enum Rule {
    Proposition,
    Pseudocode,
}

impl From<Rule> for UpperBoundRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Proposition => UpperBoundRule::Proposition,
            Rule::Pseudocode => UpperBoundRule::Pseudocode,
        }
    }
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            lr_final_ratio: self.lr_final_ratio,
            seed,
            beta: self.beta,
            t_start: self.t_start,
            t_end: self.t_end,
            use_loc: !self.no_loc,
            use_vol: !self.no_vol,
            relation_mode: match self.relation {
                Relation::Affine => RelationMode::Affine,
                Relation::Translation => RelationMode::Translation,
            },
            relative_loss: self.relative_loss,
            complex_conditionals: self.complex_conditionals,
            init_side_min: self.init_side_min,
            init_side_max: self.init_side_max,
            ..TrainConfig::default()
        }
    }
}

/// Failure classes mapped to exit codes 1 and 2.
enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

type Outcome = Result<(), Failure>;

trait Classify<T> {
    fn user(self) -> Result<T, Failure>;
    fn internal(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn user(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::User(e.into()))
    }
    fn internal(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Internal(e.into()))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .user()
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .user()
}

fn load_tbox(path: &Path, allow_reserved: bool) -> Result<TBox, Failure> {
    let text = read(path)?;
    parse_tbox_with(&text, ParseOptions { allow_reserved })
        .with_context(|| format!("parsing {}", path.display()))
        .user()
}

fn load_query(text: &str) -> Result<(Concept, Concept), Failure> {
    parse_query(text, ParseOptions { allow_reserved: true })
        .with_context(|| format!("parsing query `{text}`"))
        .user()
}

fn load_embeddings(paths: &[PathBuf]) -> Result<Vec<BoxEmbedding>, Failure> {
    paths
        .iter()
        .map(|p| {
            BoxEmbedding::from_json(&read(p)?)
                .with_context(|| format!("parsing {}", p.display()))
                .user()
        })
        .collect()
}

fn print(text: &str) -> Outcome {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).internal()
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Gen {
            concepts,
            roles,
            domain,
            slack,
            output,
            ground_truth,
        } => {
            let cfg = GeneratorConfig {
                concepts,
                roles,
                domain,
                seed: cli.seed,
                slack,
                ..GeneratorConfig::default()
            };
            let (gt, t) = generate(&cfg).user()?;
            write(&output, &serialize_tbox(&t))?;
            if let Some(path) = ground_truth {
                write(&path, &gt.to_json())?;
            }
            log::info!("wrote {} conditionals", t.len());
        }
        Command::Normalize { input, output, share } => {
            let t = load_tbox(&input, false)?;
            let n = normalize_with(&t, NormalizeOptions { share, ..Default::default() });
            if !is_safe(&n).internal()? {
                eprintln!("warning: normalized TBox is not safe: a probabilistic conditional mentions a concept equivalent to top");
            }
            write(&output, &serialize_tbox(&n))?;
        }
        Command::Queryset {
            tbox,
            fraction,
            output,
            train_out,
        } => {
            let t = load_tbox(&tbox, false)?;
            let qs = generate_query_set(&t, fraction, cli.seed).user()?;
            let queries: TBox = qs.queries.iter().map(|q| q.query.clone()).collect();
            write(&output, &serialize_tbox(&queries))?;
            write(&train_out, &serialize_tbox(&qs.training))?;
        }
        Command::Train {
            tbox,
            output,
            ensemble,
            train,
        } => {
            let mut t = load_tbox(&tbox, true)?;
            if !is_normal_form(&t) && !train.complex_conditionals {
                log::warn!("input is not in normal form; normalizing before training");
                t = normalize(&t);
            }
            let cfg = train.config(cli.seed);
            let trained = train_ensemble(&t, t.signature(), &cfg, ensemble, cli.threads).user()?;
            if ensemble == 1 {
                write(&output, &trained[0].0.to_json())?;
            } else {
                fs::create_dir_all(&output)
                    .with_context(|| format!("creating {}", output.display()))
                    .user()?;
                for (i, (e, _)) in trained.iter().enumerate() {
                    write(&output.join(format!("member_{i}.json")), &e.to_json())?;
                }
            }
            for (_, report) in &trained {
                eprintln!(
                    "seed {}: hard loss {:.6e} -> {:.6e}, {:.4} s/epoch",
                    report.seed,
                    report.initial_hard_loss,
                    report.final_hard_loss,
                    report.mean_seconds_per_epoch()
                );
            }
        }
        Command::Infer { embeddings, query } => {
            let (head, body) = load_query(&query)?;
            let members: Vec<_> = load_embeddings(&embeddings)?
                .into_iter()
                .map(GeometricInterpretation::new)
                .collect();
            let mut out = String::new();
            for (path, m) in embeddings.iter().zip(&members) {
                match m.point_estimate(&head, &body) {
                    Ok(p) => out.push_str(&format!("{}\t{p}\n", path.display())),
                    Err(InferenceError::DegenerateBody(_)) => out.push_str(&format!("{}\tDEGENERATE\n", path.display())),
                    Err(e) => return Err(Failure::User(e.into())),
                }
            }
            let iv = ensemble_interval(&members, &head, &body).user()?;
            match iv.bounds() {
                Some((l, u)) => out.push_str(&format!("interval\t{l}\t{u}\n")),
                None => out.push_str("interval\tVACUOUS\n"),
            }
            print(&out)?;
        }
        Command::Pmp { tbox, query, upper_bound } => {
            let t = load_tbox(&tbox, true)?;
            let (head, body) = load_query(&query)?;
            let q = Conditional::new(head, body, 0.0, 1.0).internal()?;
            let premises = find_premises(&t, &q).user()?;
            let iv = pmp_bounds_for_query(&t, &premises, upper_bound.into()).internal()?;
            print(&format!("{iv}\n"))?;
        }
        Command::Oracle { tbox, query } => {
            let t = load_tbox(&tbox, true)?;
            let (head, body) = load_query(&query)?;
            match query_bounds(&t, &head, &body) {
                Ok(iv) => print(&format!("{iv}\n"))?,
                Err(OracleError::Inconsistent) => print("INCONSISTENT\n")?,
                Err(e @ (OracleError::Roles(_) | OracleError::TooManyNames(..))) => return Err(Failure::User(e.into())),
                Err(e) => return Err(Failure::Internal(e.into())),
            }
        }
        Command::Eval {
            tbox,
            output,
            ensemble,
            fraction,
            repeats,
            upper_bound,
            embeddings_dir,
            no_share,
            train,
        } => {
            let t = load_tbox(&tbox, false)?;
            let cfg = ExperimentConfig {
                ensemble_size: ensemble,
                query_fraction: fraction,
                repeats,
                train: train.config(cli.seed),
                upper_bound: upper_bound.into(),
                threads: cli.threads,
                normalize: NormalizeOptions { share: !no_share, ..Default::default() },
            };
            cfg.validate().user()?;
            let result = run_eval(&t, &cfg).internal()?;
            result.write_to(&output).user()?;
            if let Some(dir) = embeddings_dir {
                result.write_embeddings(&dir).user()?;
            }
            print(&result.summary())?;
        }
        Command::EmbError { tbox, embeddings, csv } => {
            let t = load_tbox(&tbox, true)?;
            let (report, skipped) = run_embedding_error(&t, &load_embeddings(&embeddings)?).user()?;
            if skipped > 0 {
                eprintln!("warning: {skipped} estimates skipped because the body box is degenerate");
            }
            print(&if csv { report.to_csv() } else { report.to_table() })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! The `accent` command line.

use std::fs;
use std::io::{self, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::attack::{
    attack_all, eval_row, identifier_vocab, token_vocab, AttackConfig, AttackContext, Method,
};
use crate::corpus::{self, save_adversarial, save_dataset, write_jsonl, CodeSample, Dataset};
use crate::embed::{train_embeddings_with_stats, CandidatePool, EmbeddingConfig, EmbeddingTable};
use crate::lang::{code_subtokens, validate, Lang};
use crate::metrics::{build_report, EvalRow, RobustnessReport};
use crate::model::{
    mask_identifiers, serve, train_toy, Adapter, AdapterConfig, CommentModel, EchoModel,
    MaskedTrainConfig, SurrogateModel, ToyModel, Transport,
};
use crate::synth::synth_corpus;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ADAPTER: i32 = 3;
pub const EXIT_EMPTY: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::new(EXIT_INPUT, e.to_string())
}

type CliResult<T> = Result<T, CliError>;

/// Everything a run depends on. Loaded from a TOML file, overridden by
/// flags, and echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lang: Lang,
    pub dataset: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub adversarial: Option<PathBuf>,
    pub adapter: Option<String>,
    pub out: PathBuf,
    pub jobs: usize,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub attack: AttackConfig,
    pub embedding: EmbeddingConfig,
    pub masked: MaskedTrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lang: Lang::Java,
            dataset: None,
            train: None,
            embeddings: None,
            adversarial: None,
            adapter: None,
            out: PathBuf::from("out"),
            jobs: 1,
            timeout_ms: 30_000,
            max_in_flight: 4,
            attack: AttackConfig::default(),
            embedding: EmbeddingConfig::default(),
            masked: MaskedTrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    fn require<'a>(&self, v: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
        v.as_deref()
            .ok_or_else(|| input_err(format!("missing --{flag} (or `{flag}` in the config file)")))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "accent",
    version,
    about = "Identifier-substitution attacks on code comment generators"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Samples attacked in parallel (capped by the adapter's max in flight).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    lang: Option<Lang>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "")]
        prefix: String,
    },
    /// Train identifier embeddings on a dataset's code.
    EmbedTrain {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        min_count: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate adversarial examples and a robustness report.
    Attack {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Dataset whose identifiers form the candidate vocabulary (default: --dataset).
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        adapter: Option<String>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        max: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mh_iterations: Option<usize>,
        #[arg(long)]
        mh_temperature: Option<f64>,
        #[arg(long)]
        timeout_ms: Option<u64>,
        #[arg(long)]
        max_in_flight: Option<usize>,
    },
    /// Mask identifiers with `<unk>` throughout a dataset.
    Mask {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        count_masked: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the toy comment model, optionally with masked training.
    TrainToy {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        masked: bool,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        count_masked: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-score originals and adversarial examples with a model.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        adversarial: Option<PathBuf>,
        #[arg(long)]
        adapter: Option<String>,
        #[arg(long)]
        timeout_ms: Option<u64>,
        #[arg(long)]
        max_in_flight: Option<usize>,
    },
    /// Serve a model over the line-delimited JSON protocol on stdio or TCP.
    Serve {
        #[arg(long)]
        adapter: Option<String>,
        /// `host:port` to listen on instead of stdio.
        #[arg(long)]
        listen: Option<String>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
        CliError::new(code, e.to_string())
    })?;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.out, cli.out);
    set(&mut cfg.jobs, cli.jobs);
    set(&mut cfg.lang, cli.lang);

    match cli.command {
        Command::Synth { n, seed, prefix } => {
            let samples = synth_corpus(cfg.lang, n, seed, &prefix);
            let path = prepare_out(&cfg)?.join("synth.jsonl");
            save_dataset(&samples, &path).map_err(input_err)?;
            println!("wrote {} samples to {}", samples.len(), path.display());
            Ok(())
        }
        Command::EmbedTrain {
            corpus,
            dim,
            window,
            epochs,
            negatives,
            min_count,
            learning_rate,
            seed,
        } => {
            set_opt(&mut cfg.dataset, corpus);
            let e = &mut cfg.embedding;
            set(&mut e.dim, dim);
            set(&mut e.window, window);
            set(&mut e.epochs, epochs);
            set(&mut e.negatives, negatives);
            set(&mut e.min_count, min_count);
            set(&mut e.learning_rate, learning_rate);
            set(&mut e.seed, seed);
            cmd_embed_train(&cfg)
        }
        Command::Attack {
            dataset,
            train,
            adapter,
            embeddings,
            method,
            max,
            k,
            alpha,
            beta,
            seed,
            mh_iterations,
            mh_temperature,
            timeout_ms,
            max_in_flight,
        } => {
            set_opt(&mut cfg.dataset, dataset);
            set_opt(&mut cfg.train, train);
            set_opt(&mut cfg.adapter, adapter);
            set_opt(&mut cfg.embeddings, embeddings);
            set(&mut cfg.timeout_ms, timeout_ms);
            set(&mut cfg.max_in_flight, max_in_flight);
            let a = &mut cfg.attack;
            set(&mut a.method, method);
            set(&mut a.max, max);
            set(&mut a.k, k);
            set(&mut a.alpha, alpha);
            set(&mut a.beta, beta);
            set(&mut a.seed, seed);
            set(&mut a.mh_iterations, mh_iterations);
            set(&mut a.mh_temperature, mh_temperature);
            cmd_attack(&cfg)
        }
        Command::Mask {
            dataset,
            count_masked,
            seed,
        } => {
            set_opt(&mut cfg.dataset, dataset);
            set(&mut cfg.masked.count_masked, count_masked);
            set(&mut cfg.masked.seed, seed);
            cmd_mask(&cfg)
        }
        Command::TrainToy {
            dataset,
            masked,
            lambda,
            count_masked,
            epochs,
            learning_rate,
            batch_size,
            seed,
        } => {
            set_opt(&mut cfg.dataset, dataset);
            let m = &mut cfg.masked;
            set(&mut m.lambda, lambda);
            set(&mut m.count_masked, count_masked);
            set(&mut m.epochs, epochs);
            set(&mut m.learning_rate, learning_rate);
            set(&mut m.batch_size, batch_size);
            set(&mut m.seed, seed);
            cmd_train_toy(&cfg, masked)
        }
        Command::Evaluate {
            dataset,
            adversarial,
            adapter,
            timeout_ms,
            max_in_flight,
        } => {
            set_opt(&mut cfg.dataset, dataset);
            set_opt(&mut cfg.adversarial, adversarial);
            set_opt(&mut cfg.adapter, adapter);
            set(&mut cfg.timeout_ms, timeout_ms);
            set(&mut cfg.max_in_flight, max_in_flight);
            cmd_evaluate(&cfg)
        }
        Command::Serve { adapter, listen } => {
            set_opt(&mut cfg.adapter, adapter);
            cmd_serve(&cfg, listen.as_deref())
        }
    }
}

fn prepare_out(cfg: &RunConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out).map_err(|e| input_err(format!("{}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

fn load(path: &Path, lang: Lang) -> CliResult<Dataset> {
    let ds = corpus::load_dataset(path, lang).map_err(input_err)?;
    if ds.dropped > 0 {
        eprintln!("{}: dropped {} invalid lines", path.display(), ds.dropped);
    }
    Ok(ds)
}

/// A model named by an adapter spec, together with how many requests it
/// may have outstanding (`None` when unbounded).
pub struct LoadedModel {
    pub model: Box<dyn CommentModel>,
    pub max_in_flight: Option<usize>,
}

/// Resolves `exec:<cmd>`, `tcp:<host>:<port>`, `builtin:surrogate:<train.jsonl>`,
/// `builtin:toy:<model file>` or `builtin:echo`.
pub fn open_adapter(spec: &str, cfg: &RunConfig) -> CliResult<LoadedModel> {
    let remote = |transport| -> CliResult<LoadedModel> {
        let config = AdapterConfig {
            transport,
            timeout_ms: cfg.timeout_ms,
            max_in_flight: cfg.max_in_flight,
        };
        let adapter =
            Adapter::connect(&config).map_err(|e| CliError::new(EXIT_ADAPTER, e.to_string()))?;
        Ok(LoadedModel {
            model: Box::new(adapter),
            max_in_flight: Some(cfg.max_in_flight.max(1)),
        })
    };
    let local = |model: Box<dyn CommentModel>| LoadedModel {
        model,
        max_in_flight: None,
    };
    if let Some(cmd) = spec.strip_prefix("exec:") {
        remote(Transport::SubprocessStdio(cmd.to_string()))
    } else if let Some(addr) = spec.strip_prefix("tcp:") {
        remote(Transport::Tcp(addr.to_string()))
    } else if let Some(path) = spec.strip_prefix("builtin:surrogate:") {
        let train = load(Path::new(path), cfg.lang)?;
        let m = SurrogateModel::new(&train, cfg.lang)
            .map_err(|e| CliError::new(EXIT_ADAPTER, e.to_string()))?;
        Ok(local(Box::new(m)))
    } else if let Some(path) = spec.strip_prefix("builtin:toy:") {
        let m = ToyModel::load(Path::new(path))
            .map_err(|e| CliError::new(EXIT_ADAPTER, e.to_string()))?;
        Ok(local(Box::new(m)))
    } else if spec == "builtin:echo" {
        Ok(local(Box::new(EchoModel)))
    } else {
        Err(input_err(format!("unrecognised adapter spec `{spec}`")))
    }
}

fn require_adapter(cfg: &RunConfig) -> CliResult<LoadedModel> {
    let spec = cfg
        .adapter
        .as_deref()
        .ok_or_else(|| input_err("missing --adapter (or `adapter` in the config file)"))?;
    open_adapter(spec, cfg)
}

fn cmd_embed_train(cfg: &RunConfig) -> CliResult<()> {
    let path = cfg.require(&cfg.dataset, "corpus")?;
    let ds = load(path, cfg.lang)?;
    let sentences: Vec<Vec<String>> = ds
        .samples
        .iter()
        .map(|s| code_subtokens(&s.code, cfg.lang).unwrap_or_default())
        .collect();
    let (table, stats) =
        train_embeddings_with_stats(&sentences, &cfg.embedding).map_err(input_err)?;
    let out = prepare_out(cfg)?.join("embeddings.txt");
    table.save(&out).map_err(input_err)?;
    println!("vocab size {}", stats.vocab_size);
    println!("final objective {:.6}", stats.final_objective);
    println!("wrote {}", out.display());
    Ok(())
}

fn write_report(cfg: &RunConfig, report: &RobustnessReport) -> CliResult<()> {
    let out = prepare_out(cfg)?;
    fs::write(out.join("report.json"), report.to_json()).map_err(input_err)?;
    fs::write(out.join("report.txt"), report.to_text()).map_err(input_err)?;
    Ok(())
}

fn cmd_attack(cfg: &RunConfig) -> CliResult<()> {
    cfg.attack.check().map_err(input_err)?;
    let dataset = load(cfg.require(&cfg.dataset, "dataset")?, cfg.lang)?;
    let train = match &cfg.train {
        Some(p) => load(p, cfg.lang)?,
        None => dataset.clone(),
    };
    let table = match (&cfg.embeddings, cfg.attack.method) {
        (Some(p), _) => EmbeddingTable::load(p).map_err(input_err)?,
        (None, Method::Random) => EmbeddingTable::from_parts(1, 1, 0, vec![], vec![]),
        (None, _) => {
            return Err(input_err(
                "missing --embeddings (required by accent and mh)",
            ))
        }
    };
    let vocab = identifier_vocab(&train, cfg.lang);
    let pool = CandidatePool::new(&vocab, &table);
    let raw = token_vocab(&train, cfg.lang);
    let ctx = AttackContext {
        table: &table,
        pool: &pool,
        raw_vocab: &raw,
    };
    let loaded = require_adapter(cfg)?;
    let jobs = match loaded.max_in_flight {
        Some(cap) => cfg.jobs.min(cap),
        None => cfg.jobs,
    };
    let results = attack_all(
        &dataset.samples,
        loaded.model.as_ref(),
        &ctx,
        &cfg.attack,
        jobs,
    );

    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (sample, r) in dataset.samples.iter().zip(results) {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => failures.push(format!("{}: {e}", sample.id)),
        }
    }
    for f in &failures {
        eprintln!("attack failed for {f}");
    }
    if ok.is_empty() {
        return Err(CliError::new(
            EXIT_EMPTY,
            "no sample was attacked successfully",
        ));
    }
    let out = prepare_out(cfg)?;
    let adv: Vec<_> = ok.iter().map(|r| r.adv.clone()).collect();
    save_adversarial(&adv, &out.join("adversarial.jsonl")).map_err(input_err)?;
    write_jsonl(
        &out.join("attack_results.jsonl"),
        ok.iter()
            .map(|r| serde_json::to_value(r).expect("plain data")),
    )
    .map_err(input_err)?;
    let rows: Vec<EvalRow> = ok.iter().map(eval_row).collect();
    let mut report = build_report(&rows, cfg.echo());
    report
        .notes
        .extend(failures.iter().map(|f| format!("failed: {f}")));
    write_report(cfg, &report)?;
    print!("{}", report.to_text());
    Ok(())
}

fn cmd_mask(cfg: &RunConfig) -> CliResult<()> {
    let dataset = load(cfg.require(&cfg.dataset, "dataset")?, cfg.lang)?;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.masked.seed);
    let masked: Vec<CodeSample> = dataset
        .samples
        .iter()
        .map(|s| CodeSample {
            code: mask_identifiers(&s.code, cfg.lang, cfg.masked.count_masked, &mut rng),
            ..s.clone()
        })
        .collect();
    let out = prepare_out(cfg)?.join("masked.jsonl");
    save_dataset(&masked, &out).map_err(input_err)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_train_toy(cfg: &RunConfig, masked: bool) -> CliResult<()> {
    let dataset = load(cfg.require(&cfg.dataset, "dataset")?, cfg.lang)?;
    if dataset.is_empty() {
        return Err(input_err("training set is empty"));
    }
    let (model, history) = train_toy(&dataset, cfg.lang, &cfg.masked, masked).map_err(input_err)?;
    let out = prepare_out(cfg)?;
    model.save(&out.join("toy_model.txt")).map_err(input_err)?;
    let mut csv = String::from("epoch,combined,origin,masked\n");
    for h in &history {
        let m = h.masked.map_or(String::new(), |m| format!("{m:.9}"));
        csv.push_str(&format!(
            "{},{:.9},{:.9},{}\n",
            h.epoch, h.combined, h.origin, m
        ));
    }
    fs::write(out.join("loss.csv"), csv).map_err(input_err)?;
    let mut run = serde_json::Map::new();
    run.insert("config".into(), cfg.echo());
    run.insert("masked".into(), masked.into());
    fs::write(
        out.join("train_config.json"),
        serde_json::to_string_pretty(&run).expect("plain data") + "\n",
    )
    .map_err(input_err)?;
    let last = history.last().expect("initial entry");
    println!(
        "loss {:.6} -> {:.6} over {} epochs",
        history[0].combined, last.combined, last.epoch
    );
    println!("wrote {}", out.join("toy_model.txt").display());
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig) -> CliResult<()> {
    let dataset = load(cfg.require(&cfg.dataset, "dataset")?, cfg.lang)?;
    let adv = corpus::load_adversarial(cfg.require(&cfg.adversarial, "adversarial")?)
        .map_err(input_err)?;
    let by_id: HashMap<&str, &CodeSample> =
        dataset.samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut pairs = Vec::with_capacity(adv.len());
    for a in &adv {
        let Some(orig) = by_id.get(a.original_id.as_str()) else {
            return Err(CliError::new(
                EXIT_MISMATCH,
                format!(
                    "adversarial id `{}` not found in the dataset",
                    a.original_id
                ),
            ));
        };
        pairs.push((*orig, a));
    }
    if pairs.is_empty() {
        return Err(CliError::new(
            EXIT_EMPTY,
            "no adversarial samples to evaluate",
        ));
    }
    let loaded = require_adapter(cfg)?;
    let model = loaded.model.as_ref();
    let mut rows = Vec::with_capacity(pairs.len());
    for (orig, a) in pairs {
        let q = |code: &str| {
            model
                .generate(code)
                .map_err(|e| CliError::new(EXIT_ADAPTER, format!("{}: {e}", orig.id)))
        };
        rows.push(EvalRow {
            id: orig.id.clone(),
            reference: orig.comment.clone(),
            output_before: q(&orig.code)?,
            output_after: q(&a.adv_code)?,
            valid: validate(&a.adv_code, cfg.lang),
            queries: 2,
        });
    }
    let report = build_report(&rows, cfg.echo());
    write_report(cfg, &report)?;
    print!("{}", report.to_text());
    Ok(())
}

fn cmd_serve(cfg: &RunConfig, listen: Option<&str>) -> CliResult<()> {
    let loaded = require_adapter(cfg)?;
    let model = loaded.model.as_ref();
    match listen {
        None => serve(model, io::stdin().lock(), io::stdout().lock()).map_err(input_err),
        Some(addr) => {
            let listener = TcpListener::bind(addr).map_err(input_err)?;
            eprintln!("listening on {}", listener.local_addr().map_err(input_err)?);
            for stream in listener.incoming() {
                let stream = stream.map_err(input_err)?;
                let reader = BufReader::new(stream.try_clone().map_err(input_err)?);
                if let Err(e) = serve(model, reader, stream) {
                    eprintln!("connection closed: {e}");
                }
            }
            Ok(())
        }
    }
}

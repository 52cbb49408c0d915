//! Command-line front end: gen-data, train, predict, eval, analyze.
//!
//! Every subcommand writes into a run directory: its outputs plus a
//! config.json holding the fully resolved settings (and, where data is
//! read, content hashes), so any run directory documents how to repeat
//! the run. Tunable flags override a config file loaded with --config;
//! anything given neither way takes its serialized default. Set SITU_LOG
//! to control log verbosity (error|warn|info|debug).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{export_embeddings, propagation_norm_matrix, write_heatmap_svg, write_matrix_csv};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate, cluster_confusion, write_confusion_csv, write_report_csv, MatchRule, MetricReport,
};
use crate::inference::{Decoder, PredictionBundle, PredictionRecord, ScoreNorm};
use crate::model::{Model, NetConfig, Nonlinearity};
use crate::numerics::Real;
use crate::ontology::{load_dataset, write_dataset, Instance, Ontology, VerbId};
use crate::synthetic::{generate_synthetic, GenConfig};
use crate::topology::TopologyKind;
use crate::training::{train, write_history_csv, Checkpoint, TrainConfig};

/// Parse argv, run, and return the process exit code.
pub fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SITU_LOG", "info"))
        .format_timestamp(None)
        .try_init()
        .ok();
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "situ",
    version,
    about = "Situation recognition: graph-network training, decoding, metrics, and structure analysis"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset with plantable role correlations.
    GenData(GenDataArgs),
    /// Train a model and write a checkpoint plus the loss history.
    Train(TrainArgs),
    /// Decode a dataset with a checkpoint into a JSONL dump.
    Predict(PredictArgs),
    /// Score predictions (from a dump or a checkpoint) into report CSVs.
    Eval(EvalArgs),
    /// Export propagation-norm matrices and learned embeddings.
    Analyze(AnalyzeArgs),
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::GenData(a) => cmd_gen_data(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Predict(a) => cmd_predict(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Analyze(a) => cmd_analyze(a),
    }
}

// ── Shared plumbing ──

/// Numeric width models run at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

fn parse_on_off(s: &str) -> std::result::Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on|off, got '{other}'")),
    }
}

fn parse_topology(s: &str) -> Result<TopologyKind> {
    s.parse()
}

fn parse_nonlin(s: &str) -> Result<Nonlinearity> {
    s.parse()
}

fn parse_score_norm(s: &str) -> std::result::Result<ScoreNorm, String> {
    match s {
        "mean" => Ok(ScoreNorm::MeanRoles),
        "sum" => Ok(ScoreNorm::SumRoles),
        other => Err(format!("expected mean|sum, got '{other}'")),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path.display().to_string(), e))
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(format!("{:x}", h.finalize()))
}

/// Keep verb names safe as file-name fragments.
fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn load_checkpoint_and_data(
    model_path: &Path,
    data_path: &Path,
) -> Result<(Checkpoint, Ontology, Vec<Instance>)> {
    let ckpt = Checkpoint::load(model_path)?;
    let (ontology, instances) = load_dataset(data_path)?;
    let sha = ontology.sha256();
    if ckpt.ontology_sha256 != sha {
        return Err(Error::Data(format!(
            "checkpoint was trained on ontology {} but {} holds ontology {}",
            &ckpt.ontology_sha256[..12.min(ckpt.ontology_sha256.len())],
            data_path.display(),
            &sha[..12]
        )));
    }
    Ok((ckpt, ontology, instances))
}

// ── gen-data ──

#[derive(Args)]
struct GenDataArgs {
    /// Run directory for train.json, dev.json, and config.json.
    #[arg(long)]
    out: PathBuf,
    /// Config file from an earlier run (flags below override it).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    verbs: Option<usize>,
    #[arg(long)]
    roles: Option<usize>,
    #[arg(long)]
    nouns: Option<usize>,
    #[arg(long)]
    min_roles: Option<usize>,
    #[arg(long)]
    max_roles: Option<usize>,
    #[arg(long)]
    train_instances: Option<usize>,
    #[arg(long)]
    dev_instances: Option<usize>,
    /// Probability that a planted partner's feature block is masked.
    #[arg(long)]
    correlation: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    /// Norm of each encoded one-hot feature image.
    #[arg(long)]
    feature_scale: Option<f64>,
    #[arg(long)]
    empty_noun_prob: Option<f64>,
    #[arg(long)]
    annotator_fidelity: Option<f64>,
    /// Include the aliased agent-like role (on|off).
    #[arg(long, value_parser = parse_on_off)]
    alias_role: Option<bool>,
    #[arg(long)]
    clusters: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenRunConfig {
    seed: u64,
    generator: GenConfig,
}

impl Default for GenRunConfig {
    fn default() -> Self {
        GenRunConfig { seed: 0, generator: GenConfig::default() }
    }
}

fn cmd_gen_data(args: GenDataArgs) -> Result<()> {
    let mut rc: GenRunConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => GenRunConfig::default(),
    };
    let g = &mut rc.generator;
    macro_rules! over {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
    }
    over!(args.seed, rc.seed);
    over!(args.verbs, g.verbs);
    over!(args.roles, g.roles);
    over!(args.nouns, g.nouns);
    over!(args.min_roles, g.min_roles_per_frame);
    over!(args.max_roles, g.max_roles_per_frame);
    over!(args.train_instances, g.train_instances);
    over!(args.dev_instances, g.dev_instances);
    over!(args.correlation, g.correlation);
    over!(args.noise, g.noise);
    over!(args.feature_scale, g.feature_scale);
    over!(args.empty_noun_prob, g.empty_noun_prob);
    over!(args.annotator_fidelity, g.annotator_fidelity);
    over!(args.alias_role, g.with_alias_role);
    over!(args.clusters, g.clusters);

    let data = generate_synthetic(&rc.generator, rc.seed)?;
    ensure_dir(&args.out)?;
    let train_path = args.out.join("train.json");
    let dev_path = args.out.join("dev.json");
    write_dataset(&train_path, &data.ontology, &data.train)?;
    write_dataset(&dev_path, &data.ontology, &data.dev)?;
    write_json(&args.out.join("config.json"), &rc)?;
    println!(
        "wrote {} train / {} dev instances to {} (ontology {})",
        data.train.len(),
        data.dev.len(),
        args.out.display(),
        &data.ontology.sha256()[..12]
    );
    Ok(())
}

// ── train ──

#[derive(Args)]
struct TrainArgs {
    /// Directory holding train.json (and optionally dev.json).
    #[arg(long)]
    data: PathBuf,
    /// Run directory for model.json, history.csv, and config.json.
    #[arg(long)]
    out: PathBuf,
    /// Config file from an earlier run (flags below override it).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_topology)]
    topology: Option<TopologyKind>,
    /// Propagation steps T.
    #[arg(long)]
    steps: Option<usize>,
    /// Hidden width D.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long, value_parser = parse_nonlin)]
    nonlin: Option<Nonlinearity>,
    /// Condition role inputs on the annotated verb (on|off).
    #[arg(long, value_parser = parse_on_off)]
    verb_onehot: Option<bool>,
    /// Use the single-trajectory recurrent variant (chain/tree only).
    #[arg(long)]
    rnn: bool,
    /// Add verb↔role edges to the fully-connected layout.
    #[arg(long)]
    fc_verb_edges: bool,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Apply dropout to the verb slot too (on|off).
    #[arg(long, value_parser = parse_on_off)]
    dropout_verb_head: Option<bool>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    lr_decay_after: Option<usize>,
    /// Evaluate the dev split every N epochs (0 = never).
    #[arg(long)]
    dev_every: Option<usize>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
}

/// What `config.json` records after a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainRunConfig {
    precision: Precision,
    net: NetConfig,
    train: TrainConfig,
    /// Filled on output; ignored when the file is fed back via --config.
    provenance: Option<Provenance>,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            precision: Precision::F64,
            net: NetConfig::default(),
            train: TrainConfig::default(),
            provenance: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Provenance {
    data_dir: String,
    train_sha256: String,
    dev_sha256: Option<String>,
    ontology_sha256: String,
}

fn resolve_train(args: &TrainArgs) -> Result<TrainRunConfig> {
    let mut rc: TrainRunConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => TrainRunConfig::default(),
    };
    macro_rules! over {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
    }
    over!(args.precision, rc.precision);
    over!(args.topology, rc.net.topology);
    over!(args.steps, rc.net.steps);
    over!(args.hidden, rc.net.hidden);
    over!(args.nonlin, rc.net.nonlinearity);
    over!(args.verb_onehot, rc.net.verb_onehot);
    if args.rnn {
        rc.net.sequential = true;
    }
    if args.fc_verb_edges {
        rc.net.fc_verb_edges = true;
    }
    over!(args.batch, rc.train.batch);
    over!(args.lr, rc.train.lr);
    over!(args.epochs, rc.train.epochs);
    over!(args.seed, rc.train.seed);
    over!(args.dropout, rc.train.dropout);
    over!(args.dropout_verb_head, rc.train.dropout_verb_head);
    over!(args.clip, rc.train.clip);
    over!(args.lr_decay, rc.train.lr_decay);
    over!(args.lr_decay_after, rc.train.lr_decay_after);
    over!(args.dev_every, rc.train.dev_every);
    rc.net.validate()?;
    rc.train.validate()?;
    Ok(rc)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut rc = resolve_train(&args)?;
    let train_path = args.data.join("train.json");
    let dev_path = args.data.join("dev.json");
    let (ontology, train_set) = load_dataset(&train_path)?;
    let dev_set = if dev_path.exists() {
        let (dev_ont, dev_set) = load_dataset(&dev_path)?;
        if dev_ont.sha256() != ontology.sha256() {
            return Err(Error::Data(format!(
                "{} and {} hold different ontologies",
                train_path.display(),
                dev_path.display()
            )));
        }
        Some(dev_set)
    } else {
        log::warn!("{} not found; training without dev metrics", dev_path.display());
        None
    };
    if train_set.is_empty() {
        return Err(Error::Data(format!("{} has no instances", train_path.display())));
    }

    ensure_dir(&args.out)?;
    rc.provenance = Some(Provenance {
        data_dir: args.data.display().to_string(),
        train_sha256: file_sha256(&train_path)?,
        dev_sha256: if dev_path.exists() { Some(file_sha256(&dev_path)?) } else { None },
        ontology_sha256: ontology.sha256(),
    });
    write_json(&args.out.join("config.json"), &rc)?;

    match rc.precision {
        Precision::F32 => {
            train_at::<f32>(&rc, &ontology, &train_set, dev_set.as_deref().unwrap_or(&[]), &args.out)
        }
        Precision::F64 => {
            train_at::<f64>(&rc, &ontology, &train_set, dev_set.as_deref().unwrap_or(&[]), &args.out)
        }
    }
}

fn train_at<R: Real>(
    rc: &TrainRunConfig,
    ontology: &Ontology,
    train_set: &[Instance],
    dev_set: &[Instance],
    out: &Path,
) -> Result<()> {
    let verb_feat = train_set[0].phi_v.cols();
    let noun_feat = train_set[0].phi_n.cols();
    let model = Model::<R>::init(ontology, rc.net, verb_feat, noun_feat, rc.train.seed)?;
    log::info!(
        "training {} parameters at {} for {} epochs on {} instances",
        model.params.len(),
        R::NAME,
        rc.train.epochs,
        train_set.len()
    );
    let outcome = train(model, ontology, train_set, dev_set, &rc.train)?;
    write_history_csv(&out.join("history.csv"), &outcome.history)?;
    let ckpt = Checkpoint::from_model(
        &outcome.model,
        Some(&outcome.optimizer),
        Some(&rc.train),
        &ontology.sha256(),
    );
    ckpt.save(&out.join("model.json"))?;

    match outcome.history.last() {
        Some(last) => {
            let dev = match (last.dev_verb, last.dev_value, last.dev_value_all) {
                (Some(v), Some(va), Some(vaa)) => {
                    format!(", dev verb {v:.2} value {va:.2} value-all {vaa:.2}")
                }
                _ => String::new(),
            };
            println!(
                "trained {} epochs: final loss {:.4}{dev} -> {}",
                outcome.history.len(),
                last.train_loss,
                out.join("model.json").display()
            );
        }
        None => println!("saved untrained model -> {}", out.join("model.json").display()),
    }
    Ok(())
}

// ── predict ──

#[derive(Args)]
struct PredictArgs {
    /// Checkpoint file written by train.
    #[arg(long)]
    model: PathBuf,
    /// Dataset file to decode (e.g. a run's dev.json).
    #[arg(long)]
    data: PathBuf,
    /// Run directory for predictions.jsonl and config.json.
    #[arg(long)]
    out: PathBuf,
    /// Beam width B over candidate verbs.
    #[arg(long, default_value_t = 1)]
    beam: usize,
    /// Greedy decoding; identical to --beam 1.
    #[arg(long, conflicts_with = "beam")]
    greedy: bool,
    /// Verbs listed per record (defaults to max(5, beam)).
    #[arg(long)]
    top_list: Option<usize>,
    /// How role log-probabilities enter candidate totals (mean|sum).
    #[arg(long, value_parser = parse_score_norm)]
    score_norm: Option<ScoreNorm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PredictRunConfig {
    model: String,
    data: String,
    data_sha256: String,
    beam: usize,
    top_list: usize,
    score_norm: ScoreNorm,
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let (ckpt, ontology, instances) = load_checkpoint_and_data(&args.model, &args.data)?;
    let beam = if args.greedy { 1 } else { args.beam };
    let top_list = args.top_list.unwrap_or(beam.max(5));
    let score_norm = args.score_norm.unwrap_or_default();

    ensure_dir(&args.out)?;
    let rc = PredictRunConfig {
        model: args.model.display().to_string(),
        data: args.data.display().to_string(),
        data_sha256: file_sha256(&args.data)?,
        beam,
        top_list,
        score_norm,
    };
    write_json(&args.out.join("config.json"), &rc)?;

    let out_path = args.out.join("predictions.jsonl");
    let n = match ckpt.precision.as_str() {
        "f32" => predict_at::<f32>(&ckpt, &ontology, &instances, &rc, &out_path)?,
        "f64" => predict_at::<f64>(&ckpt, &ontology, &instances, &rc, &out_path)?,
        other => return Err(Error::Data(format!("checkpoint precision '{other}' unknown"))),
    };
    println!("wrote {n} predictions to {}", out_path.display());
    Ok(())
}

fn predict_at<R: Real>(
    ckpt: &Checkpoint,
    ontology: &Ontology,
    instances: &[Instance],
    rc: &PredictRunConfig,
    out_path: &Path,
) -> Result<usize> {
    let (model, _) = ckpt.into_model::<R>()?;
    let decoder = Decoder::new(&model, ontology, rc.score_norm)?;
    let mut lines = String::new();
    for inst in instances {
        let bundle = decoder.predict_for_metrics(inst, rc.beam)?;
        let lps = decoder.verb_log_probs(&inst.phi_v)?;
        let record = PredictionRecord::build(ontology, inst, &bundle, &lps, rc.top_list);
        lines.push_str(&serde_json::to_string(&record)?);
        lines.push('\n');
    }
    std::fs::write(out_path, lines).map_err(|e| Error::io(out_path.display().to_string(), e))?;
    Ok(instances.len())
}

// ── eval ──

#[derive(Args)]
struct EvalArgs {
    /// Dataset file with the annotations to score against.
    #[arg(long)]
    data: PathBuf,
    /// Run directory for report.csv, confusion.csv, and config.json.
    #[arg(long)]
    out: PathBuf,
    /// Prediction dump from predict (alternative to --model).
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Checkpoint to decode with (alternative to --pred).
    #[arg(long, conflicts_with = "pred")]
    model: Option<PathBuf>,
    /// Beam width when decoding with --model.
    #[arg(long, default_value_t = 1)]
    beam: usize,
    /// Count value-all only when one annotator matches on every role.
    #[arg(long)]
    whole_annotator: bool,
    /// How role log-probabilities enter candidate totals (mean|sum).
    #[arg(long, value_parser = parse_score_norm)]
    score_norm: Option<ScoreNorm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EvalRunConfig {
    data: String,
    data_sha256: String,
    pred: Option<String>,
    model: Option<String>,
    beam: Option<usize>,
    match_rule: String,
    score_norm: ScoreNorm,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let rule =
        if args.whole_annotator { MatchRule::WholeAnnotator } else { MatchRule::AnyAnnotator };
    let score_norm = args.score_norm.unwrap_or_default();

    let (paired, bundles, beam, ontology) = match (&args.pred, &args.model) {
        (Some(pred_path), None) => {
            let (ontology, instances) = load_dataset(&args.data)?;
            let (paired, bundles) = bundles_from_dump(pred_path, &ontology, &instances)?;
            (paired, bundles, None, ontology)
        }
        (None, Some(model_path)) => {
            let (ckpt, ontology, instances) = load_checkpoint_and_data(model_path, &args.data)?;
            let bundles = match ckpt.precision.as_str() {
                "f32" => bundles_from_model::<f32>(&ckpt, &ontology, &instances, args.beam, score_norm)?,
                "f64" => bundles_from_model::<f64>(&ckpt, &ontology, &instances, args.beam, score_norm)?,
                other => {
                    return Err(Error::Data(format!("checkpoint precision '{other}' unknown")))
                }
            };
            (instances, bundles, Some(args.beam), ontology)
        }
        _ => {
            return Err(Error::Config(
                "eval needs exactly one of --pred (a dump) or --model (a checkpoint)".into(),
            ))
        }
    };

    let report = aggregate(&paired, &bundles, rule)?;
    ensure_dir(&args.out)?;
    let rc = EvalRunConfig {
        data: args.data.display().to_string(),
        data_sha256: file_sha256(&args.data)?,
        pred: args.pred.as_ref().map(|p| p.display().to_string()),
        model: args.model.as_ref().map(|p| p.display().to_string()),
        beam,
        match_rule: rule.name().to_string(),
        score_norm,
    };
    write_json(&args.out.join("config.json"), &rc)?;
    write_report_csv(&args.out.join("report.csv"), &report, rule, score_norm, beam)?;

    if !ontology.clusters().is_empty() {
        let top1: Vec<VerbId> = bundles.iter().map(|b| b.top1.verb).collect();
        let matrices = cluster_confusion(&ontology, &paired, &top1)?;
        write_confusion_csv(&args.out.join("confusion.csv"), &ontology, &matrices)?;
    }

    print_report(&report);
    println!("report -> {}", args.out.join("report.csv").display());
    Ok(())
}

fn print_report(r: &MetricReport) {
    println!(
        "mean {:.2} over {} instances | top1 verb {:.2} value {:.2} value-all {:.2} | \
         top5 verb {:.2} value {:.2} value-all {:.2} | gt value {:.2} value-all {:.2}",
        r.mean,
        r.count,
        r.top1_verb,
        r.top1_value,
        r.top1_value_all,
        r.top5_verb,
        r.top5_value,
        r.top5_value_all,
        r.gt_value,
        r.gt_value_all
    );
}

fn bundles_from_model<R: Real>(
    ckpt: &Checkpoint,
    ontology: &Ontology,
    instances: &[Instance],
    beam: usize,
    score_norm: ScoreNorm,
) -> Result<Vec<PredictionBundle>> {
    let (model, _) = ckpt.into_model::<R>()?;
    let decoder = Decoder::new(&model, ontology, score_norm)?;
    instances.iter().map(|inst| decoder.predict_for_metrics(inst, beam)).collect()
}

/// Pair dump records with their instances by id, preserving dump order.
fn bundles_from_dump(
    pred_path: &Path,
    ontology: &Ontology,
    instances: &[Instance],
) -> Result<(Vec<Instance>, Vec<PredictionBundle>)> {
    let text = std::fs::read_to_string(pred_path)
        .map_err(|e| Error::io(pred_path.display().to_string(), e))?;
    let by_id: BTreeMap<&str, &Instance> =
        instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut paired = Vec::new();
    let mut bundles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(line).map_err(|e| {
            Error::Data(format!("{}:{}: {e}", pred_path.display(), lineno + 1))
        })?;
        let inst = by_id.get(record.id.as_str()).ok_or_else(|| {
            Error::Data(format!(
                "{}:{}: no instance with id '{}' in the dataset",
                pred_path.display(),
                lineno + 1,
                record.id
            ))
        })?;
        bundles.push(record.to_bundle(ontology)?);
        paired.push((*inst).clone());
    }
    if bundles.is_empty() {
        return Err(Error::Data(format!("{}: no prediction records", pred_path.display())));
    }
    Ok((paired, bundles))
}

// ── analyze ──

#[derive(Args)]
struct AnalyzeArgs {
    /// Checkpoint file written by train.
    #[arg(long)]
    model: PathBuf,
    /// Dataset file to average message norms over (e.g. dev.json).
    #[arg(long)]
    data: PathBuf,
    /// Run directory for matrices, embeddings, and config.json.
    #[arg(long)]
    out: PathBuf,
    /// Layout to measure (defaults to the checkpoint's).
    #[arg(long, value_parser = parse_topology)]
    topology: Option<TopologyKind>,
    /// Restrict to one verb by name (default: every verb in the data).
    #[arg(long)]
    verb: Option<String>,
    /// Include the shared message bias in each norm (on|off).
    #[arg(long, value_parser = parse_on_off)]
    include_bias: Option<bool>,
    /// Also render an SVG heatmap per matrix.
    #[arg(long)]
    svg: bool,
    /// Skip the embedding CSV export.
    #[arg(long)]
    skip_embeddings: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnalyzeRunConfig {
    model: String,
    data: String,
    data_sha256: String,
    topology: TopologyKind,
    verb: Option<String>,
    include_bias: bool,
    svg: bool,
    embeddings: bool,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let (ckpt, ontology, instances) = load_checkpoint_and_data(&args.model, &args.data)?;
    let kind = args.topology.unwrap_or(ckpt.net.topology);
    let include_bias = args.include_bias.unwrap_or(true);

    let verbs: Vec<VerbId> = match &args.verb {
        Some(name) => {
            let v = ontology.verb_id(name).ok_or_else(|| {
                Error::Config(format!("unknown verb '{name}' (not in the dataset's ontology)"))
            })?;
            vec![v]
        }
        None => {
            let mut seen = vec![false; ontology.n_verbs()];
            for inst in &instances {
                seen[inst.verb.0] = true;
            }
            (0..ontology.n_verbs()).filter(|&v| seen[v]).map(VerbId).collect()
        }
    };
    if verbs.is_empty() {
        return Err(Error::Data(format!("{} has no instances", args.data.display())));
    }

    ensure_dir(&args.out)?;
    let rc = AnalyzeRunConfig {
        model: args.model.display().to_string(),
        data: args.data.display().to_string(),
        data_sha256: file_sha256(&args.data)?,
        topology: kind,
        verb: args.verb.clone(),
        include_bias,
        svg: args.svg,
        embeddings: !args.skip_embeddings,
    };
    write_json(&args.out.join("config.json"), &rc)?;

    match ckpt.precision.as_str() {
        "f32" => analyze_at::<f32>(&ckpt, &ontology, &instances, &verbs, &rc, &args.out),
        "f64" => analyze_at::<f64>(&ckpt, &ontology, &instances, &verbs, &rc, &args.out),
        other => Err(Error::Data(format!("checkpoint precision '{other}' unknown"))),
    }
}

fn analyze_at<R: Real>(
    ckpt: &Checkpoint,
    ontology: &Ontology,
    instances: &[Instance],
    verbs: &[VerbId],
    rc: &AnalyzeRunConfig,
    out: &Path,
) -> Result<()> {
    let (model, _) = ckpt.into_model::<R>()?;
    let mut wrote = 0;
    for &verb in verbs {
        let pm = propagation_norm_matrix(
            &model,
            ontology,
            verb,
            instances,
            rc.topology,
            rc.include_bias,
        )?;
        if pm.is_structureless() {
            log::info!(
                "verb '{}': layout {} has no role-to-role edges",
                ontology.verb_name(verb),
                rc.topology
            );
        }
        let stem = sanitize(ontology.verb_name(verb));
        write_matrix_csv(&out.join(format!("propagation_{stem}.csv")), &pm, ontology)?;
        if rc.svg {
            write_heatmap_svg(&out.join(format!("propagation_{stem}.svg")), &pm, ontology)?;
        }
        wrote += 1;
    }
    let emb = if rc.embeddings {
        let (vp, rp) = export_embeddings(&model, ontology, out)?;
        format!(
            " plus embeddings ({}, {})",
            vp.file_name().unwrap_or_default().to_string_lossy(),
            rp.file_name().unwrap_or_default().to_string_lossy()
        )
    } else {
        String::new()
    };
    println!("wrote {wrote} propagation matrices to {}{emb}", out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn on_off_and_score_norm_parsers() {
        assert_eq!(parse_on_off("on"), Ok(true));
        assert_eq!(parse_on_off("off"), Ok(false));
        assert!(parse_on_off("maybe").is_err());
        assert_eq!(parse_score_norm("mean"), Ok(ScoreNorm::MeanRoles));
        assert_eq!(parse_score_norm("sum"), Ok(ScoreNorm::SumRoles));
        assert!(parse_score_norm("median").is_err());
    }

    #[test]
    fn sanitize_keeps_only_path_safe_characters() {
        assert_eq!(sanitize("v00"), "v00");
        assert_eq!(sanitize("a/b c"), "a_b_c");
    }
}

mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::json;
use voyagegraph::corpus::{corpus_stats, load_corpus, save_corpus, split_corpus, SplitRatio};
use voyagegraph::document::Document;
use voyagegraph::eval::{irp_tally, label_agreement, pool_tallies, relation_agreement, trp_tally, AgreementReport};
use voyagegraph::graph::{ChainMode, VisitingOrderGraph};
use voyagegraph::pipeline::{
    parents_from_edges, predict_irp, predict_trp, prediction_edges, successors_from_edges, IrpSystem, TrpSystem,
};
use voyagegraph::report;
use voyagegraph::synth::{
    generate_corpus, HeuristicParentScorer, OracleScorer, OracleScorerConfig, ProximitySuccessorScorer, SynthConfig,
};
use voyagegraph::vop::{Decoder, OccStrategy, SuccessorAssignment};
use voyagegraph::vsp::{self, evaluate_vsp, pooled_entity_labels, pooled_mention_labels, MajorityBaseline};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "voyagegraph", version, about = "Visiting order graphs over annotated travelogues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every document's graph; exits 1 when any violation is found.
    Validate {
        corpus: PathBuf,
        /// Also require each sibling group to form a single chain.
        #[arg(long)]
        strict: bool,
    },
    /// Corpus statistics.
    Stats {
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Seeded train/dev/test split into id-list files.
    Split {
        corpus: PathBuf,
        #[arg(long, default_value = "7:1:2")]
        ratio: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a synthetic corpus.
    Synth {
        /// JSON generator config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config document count.
        #[arg(long)]
        documents: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict mention and entity visit status labels.
    PredictVsp(PredictArgs),
    /// Predict parents over the gold graph nodes.
    PredictIrp(PredictArgs),
    /// Predict successors within the gold sibling groups.
    PredictTrp(PredictArgs),
    /// Score predictions against gold annotations.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long, value_enum, default_value = "mention")]
        level: Level,
        #[arg(long)]
        json: bool,
    },
    /// Agreement between two annotations of the same documents.
    Iaa {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct PredictArgs {
    corpus: PathBuf,
    #[arg(long, value_enum)]
    system: System,
    /// Decoder for scored transition systems.
    #[arg(long, value_enum, default_value = "seqsort")]
    decoder: DecoderArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise level of the oracle system.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Training corpus for the majority system; defaults to the input.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum System {
    Majority,
    Flat,
    Random,
    OccorderEm,
    OccorderVs,
    Oracle,
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DecoderArg {
    Naive,
    Seqsort,
}

impl From<DecoderArg> for Decoder {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Naive => Decoder::Naive,
            DecoderArg::Seqsort => Decoder::SequenceSort,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Task {
    Vsp,
    Irp,
    Trp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Level {
    Mention,
    Entity,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VOYAGEGRAPH_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { corpus, strict } => validate(&corpus, strict),
        Command::Stats { corpus, json } => stats(&corpus, json),
        Command::Split { corpus, ratio, seed, out_dir } => split(&corpus, &ratio, seed, &out_dir),
        Command::Synth { config, seed, documents, out } => synth(config.as_deref(), seed, documents, &out),
        Command::PredictVsp(args) => predict("predict-vsp", &args, predict_vsp_docs),
        Command::PredictIrp(args) => predict("predict-irp", &args, predict_irp_docs),
        Command::PredictTrp(args) => predict("predict-trp", &args, predict_trp_docs),
        Command::Evaluate { gold, pred, task, level, json } => evaluate(&gold, &pred, task, level, json),
        Command::Iaa { a, b, json } => iaa(&a, &b, json),
    }
}

fn load(path: &Path, check_graph: bool) -> Result<Vec<Document>> {
    let docs = load_corpus(path, check_graph).with_context(|| format!("reading {}", path.display()))?;
    info!("loaded {} documents from {}", docs.len(), path.display());
    Ok(docs)
}

fn save(path: &Path, mut docs: Vec<Document>) -> Result<()> {
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    save_corpus(path, &docs).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(&format!("{}\n", serde_json::to_string_pretty(value)?))
}

/// Writes to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn gold_graph(doc: &Document) -> Result<VisitingOrderGraph> {
    match doc.build_graph(ChainMode::Lenient) {
        Ok(Some(g)) => Ok(g),
        Ok(None) => bail!("document `{}` has no graph", doc.id),
        Err(v) => bail!("document `{}` has an invalid graph: {v:?}", doc.id),
    }
}

fn validate(path: &Path, strict: bool) -> Result<ExitCode> {
    let docs = load(path, false)?;
    let mode = if strict { ChainMode::Strict } else { ChainMode::Lenient };
    let mut total = 0;
    for d in &docs {
        if let Err(violations) = d.build_graph(mode) {
            total += violations.len();
            emit(&report::violation_lines(&d.id, &violations))?;
        }
    }
    eprintln!("{} documents, {total} violations", docs.len());
    Ok(if total == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn stats(path: &Path, json: bool) -> Result<ExitCode> {
    let s = corpus_stats(&load(path, false)?);
    if json {
        print_json(&s)?;
    } else {
        emit(&report::stats_table(&s))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn split(path: &Path, ratio: &str, seed: u64, out_dir: &Path) -> Result<ExitCode> {
    let ratio: SplitRatio = ratio.parse()?;
    let docs = load(path, false)?;
    let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let parts = split_corpus(&ids, ratio, seed)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut manifest = RunManifest::new("split", &json!({ "ratio": ratio.to_string(), "seed": seed }))
        .seed("split", seed)
        .input(path);
    for (name, ids) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
        let file = out_dir.join(format!("{name}.txt"));
        let body: String = ids.iter().map(|id| format!("{id}\n")).collect();
        std::fs::write(&file, body).with_context(|| format!("writing {}", file.display()))?;
        manifest = manifest.output(&file);
        emit(&format!("{name}\t{}\n", ids.len()))?;
    }
    manifest.write_sidecar(&out_dir.join("split"))?;
    Ok(ExitCode::SUCCESS)
}

fn synth(config: Option<&Path>, seed: Option<u64>, documents: Option<usize>, out: &Path) -> Result<ExitCode> {
    let mut cfg: SynthConfig = match config {
        Some(p) => {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = documents {
        cfg.documents = n;
    }
    let corpus = generate_corpus(&cfg)?;
    save(out, corpus.documents)?;
    let mut manifest = RunManifest::new("synth", &serde_json::to_value(&cfg)?).seed("synth", cfg.seed);
    if let Some(p) = config {
        manifest = manifest.input(p);
    }
    manifest.output(out).write_sidecar(out)?;
    info!("generated {} entities and {} relations", corpus.stats.entities, corpus.stats.relations());
    Ok(ExitCode::SUCCESS)
}

type Predictor = fn(&PredictArgs, &[Document]) -> Result<Vec<Document>>;

fn predict(command: &str, args: &PredictArgs, predictor: Predictor) -> Result<ExitCode> {
    let docs = load(&args.corpus, false)?;
    let out = predictor(args, &docs)?;
    save(&args.out, out)?;
    let options = json!({
        "system": args.system,
        "decoder": args.decoder,
        "seed": args.seed,
        "sigma": args.sigma,
    });
    let mut manifest = RunManifest::new(command, &options).seed("system", args.seed).input(&args.corpus);
    if let Some(t) = &args.train {
        manifest = manifest.input(t);
    }
    manifest.output(&args.out).write_sidecar(&args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: &PredictArgs, docs: &[Document]) -> Result<OracleScorer> {
    Ok(OracleScorer::new(docs, OracleScorerConfig { sigma: args.sigma, seed: args.seed })?)
}

fn unsupported(task: &str, system: System) -> anyhow::Error {
    anyhow::anyhow!("system `{}` does not apply to {task}", serde_json::to_value(system).unwrap_or_default().as_str().unwrap_or("?"))
}

fn predict_vsp_docs(args: &PredictArgs, docs: &[Document]) -> Result<Vec<Document>> {
    let predictions: Vec<vsp::VspPrediction> = match args.system {
        System::Majority => {
            let baseline = match &args.train {
                Some(t) => MajorityBaseline::from_documents(&load(t, false)?)?,
                None => MajorityBaseline::from_documents(docs)?,
            };
            info!("majority labels: {} / {}", baseline.mention, baseline.entity);
            docs.iter().map(|d| baseline.predict(d)).collect()
        }
        System::Oracle => {
            let o = oracle(args, docs)?;
            docs.iter()
                .map(|d| vsp::predict(&o, d).with_context(|| format!("document `{}`", d.id)))
                .collect::<Result<_>>()?
        }
        other => return Err(unsupported("visit status prediction", other)),
    };
    Ok(docs
        .iter()
        .zip(predictions)
        .map(|(d, p)| {
            let mut out = p.apply_to(d);
            out.graph = None;
            out
        })
        .collect())
}

fn predict_irp_docs(args: &PredictArgs, docs: &[Document]) -> Result<Vec<Document>> {
    let oracle_scorer = match args.system {
        System::Oracle => Some(oracle(args, docs)?),
        _ => None,
    };
    let heuristic = HeuristicParentScorer::default();
    let system = match args.system {
        System::Flat => IrpSystem::Flat,
        System::Random => IrpSystem::Random { seed: args.seed },
        System::Oracle => IrpSystem::Scored(oracle_scorer.as_ref().expect("built above")),
        System::Heuristic => IrpSystem::Scored(&heuristic),
        other => return Err(unsupported("inclusion relation prediction", other)),
    };
    docs.iter()
        .map(|d| {
            let nodes = d.graph_nodes();
            let parents = predict_irp(d, &nodes, system).with_context(|| format!("document `{}`", d.id))?;
            let overlap = d.graph.as_ref().map(|g| g.overlap.clone()).unwrap_or_default();
            let mut out = d.clone();
            out.graph = Some(prediction_edges(&parents, &SuccessorAssignment::new(), overlap));
            Ok(out)
        })
        .collect()
}

fn predict_trp_docs(args: &PredictArgs, docs: &[Document]) -> Result<Vec<Document>> {
    let oracle_scorer = match args.system {
        System::Oracle => Some(oracle(args, docs)?),
        _ => None,
    };
    let decoder = Decoder::from(args.decoder);
    let system = match args.system {
        System::Random => TrpSystem::Random { seed: args.seed },
        System::OccorderEm => TrpSystem::OccOrder(OccStrategy::EarliestMention),
        System::OccorderVs => TrpSystem::OccOrder(OccStrategy::VisitStatus),
        System::Oracle => TrpSystem::Scored { scorer: oracle_scorer.as_ref().expect("built above"), decoder },
        System::Heuristic => TrpSystem::Scored { scorer: &ProximitySuccessorScorer, decoder },
        other => return Err(unsupported("transition relation prediction", other)),
    };
    docs.iter()
        .map(|d| {
            let g = gold_graph(d)?;
            let parents = g.parent_assignment();
            let successors = predict_trp(d, &parents, &g.overlap_shadows(), system)
                .with_context(|| format!("document `{}`", d.id))?;
            let overlap = d.graph.as_ref().map(|e| e.overlap.clone()).unwrap_or_default();
            let mut out = d.clone();
            out.graph = Some(prediction_edges(&parents, &successors, overlap));
            Ok(out)
        })
        .collect()
}

/// Gold and predicted documents paired by id, in id order.
fn pair_up<'a>(gold: &'a [Document], pred: &'a [Document]) -> Result<Vec<(&'a Document, &'a Document)>> {
    let g: BTreeMap<&str, &Document> = gold.iter().map(|d| (d.id.as_str(), d)).collect();
    let p: BTreeMap<&str, &Document> = pred.iter().map(|d| (d.id.as_str(), d)).collect();
    if let Some(id) = g.keys().find(|k| !p.contains_key(*k)) {
        bail!("document `{id}` has no prediction");
    }
    if let Some(id) = p.keys().find(|k| !g.contains_key(*k)) {
        bail!("predicted document `{id}` is not in the gold corpus");
    }
    Ok(g.into_iter().map(|(id, d)| (d, p[id])).collect())
}

fn evaluate(gold_path: &Path, pred_path: &Path, task: Task, level: Level, json: bool) -> Result<ExitCode> {
    let gold = load(gold_path, true)?;
    let pred = load(pred_path, false)?;
    let pairs = pair_up(&gold, &pred)?;
    let manifest = RunManifest::new("evaluate", &json!({ "task": task, "level": level }))
        .input(gold_path)
        .input(pred_path);
    let (report_json, text) = match task {
        Task::Vsp => match level {
            Level::Mention => {
                let r = evaluate_vsp(&pooled_mention_labels(&gold), &pooled_mention_labels(&pred))?;
                (serde_json::to_value(&r)?, report::classification_table(&r))
            }
            Level::Entity => {
                let r = evaluate_vsp(&pooled_entity_labels(&gold), &pooled_entity_labels(&pred))?;
                (serde_json::to_value(&r)?, report::classification_table(&r))
            }
        },
        Task::Irp | Task::Trp => {
            let mut tallies = Vec::with_capacity(pairs.len());
            for (g, p) in &pairs {
                let graph = gold_graph(g)?;
                let nodes: Vec<_> = graph.nodes().cloned().collect();
                let Some(edges) = &p.graph else {
                    bail!("predicted document `{}` has no graph", p.id);
                };
                let tally = if task == Task::Irp {
                    irp_tally(&graph, &parents_from_edges(&p.id, &nodes, edges)?)
                } else {
                    trp_tally(&graph, &successors_from_edges(&p.id, &nodes, edges)?, g)
                };
                tallies.push(tally.with_context(|| format!("document `{}`", g.id))?);
            }
            let r = pool_tallies(tallies);
            (serde_json::to_value(&r)?, report::corpus_pair_table(&r))
        }
    };
    if json {
        print_json(&json!({ "manifest": manifest, "task": task, "level": level, "report": report_json }))?;
    } else {
        emit(&format!("{text}\nmanifest {}\n", serde_json::to_string(&manifest)?))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn iaa(a_path: &Path, b_path: &Path, json: bool) -> Result<ExitCode> {
    let a = load(a_path, false)?;
    let b = load(b_path, false)?;
    pair_up(&a, &b)?;
    let relations = |docs: &[Document], inclusion: bool| -> BTreeMap<String, BTreeSet<(String, String)>> {
        docs.iter()
            .map(|d| {
                let set = d
                    .graph
                    .as_ref()
                    .map(|g| {
                        if inclusion {
                            g.inclusion.iter().map(|(p, c)| (p.to_string(), c.to_string())).collect()
                        } else {
                            g.transition.iter().map(|(x, y)| (x.to_string(), y.to_string())).collect()
                        }
                    })
                    .unwrap_or_default();
                (d.id.clone(), set)
            })
            .collect()
    };
    let mut reports: BTreeMap<String, AgreementReport> = BTreeMap::new();
    reports.insert("mention".into(), label_agreement(&pooled_mention_labels(&a), &pooled_mention_labels(&b))?);
    reports.insert("entity".into(), label_agreement(&pooled_entity_labels(&a), &pooled_entity_labels(&b))?);
    reports.insert("inclusion".into(), relation_agreement(&relations(&a, true), &relations(&b, true))?);
    reports.insert("transition".into(), relation_agreement(&relations(&a, false), &relations(&b, false))?);
    let manifest = RunManifest::new("iaa", &json!({})).input(a_path).input(b_path);
    if json {
        print_json(&json!({ "manifest": manifest, "report": reports }))?;
    } else {
        emit(&format!("{}\nmanifest {}\n", report::agreement_table(&reports), serde_json::to_string(&manifest)?))?;
    }
    Ok(ExitCode::SUCCESS)
}
